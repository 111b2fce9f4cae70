#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "vinpaint/vinpaint.hpp"

namespace vinpaint::testing {

template <typename T>
Tensor<T> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(u(rng));
  return t;
}

inline MaskVolume random_mask(int f, int h, int w, std::mt19937_64& rng, double p = 0.3) {
  MaskVolume m(f, h, w);
  std::bernoulli_distribution b(p);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = b(rng) ? 1 : 0;
  return m;
}

// Relative error with a floor below which both values count as zero.
inline double relative_error(double analytic, double numeric, double floor = 1e-7) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale < floor) return 0.0;
  return std::abs(analytic - numeric) / scale;
}

// Central difference of f with respect to value[i].
template <typename T>
double central_difference(T& value, double eps, const std::function<double()>& f) {
  const T saved = value;
  value = static_cast<T>(saved + eps);
  const double up = f();
  value = static_cast<T>(saved - eps);
  const double down = f();
  value = saved;
  return (up - down) / (2 * eps);
}

// Weighted sum of a tensor, the scalar used for layer gradient checks.
template <typename T>
double weighted_sum(const Tensor<T>& t, const Tensor<T>& weights) {
  double s = 0;
  for (std::size_t i = 0; i < t.size(); ++i) s += static_cast<double>(t[i]) * static_cast<double>(weights[i]);
  return s;
}

}  // namespace vinpaint::testing
