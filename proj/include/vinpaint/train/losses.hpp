#pragma once

// Mask-weighted l1 losses on the [0, 255] reporting scale: the mean absolute
// error per hole pixel per channel, times 255.

#include <cmath>
#include <vector>

#include "vinpaint/core/volume.hpp"

namespace vinpaint::train {

inline constexpr double kPixelScale = 255.0;

namespace detail {

template <typename T>
T sign(T v) {
  return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0));
}

// Masked l1 over frames [first, first + count), normalized by hole pixels x channels.
template <typename T>
double masked_l1(const Tensor<T>& out, const MaskVolume& mask, const Tensor<T>& target, int first, int count,
                 double weight, Tensor<T>* grad) {
  const int c = out.channels();
  const std::size_t per = static_cast<std::size_t>(mask.height()) * mask.width();
  std::size_t holes = 0;
  for (int f = first; f < first + count; ++f) holes += mask.frame_count(f);
  if (holes == 0) return 0.0;
  const double denom = static_cast<double>(holes) * c;
  const double norm = kPixelScale / denom;
  long double sum = 0;
  for (std::size_t p = first * per; p < (first + count) * per; ++p) {
    if (!mask[p]) continue;
    for (int k = 0; k < c; ++k) {
      const T d = out[p * c + k] - target[p * c + k];
      sum += std::abs(static_cast<long double>(d));
      if (grad) (*grad)[p * c + k] += static_cast<T>(weight * norm) * sign(d);
    }
  }
  // Extended accumulation and dividing before scaling keep a constant
  // difference c exact on small volumes: (c * n) / n == c.
  return static_cast<double>(sum / static_cast<long double>(denom)) * kPixelScale;
}

template <typename T>
void check_shapes(const Tensor<T>& out, const MaskVolume& mask, const Tensor<T>& target, const char* where) {
  out.require_same_shape(target, where);
  require_same_grid(out, mask, where);
}

}  // namespace detail

// ||M (.) (out - target)||_1 / (||M||_1 * C), scaled by 255. When `grad` is given,
// weight * dL/d(out) is added to it.
template <typename T>
double loss_3dcn(const Tensor<T>& out, const MaskVolume& mask, const Tensor<T>& target, Tensor<T>* grad = nullptr,
                 double weight = 1.0) {
  detail::check_shapes(out, mask, target, "loss_3dcn");
  if (mask.count() == 0) throw EmptyMask("3D loss needs at least one hole pixel");
  if (grad) out.require_same_shape(*grad, "loss_3dcn gradient");
  return detail::masked_l1(out, mask, target, 0, out.frames(), weight, grad);
}

// Per-frame normalized masked l1, averaged over the frames that have a hole.
template <typename T>
double loss_combcn(const Tensor<T>& out, const MaskVolume& mask, const Tensor<T>& target, Tensor<T>* grad = nullptr,
                   double weight = 1.0) {
  detail::check_shapes(out, mask, target, "loss_combcn");
  if (grad) out.require_same_shape(*grad, "loss_combcn gradient");
  std::vector<int> valid;
  for (int f = 0; f < out.frames(); ++f)
    if (mask.frame_count(f)) valid.push_back(f);
  if (valid.empty()) throw EmptyMask("every frame mask is empty");
  const double w = weight / static_cast<double>(valid.size());
  long double total = 0;
  for (int f : valid) total += detail::masked_l1(out, mask, target, f, 1, w, grad);
  return static_cast<double>(total / static_cast<long double>(valid.size()));
}

// Per-frame values of the CombCN loss (NaN for frames without a hole).
template <typename T>
std::vector<double> per_frame_l1(const Tensor<T>& out, const MaskVolume& mask, const Tensor<T>& target) {
  detail::check_shapes(out, mask, target, "per_frame_l1");
  std::vector<double> v;
  for (int f = 0; f < out.frames(); ++f)
    v.push_back(mask.frame_count(f) ? detail::masked_l1<T>(out, mask, target, f, 1, 0.0, nullptr) : std::nan(""));
  return v;
}

inline double loss_total(double loss_3d, double loss_comb, double alpha) { return loss_3d + alpha * loss_comb; }

}  // namespace vinpaint::train
