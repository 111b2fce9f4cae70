#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "vinpaint/nn/params.hpp"

namespace vinpaint::train {

// Adam with decoupled weight decay applied to convolution kernels.
struct AdamConfig {
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // Updates every trainable entry of `params` that has a gradient and passes `filter`.
  void step(nn::ParameterSet<T>& params, const nn::ParameterSet<T>& grads,
            const std::function<bool(const std::string&)>& filter = {}) {
    for (const auto& [name, g] : grads) {
      if (!nn::is_trainable(name) || (filter && !filter(name))) continue;
      auto& p = params.at(name);
      p.require_same_shape(g, "adam step");
      auto& m = moments_[name + "/m"];
      auto& v = moments_[name + "/v"];
      auto& t = moments_[name + "/t"];
      if (m.empty()) {
        m = Tensor<T>(p.shape());
        v = Tensor<T>(p.shape());
        t = Tensor<T>({1});
      }
      t[0] += T(1);
      const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t[0]));
      const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t[0]));
      const double decay = nn::is_kernel(name) ? cfg_.weight_decay : 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double gi = static_cast<double>(g[i]);
        const double mi = cfg_.beta1 * m[i] + (1 - cfg_.beta1) * gi;
        const double vi = cfg_.beta2 * v[i] + (1 - cfg_.beta2) * gi * gi;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        const double update = (mi / c1) / (std::sqrt(vi / c2) + cfg_.epsilon) + decay * p[i];
        p[i] = static_cast<T>(p[i] - cfg_.learning_rate * update);
      }
    }
  }

  // Optimizer state as named tensors ("<param>/m", "/v", "/t") for checkpointing.
  const nn::ParameterSet<T>& state() const { return moments_; }
  void set_state(nn::ParameterSet<T> s) { moments_ = std::move(s); }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  nn::ParameterSet<T> moments_;
};

}  // namespace vinpaint::train
