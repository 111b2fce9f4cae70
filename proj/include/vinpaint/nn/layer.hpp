#pragma once

#include <cmath>
#include <optional>
#include <type_traits>
#include <string>
#include <vector>

#include "vinpaint/nn/conv.hpp"
#include "vinpaint/nn/layer_spec.hpp"
#include "vinpaint/nn/params.hpp"

namespace vinpaint::nn {

// Train: normalize with batch statistics. Eval: normalize with running statistics.
enum class BnMode { Train, Eval };

inline constexpr double kBnEpsilon = 1e-5;
inline constexpr double kBnMomentum = 0.9;

// Everything the backward pass needs from one forward application.
template <typename T>
struct LayerCache {
  ConvGeometry geom;
  Tensor<T> input;
  Tensor<T> conv_out;
  Tensor<T> output;
  std::vector<T> mean;    // per-channel statistic used for normalization
  std::vector<T> invstd;  // 1 / sqrt(var + eps)
  std::vector<T> batch_var_unbiased;
  BnMode mode = BnMode::Train;
};

template <typename T>
using Gradients = ParameterSet<T>;

template <typename T>
void accumulate(Gradients<T>& grads, const std::string& name, Tensor<T>&& g) {
  auto it = grads.find(name);
  if (it == grads.end())
    grads.emplace(name, std::move(g));
  else
    it->second += g;
}

// Convolution (or transposed convolution) with same padding, then BN + ReLU when
// the layer has them. When `cache` is non-null it receives what backward needs.
template <typename T>
Tensor<T> apply_layer(const LayerSpec& spec, const ParameterSet<T>& params, const std::string& net,
                      const Tensor<T>& x, BnMode mode, std::type_identity_t<LayerCache<T>>* cache = nullptr) {
  const ConvGeometry g = layer_geometry(spec, x.shape());
  const auto& kernel = lookup(params, param_name(net, spec.number, ParamRole::Kernel));
  const auto& bias = lookup(params, param_name(net, spec.number, ParamRole::Bias));
  const int in_c = x.channels();
  if (kernel.shape() != kernel_shape(spec, in_c))
    throw ShapeMismatch(net + " layer " + std::to_string(spec.number) + " kernel " +
                        shape_str(kernel.shape()) + " does not fit input " + shape_str(x.shape()));

  Tensor<T> y = spec.kind == LayerKind::DeconvUp ? deconv_forward(x, kernel, bias, g)
                                                 : conv_forward(x, kernel, bias, g);
  if (cache) {
    cache->geom = g;
    cache->input = x;
    cache->mode = mode;
  }
  if (!spec.has_bn_relu) {
    if (cache) cache->output = y;
    return y;
  }

  const int c = spec.out_channels;
  const std::size_t n = y.size() / static_cast<std::size_t>(c);
  std::vector<T> mean(c, T(0)), invstd(c), var_unbiased(c, T(0));
  if (mode == BnMode::Train) {
    std::vector<double> sum(c, 0.0), sq(c, 0.0);
    for (std::size_t p = 0; p < n; ++p)
      for (int k = 0; k < c; ++k) sum[k] += static_cast<double>(y[p * c + k]);
    for (int k = 0; k < c; ++k) mean[k] = static_cast<T>(sum[k] / static_cast<double>(n));
    for (std::size_t p = 0; p < n; ++p)
      for (int k = 0; k < c; ++k) {
        const double d = static_cast<double>(y[p * c + k]) - static_cast<double>(mean[k]);
        sq[k] += d * d;
      }
    for (int k = 0; k < c; ++k) {
      invstd[k] = static_cast<T>(1.0 / std::sqrt(sq[k] / static_cast<double>(n) + kBnEpsilon));
      var_unbiased[k] = static_cast<T>(n > 1 ? sq[k] / static_cast<double>(n - 1) : 0.0);
    }
  } else {
    const auto& rm = lookup(params, param_name(net, spec.number, ParamRole::BnRunningMean));
    const auto& rv = lookup(params, param_name(net, spec.number, ParamRole::BnRunningVar));
    for (int k = 0; k < c; ++k) {
      mean[k] = rm[k];
      invstd[k] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(rv[k]) + kBnEpsilon));
    }
  }
  const auto& scale = lookup(params, param_name(net, spec.number, ParamRole::BnScale));
  const auto& shift = lookup(params, param_name(net, spec.number, ParamRole::BnShift));
  Tensor<T> out(y.shape());
  for (std::size_t p = 0; p < n; ++p)
    for (int k = 0; k < c; ++k) {
      const T v = (y[p * c + k] - mean[k]) * invstd[k] * scale[k] + shift[k];
      out[p * c + k] = v > T(0) ? v : T(0);
    }
  if (cache) {
    cache->conv_out = std::move(y);
    cache->output = out;
    cache->mean = std::move(mean);
    cache->invstd = std::move(invstd);
    cache->batch_var_unbiased = std::move(var_unbiased);
  }
  return out;
}

// Folds the batch statistics recorded in a train-mode cache into the running averages.
template <typename T>
void update_running_stats(const LayerSpec& spec, ParameterSet<T>& params, const std::string& net,
                          const LayerCache<T>& cache) {
  if (!spec.has_bn_relu || cache.mode != BnMode::Train) return;
  auto& rm = params.at(param_name(net, spec.number, ParamRole::BnRunningMean));
  auto& rv = params.at(param_name(net, spec.number, ParamRole::BnRunningVar));
  const T m = static_cast<T>(kBnMomentum);
  for (int k = 0; k < spec.out_channels; ++k) {
    rm[k] = m * rm[k] + (T(1) - m) * cache.mean[k];
    rv[k] = m * rv[k] + (T(1) - m) * cache.batch_var_unbiased[k];
  }
}

// Backpropagates dout through the layer, accumulating parameter gradients into
// `grads`; returns the gradient with respect to the layer input (empty if !need_dx).
template <typename T>
Tensor<T> layer_backward(const LayerSpec& spec, const ParameterSet<T>& params, const std::string& net,
                         const LayerCache<T>& cache, const Tensor<T>& dout, Gradients<T>& grads,
                         bool need_dx = true) {
  cache.output.require_same_shape(dout, "layer_backward");
  Tensor<T> dy;
  if (spec.has_bn_relu) {
    const int c = spec.out_channels;
    const std::size_t n = dout.size() / static_cast<std::size_t>(c);
    const auto& scale = lookup(params, param_name(net, spec.number, ParamRole::BnScale));
    const auto& y = cache.conv_out;
    std::vector<double> dscale(c, 0.0), dshift(c, 0.0);
    Tensor<T> dnorm(dout.shape());  // gradient w.r.t. the normalized value xhat
    for (std::size_t p = 0; p < n; ++p)
      for (int k = 0; k < c; ++k) {
        const std::size_t i = p * c + k;
        const T g = cache.output[i] > T(0) ? dout[i] : T(0);
        const T xhat = (y[i] - cache.mean[k]) * cache.invstd[k];
        dscale[k] += static_cast<double>(g * xhat);
        dshift[k] += static_cast<double>(g);
        dnorm[i] = g * scale[k];
      }
    dy = Tensor<T>(dout.shape());
    if (cache.mode == BnMode::Train) {
      std::vector<double> sum_d(c, 0.0), sum_dx(c, 0.0);
      for (std::size_t p = 0; p < n; ++p)
        for (int k = 0; k < c; ++k) {
          const std::size_t i = p * c + k;
          const double xhat = static_cast<double>((y[i] - cache.mean[k]) * cache.invstd[k]);
          sum_d[k] += static_cast<double>(dnorm[i]);
          sum_dx[k] += static_cast<double>(dnorm[i]) * xhat;
        }
      const double inv_n = 1.0 / static_cast<double>(n);
      for (std::size_t p = 0; p < n; ++p)
        for (int k = 0; k < c; ++k) {
          const std::size_t i = p * c + k;
          const double xhat = static_cast<double>((y[i] - cache.mean[k]) * cache.invstd[k]);
          dy[i] = static_cast<T>(static_cast<double>(cache.invstd[k]) *
                                 (static_cast<double>(dnorm[i]) - inv_n * sum_d[k] - xhat * inv_n * sum_dx[k]));
        }
    } else {
      for (std::size_t p = 0; p < n; ++p)
        for (int k = 0; k < c; ++k) dy[p * c + k] = dnorm[p * c + k] * cache.invstd[k];
    }
    Tensor<T> gs({c}), gb({c});
    for (int k = 0; k < c; ++k) {
      gs[k] = static_cast<T>(dscale[k]);
      gb[k] = static_cast<T>(dshift[k]);
    }
    accumulate(grads, param_name(net, spec.number, ParamRole::BnScale), std::move(gs));
    accumulate(grads, param_name(net, spec.number, ParamRole::BnShift), std::move(gb));
  } else {
    dy = dout;
  }

  const auto& kernel = lookup(params, param_name(net, spec.number, ParamRole::Kernel));
  ConvGrads<T> cg = spec.kind == LayerKind::DeconvUp
                        ? deconv_backward(cache.input, kernel, cache.geom, dy, need_dx)
                        : conv_backward(cache.input, kernel, cache.geom, dy, need_dx);
  accumulate(grads, param_name(net, spec.number, ParamRole::Kernel), std::move(cg.dw));
  accumulate(grads, param_name(net, spec.number, ParamRole::Bias), std::move(cg.db));
  return std::move(cg.dx);
}

// Elementwise sum used for U-Net skips and guidance fusion.
template <typename T>
Tensor<T> additive_skip(const Tensor<T>& encoder_out, const Tensor<T>& decoder_out) {
  encoder_out.require_same_shape(decoder_out, "additive_skip");
  return encoder_out + decoder_out;
}

}  // namespace vinpaint::nn
