#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <string_view>

#include "vinpaint/nn/layer_spec.hpp"

namespace vinpaint::nn {

// Named learnable tensors (plus BN running statistics) for one or more networks.
template <typename T>
using ParameterSet = std::map<std::string, Tensor<T>>;

enum class ParamRole { Kernel, Bias, BnScale, BnShift, BnRunningMean, BnRunningVar };

inline const char* role_suffix(ParamRole r) {
  switch (r) {
    case ParamRole::Kernel: return "kernel";
    case ParamRole::Bias: return "bias";
    case ParamRole::BnScale: return "bn_scale";
    case ParamRole::BnShift: return "bn_shift";
    case ParamRole::BnRunningMean: return "bn_running_mean";
    case ParamRole::BnRunningVar: return "bn_running_var";
  }
  return "?";
}

inline std::string layer_prefix(std::string_view net, int number) {
  char buf[16];
  std::snprintf(buf, sizeof buf, ".L%02d.", number);
  return std::string(net) + buf;
}

inline std::string param_name(std::string_view net, int number, ParamRole role) {
  return layer_prefix(net, number) + role_suffix(role);
}

// Running statistics are state, not optimizer variables.
inline bool is_trainable(std::string_view name) {
  return !name.ends_with("bn_running_mean") && !name.ends_with("bn_running_var");
}

inline bool is_kernel(std::string_view name) { return name.ends_with(".kernel"); }

// Stable 64-bit string hash (FNV-1a) for deriving RNG streams from names.
inline std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

// Adds the entries for one layer: He-normal kernel, zero bias, identity BN.
template <typename T>
void init_layer_params(ParameterSet<T>& out, std::string_view net, const LayerSpec& layer, int in_channels,
                       std::mt19937_64& rng) {
  Tensor<T> kernel(kernel_shape(layer, in_channels));
  const double stddev = std::sqrt(2.0 / kernel_fan_in(layer, in_channels));
  std::normal_distribution<double> normal(0.0, stddev);
  for (std::size_t i = 0; i < kernel.size(); ++i) kernel[i] = static_cast<T>(normal(rng));
  out[param_name(net, layer.number, ParamRole::Kernel)] = std::move(kernel);
  out[param_name(net, layer.number, ParamRole::Bias)] = Tensor<T>({layer.out_channels});
  if (layer.has_bn_relu) {
    out[param_name(net, layer.number, ParamRole::BnScale)] = Tensor<T>({layer.out_channels}, T(1));
    out[param_name(net, layer.number, ParamRole::BnShift)] = Tensor<T>({layer.out_channels});
    out[param_name(net, layer.number, ParamRole::BnRunningMean)] = Tensor<T>({layer.out_channels});
    out[param_name(net, layer.number, ParamRole::BnRunningVar)] = Tensor<T>({layer.out_channels}, T(1));
  }
}

template <typename T>
ParameterSet<T> init_params(const NetworkSpec& net, std::uint64_t seed) {
  ParameterSet<T> out;
  auto rng = make_rng(seed, stable_hash(net.name));
  int channels = net.input_channels;
  for (const auto& layer : net.layers) {
    layer.validate();
    init_layer_params(out, net.name, layer, channels, rng);
    channels = layer.out_channels;
  }
  return out;
}

template <typename T>
const Tensor<T>& lookup(const ParameterSet<T>& params, const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw ShapeMismatch("missing parameter " + name);
  return it->second;
}

template <typename U, typename T>
ParameterSet<U> cast_params(const ParameterSet<T>& in) {
  ParameterSet<U> out;
  for (const auto& [k, v] : in) out[k] = v.template cast<U>();
  return out;
}

// Entries of `params` whose names start with prefix.
template <typename T>
ParameterSet<T> select_prefix(const ParameterSet<T>& params, std::string_view prefix) {
  ParameterSet<T> out;
  for (const auto& [k, v] : params)
    if (std::string_view(k).starts_with(prefix)) out[k] = v;
  return out;
}

}  // namespace vinpaint::nn
