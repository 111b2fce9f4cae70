#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <type_traits>
#include <vector>

#include "vinpaint/nn/layer.hpp"

namespace vinpaint::nn {

// Tensors added to the output of the layer with the given number.
template <typename T>
using Injections = std::map<int, Tensor<T>>;

template <typename T>
struct NetworkTrace {
  std::vector<LayerCache<T>> layers;
  std::vector<int> injected;  // layer numbers that received an injection
};

template <typename T>
struct NetworkBackward {
  Tensor<T> input_grad;
  Injections<T> injection_grads;
};

// Runs the layer stack. The value passed on from layer i is its activation plus,
// where applicable, the skip from its encoder partner and any injection.
template <typename T>
Tensor<T> forward_network(const NetworkSpec& net, const ParameterSet<T>& params, const Tensor<T>& x,
                          BnMode mode, const std::type_identity_t<Injections<T>>* injections = nullptr,
                          std::type_identity_t<NetworkTrace<T>>* trace = nullptr) {
  if (x.rank() != 4 || x.channels() != net.input_channels)
    throw ShapeMismatch(net.name + " expects " + std::to_string(net.input_channels) +
                        "-channel 4-axis input, got " + shape_str(x.shape()));
  std::map<int, Tensor<T>> encoder_out;
  std::map<int, int> decoder_of;
  for (const auto& [enc, dec] : net.skips) decoder_of[dec] = enc;
  std::set<int> encoders;
  for (const auto& [enc, dec] : net.skips) encoders.insert(enc);

  if (trace) {
    trace->layers.assign(net.layers.size(), {});
    trace->injected.clear();
  }
  Tensor<T> cur = x;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& layer = net.layers[i];
    cur = apply_layer(layer, params, net.name, cur, mode, trace ? &trace->layers[i] : nullptr);
    if (auto it = decoder_of.find(layer.number); it != decoder_of.end())
      cur += encoder_out.at(it->second);
    if (injections) {
      if (auto it = injections->find(layer.number); it != injections->end()) {
        cur += it->second;
        if (trace) trace->injected.push_back(layer.number);
      }
    }
    if (encoders.count(layer.number)) encoder_out[layer.number] = cur;
  }
  return cur;
}

template <typename T>
NetworkBackward<T> backward_network(const NetworkSpec& net, const ParameterSet<T>& params,
                                    const NetworkTrace<T>& trace, const Tensor<T>& dout,
                                    Gradients<T>& grads, bool need_input_grad = true) {
  std::map<int, int> decoder_of;
  for (const auto& [enc, dec] : net.skips) decoder_of[dec] = enc;
  std::map<int, Tensor<T>> pending;
  NetworkBackward<T> result;
  Tensor<T> g = dout;
  for (std::size_t i = net.layers.size(); i-- > 0;) {
    const auto& layer = net.layers[i];
    if (auto it = pending.find(layer.number); it != pending.end()) g += it->second;
    if (std::find(trace.injected.begin(), trace.injected.end(), layer.number) != trace.injected.end())
      result.injection_grads[layer.number] = g;
    if (auto it = decoder_of.find(layer.number); it != decoder_of.end()) {
      auto [p, inserted] = pending.try_emplace(it->second, g);
      if (!inserted) p->second += g;
    }
    g = layer_backward(layer, params, net.name, trace.layers[i], g, grads, i > 0 || need_input_grad);
  }
  result.input_grad = std::move(g);
  return result;
}

template <typename T>
void update_running_stats(const NetworkSpec& net, ParameterSet<T>& params, const NetworkTrace<T>& trace) {
  for (std::size_t i = 0; i < net.layers.size(); ++i)
    update_running_stats(net.layers[i], params, net.name, trace.layers[i]);
}

}  // namespace vinpaint::nn
