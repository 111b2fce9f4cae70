#pragma once

// 12-layer 3D completion network: infers temporal structure on a
// downsampled, pre-filled video volume.

#include <algorithm>
#include <string>
#include <vector>

#include "vinpaint/data/pipeline.hpp"
#include "vinpaint/nn/network.hpp"

namespace vinpaint::models {

enum class VariantTag { Base, V1, V2 };

// BASE: r = 2. V1: r = 4 (32^3 volume for 128^2 frames). V2: r = 2 with
// strided convolution across the frame axis in layers 2 and 4.
struct Variant3D {
  VariantTag tag = VariantTag::Base;

  int rate() const { return tag == VariantTag::V1 ? 4 : 2; }
  bool temporal_stride() const { return tag == VariantTag::V2; }

  friend bool operator==(const Variant3D&, const Variant3D&) = default;
};

inline const char* to_string(VariantTag t) {
  switch (t) {
    case VariantTag::Base: return "base";
    case VariantTag::V1: return "v1";
    case VariantTag::V2: return "v2";
  }
  return "?";
}

inline VariantTag parse_variant(const std::string& s) {
  if (s == "base") return VariantTag::Base;
  if (s == "v1") return VariantTag::V1;
  if (s == "v2") return VariantTag::V2;
  throw InvalidConfig("unknown variant '" + s + "'");
}

// Shrinks the published networks for small-scale runs. `width_divisor` divides
// every channel count except the 3-channel output; `layers`, when non-empty,
// keeps only the listed layer numbers.
struct NetOptions {
  int width_divisor = 1;
  std::vector<int> layers;

  friend bool operator==(const NetOptions&, const NetOptions&) = default;
};

namespace detail {

using nn::Dims;
using nn::LayerKind;
using nn::LayerSpec;

inline LayerSpec row(int number, LayerKind kind, Dims dims, int kernel, int stride, int channels,
                     int dilation = 1, bool bn_relu = true) {
  LayerSpec l;
  l.number = number;
  l.kind = kind;
  l.dims = dims;
  l.kernel = kernel;
  l.stride = stride;
  l.out_channels = channels;
  l.dilation = dilation;
  l.has_bn_relu = bn_relu;
  return l;
}

inline nn::NetworkSpec apply_options(nn::NetworkSpec net, const NetOptions& opt) {
  if (opt.width_divisor < 1) throw InvalidConfig("width_divisor must be >= 1");
  for (auto& l : net.layers)
    if (l.has_bn_relu) l.out_channels = std::max(1, l.out_channels / opt.width_divisor);
  if (!opt.layers.empty()) {
    std::vector<LayerSpec> kept;
    for (const auto& l : net.layers)
      if (std::find(opt.layers.begin(), opt.layers.end(), l.number) != opt.layers.end()) kept.push_back(l);
    if (kept.size() != opt.layers.size()) throw InvalidConfig(net.name + ": layer subset names unknown layers");
    net.layers = std::move(kept);
    std::set<std::pair<int, int>> skips;
    for (const auto& s : net.skips)
      if (net.position_of(s.first) >= 0 && net.position_of(s.second) >= 0) skips.insert(s);
    net.skips = std::move(skips);
  }
  return net;
}

}  // namespace detail

inline constexpr const char* k3dName = "g3d";

inline nn::NetworkSpec build_3dcn(Variant3D variant, const NetOptions& opt = {}) {
  using nn::Dims;
  using nn::LayerKind;
  using detail::row;
  constexpr auto D3 = Dims::D3;
  nn::NetworkSpec net;
  net.name = k3dName;
  net.input_channels = 4;
  net.layers = {
      row(1, LayerKind::Conv, D3, 5, 1, 16),
      row(2, LayerKind::ConvDown, D3, 3, 2, 32),
      row(3, LayerKind::Conv, D3, 3, 1, 64),
      row(4, LayerKind::ConvDown, D3, 3, 2, 128),
      row(5, LayerKind::DilatedConv, D3, 3, 1, 256, 2),
      row(6, LayerKind::DilatedConv, D3, 3, 1, 256, 4),
      row(7, LayerKind::DilatedConv, D3, 3, 1, 256, 8),
      row(8, LayerKind::Conv, D3, 3, 1, 128),
      row(9, LayerKind::DeconvUp, D3, 4, 2, 64),
      row(10, LayerKind::Conv, D3, 3, 1, 32),
      row(11, LayerKind::DeconvUp, D3, 4, 2, 16),
      row(12, LayerKind::Conv, D3, 3, 1, 3, 1, false),
  };
  if (variant.temporal_stride())
    for (int n : {2, 4, 9, 11}) net.layers[static_cast<std::size_t>(n - 1)].frame_stride = 2;
  net.skips = {{1, 11}, {3, 9}};
  return detail::apply_options(std::move(net), opt);
}

// G_v(V_in^d, M^d): pre-filled low-resolution video plus its mask to an
// inpainted low-resolution video.
template <typename T>
Tensor<T> forward_3dcn(const nn::NetworkSpec& net, const nn::ParameterSet<T>& params, const Tensor<T>& lowres_video,
                       const MaskVolume& lowres_mask, nn::BnMode mode = nn::BnMode::Eval,
                       nn::NetworkTrace<T>* trace = nullptr) {
  return nn::forward_network(net, params, data::assemble_input(lowres_video, lowres_mask), mode, nullptr, trace);
}

}  // namespace vinpaint::models
