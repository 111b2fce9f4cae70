#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vinpaint/core/tensor.hpp"
#include "vinpaint/nn/conv.hpp"

namespace vinpaint::nn {

enum class LayerKind { Conv, ConvDown, DeconvUp, DilatedConv };
enum class Dims { D2, D3 };

inline const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Conv: return "conv";
    case LayerKind::ConvDown: return "conv_down";
    case LayerKind::DeconvUp: return "deconv_up";
    case LayerKind::DilatedConv: return "dilated_conv";
  }
  return "?";
}

// One convolutional layer. `stride` and `dilation` act on H and W only;
// `frame_stride` is the stride (or upsampling factor) on the frame axis and is
// 1 everywhere except the temporally strided 3D variant.
struct LayerSpec {
  int number = 0;  // 1-based position in the published layer table
  LayerKind kind = LayerKind::Conv;
  Dims dims = Dims::D2;
  int kernel = 3;
  int stride = 1;
  int out_channels = 0;
  int dilation = 1;
  bool has_bn_relu = true;
  int frame_stride = 1;

  int frame_kernel() const { return dims == Dims::D3 ? kernel : 1; }

  // Spatial extent covered by one application of the kernel.
  int effective_extent() const { return (kernel - 1) * dilation + 1; }

  void validate() const {
    const std::string where = "layer " + std::to_string(number) + ": ";
    if (stride != 1 && stride != 2) throw InvalidConfig(where + "stride must be 1 or 2");
    if (frame_stride != 1 && frame_stride != 2) throw InvalidConfig(where + "frame stride must be 1 or 2");
    if (frame_stride == 2 && dims != Dims::D3) throw InvalidConfig(where + "frame stride needs a 3D layer");
    if (dilation < 1) throw InvalidConfig(where + "dilation must be >= 1");
    if (kind == LayerKind::DilatedConv && stride != 1) throw InvalidConfig(where + "dilated conv must have stride 1");
    if (kernel < 3 || kernel > 5) throw InvalidConfig(where + "kernel must be 3, 4 or 5");
    if (out_channels < 1) throw InvalidConfig(where + "out_channels must be positive");
    if ((kind == LayerKind::Conv || kind == LayerKind::DilatedConv) && frame_stride != 1)
      throw InvalidConfig(where + "only strided layers may stride the frame axis");
  }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// Ordered layers plus U-Net skips given as (encoder layer number, decoder layer number):
// the encoder layer's output is added to the decoder layer's output.
struct NetworkSpec {
  std::string name;
  std::vector<LayerSpec> layers;
  std::set<std::pair<int, int>> skips;
  int input_channels = 0;

  // Position of the layer with the given number, or -1.
  int position_of(int number) const {
    for (std::size_t i = 0; i < layers.size(); ++i)
      if (layers[i].number == number) return static_cast<int>(i);
    return -1;
  }
};

inline ConvGeometry layer_geometry(const LayerSpec& spec, const Shape& in) {
  if (in.size() != 4) throw ShapeMismatch("layer input must be 4-axis, got " + shape_str(in));
  const int f = in[0], h = in[1], w = in[2], c = in[3];
  ConvGeometry g;
  const bool is3d = spec.dims == Dims::D3;
  if (spec.kind == LayerKind::DeconvUp) {
    g.t = is3d ? upsample_axis(f, spec.kernel, spec.frame_stride) : AxisGeom{f, f, 1, 1, 1, 0};
    g.h = upsample_axis(h, spec.kernel, spec.stride);
    g.w = upsample_axis(w, spec.kernel, spec.stride);
    g.in_channels = spec.out_channels;
    g.out_channels = c;
  } else {
    if (spec.kind == LayerKind::ConvDown) {
      if (h % spec.stride || w % spec.stride || f % spec.frame_stride)
        throw IndivisibleSize("layer " + std::to_string(spec.number) + " cannot stride " + shape_str(in));
    }
    g.t = is3d ? same_axis(f, spec.kernel, spec.frame_stride, 1) : AxisGeom{f, f, 1, 1, 1, 0};
    g.h = same_axis(h, spec.kernel, spec.stride, spec.dilation);
    g.w = same_axis(w, spec.kernel, spec.stride, spec.dilation);
    g.in_channels = c;
    g.out_channels = spec.out_channels;
  }
  return g;
}

inline Shape layer_output_shape(const LayerSpec& spec, const Shape& in) {
  const auto g = layer_geometry(spec, in);
  return spec.kind == LayerKind::DeconvUp ? g.in_shape() : g.out_shape();
}

// Kernel tensor shape: (kt, kh, kw, Cin, Cout) for convolutions and
// (kt, kh, kw, Cout, Cin) for transposed convolutions.
inline Shape kernel_shape(const LayerSpec& spec, int in_channels) {
  const int kt = spec.frame_kernel();
  if (spec.kind == LayerKind::DeconvUp) return {kt, spec.kernel, spec.kernel, spec.out_channels, in_channels};
  return {kt, spec.kernel, spec.kernel, in_channels, spec.out_channels};
}

inline int kernel_fan_in(const LayerSpec& spec, int in_channels) {
  return spec.frame_kernel() * spec.kernel * spec.kernel * in_channels;
}

// Output shape of every layer for the given input; checks skip compatibility.
inline std::vector<Shape> trace_shapes(const NetworkSpec& net, const Shape& input) {
  if (input.size() != 4 || input[3] != net.input_channels)
    throw ShapeMismatch(net.name + " expects " + std::to_string(net.input_channels) +
                        " input channels, got " + shape_str(input));
  std::vector<Shape> shapes;
  Shape cur = input;
  for (const auto& l : net.layers) {
    l.validate();
    cur = layer_output_shape(l, cur);
    shapes.push_back(cur);
  }
  for (const auto& [enc, dec] : net.skips) {
    const int pe = net.position_of(enc), pd = net.position_of(dec);
    if (pe < 0 || pd < 0 || pe >= pd) throw InvalidConfig(net.name + ": bad skip pair");
    if (shapes[pe] != shapes[pd])
      throw ShapeMismatch(net.name + ": skip " + std::to_string(enc) + "->" + std::to_string(dec) +
                          " joins " + shape_str(shapes[pe]) + " and " + shape_str(shapes[pd]));
  }
  return shapes;
}

}  // namespace vinpaint::nn
