#pragma once

// Strided/dilated 3D convolution and its transpose over (F, H, W, C) tensors,
// implemented as im2col + GEMM. A 2D convolution over a batch of frames is the
// special case with a unit kernel on the frame axis.

#include <Eigen/Core>

#include <algorithm>
#include <cstring>

#include "vinpaint/core/tensor.hpp"

namespace vinpaint::nn {

// Gather geometry along one axis: output index o reads input index
// o * stride - pad + tap * dilation for tap in [0, kernel).
struct AxisGeom {
  int in = 1;
  int out = 1;
  int kernel = 1;
  int stride = 1;
  int dilation = 1;
  int pad = 0;

  friend bool operator==(const AxisGeom&, const AxisGeom&) = default;
};

// "Same" padding: out = ceil(in / stride), padding split with the smaller half first.
inline AxisGeom same_axis(int in, int kernel, int stride, int dilation) {
  AxisGeom a{in, (in + stride - 1) / stride, kernel, stride, dilation, 0};
  const int total = std::max((a.out - 1) * stride + (kernel - 1) * dilation + 1 - in, 0);
  a.pad = total / 2;
  return a;
}

// Geometry of the convolution whose adjoint upsamples `small` to `small * stride`.
inline AxisGeom upsample_axis(int small, int kernel, int stride) {
  AxisGeom a = same_axis(small * stride, kernel, stride, 1);
  assert(a.out == small);
  return a;
}

struct ConvGeometry {
  AxisGeom t, h, w;
  int in_channels = 0;   // channels of the dense (gather-input) side
  int out_channels = 0;  // channels of the strided (gather-output) side

  int taps() const { return t.kernel * h.kernel * w.kernel; }
  std::size_t in_positions() const { return std::size_t(t.in) * h.in * w.in; }
  std::size_t out_positions() const { return std::size_t(t.out) * h.out * w.out; }
  Shape in_shape() const { return {t.in, h.in, w.in, in_channels}; }
  Shape out_shape() const { return {t.out, h.out, w.out, out_channels}; }
};

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

namespace detail {

// Calls fn(out_pos, col_offset, in_pos_or_-1) for every (output position, tap).
template <typename Fn>
void for_each_tap(const ConvGeometry& g, Fn&& fn) {
  std::size_t op = 0;
  for (int ot = 0; ot < g.t.out; ++ot)
    for (int oy = 0; oy < g.h.out; ++oy)
      for (int ox = 0; ox < g.w.out; ++ox, ++op) {
        int tap = 0;
        for (int jt = 0; jt < g.t.kernel; ++jt) {
          const int it = ot * g.t.stride - g.t.pad + jt * g.t.dilation;
          const bool vt = it >= 0 && it < g.t.in;
          for (int jy = 0; jy < g.h.kernel; ++jy) {
            const int iy = oy * g.h.stride - g.h.pad + jy * g.h.dilation;
            const bool vy = vt && iy >= 0 && iy < g.h.in;
            for (int jx = 0; jx < g.w.kernel; ++jx, ++tap) {
              const int ix = ox * g.w.stride - g.w.pad + jx * g.w.dilation;
              const bool valid = vy && ix >= 0 && ix < g.w.in;
              const std::ptrdiff_t ip =
                  valid ? (std::ptrdiff_t(it) * g.h.in + iy) * g.w.in + ix : std::ptrdiff_t(-1);
              fn(op, tap, ip);
            }
          }
        }
      }
}

}  // namespace detail

// cols[out_pos, tap * C + c] = in[gathered position, c] (zero outside the input).
template <typename T>
RowMat<T> im2col(const T* in, int channels, const ConvGeometry& g) {
  const int taps = g.taps();
  RowMat<T> cols(static_cast<Eigen::Index>(g.out_positions()), taps * channels);
  T* base = cols.data();
  const std::size_t row = std::size_t(taps) * channels;
  detail::for_each_tap(g, [&](std::size_t op, int tap, std::ptrdiff_t ip) {
    T* dst = base + op * row + std::size_t(tap) * channels;
    if (ip < 0)
      std::fill(dst, dst + channels, T(0));
    else
      std::memcpy(dst, in + std::size_t(ip) * channels, sizeof(T) * channels);
  });
  return cols;
}

// Adjoint of im2col: scatter-add columns back onto the dense grid.
template <typename T>
void col2im(const RowMat<T>& cols, int channels, const ConvGeometry& g, T* out) {
  const int taps = g.taps();
  const T* base = cols.data();
  const std::size_t row = std::size_t(taps) * channels;
  detail::for_each_tap(g, [&](std::size_t op, int tap, std::ptrdiff_t ip) {
    if (ip < 0) return;
    const T* src = base + op * row + std::size_t(tap) * channels;
    T* dst = out + std::size_t(ip) * channels;
    for (int c = 0; c < channels; ++c) dst[c] += src[c];
  });
}

// Per-channel sums in a fixed order, independent of buffer alignment.
template <typename T>
Tensor<T> channel_sums(const Tensor<T>& t, int channels) {
  Tensor<T> out({channels});
  const std::size_t n = t.size() / static_cast<std::size_t>(channels);
  for (std::size_t p = 0; p < n; ++p)
    for (int c = 0; c < channels; ++c) out[c] += t[p * channels + c];
  return out;
}

template <typename T>
struct ConvGrads {
  Tensor<T> dx;
  Tensor<T> dw;
  Tensor<T> db;
};

// Convolution: x has g.in_shape(), kernel is (kt, kh, kw, Cin, Cout), result g.out_shape().
template <typename T>
Tensor<T> conv_forward(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias,
                       const ConvGeometry& g) {
  if (x.shape() != g.in_shape()) throw ShapeMismatch("conv input " + shape_str(x.shape()) +
                                                     ", expected " + shape_str(g.in_shape()));
  const auto cols = im2col(x.data(), g.in_channels, g);
  ConstMatMap<T> w(kernel.data(), g.taps() * g.in_channels, g.out_channels);
  Tensor<T> y(g.out_shape());
  MatMap<T> ym(y.data(), static_cast<Eigen::Index>(g.out_positions()), g.out_channels);
  ym.noalias() = cols * w;
  ym.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias.data(), g.out_channels);
  return y;
}

template <typename T>
ConvGrads<T> conv_backward(const Tensor<T>& x, const Tensor<T>& kernel, const ConvGeometry& g,
                           const Tensor<T>& dy, bool need_dx = true) {
  const auto cols = im2col(x.data(), g.in_channels, g);
  ConstMatMap<T> dym(dy.data(), static_cast<Eigen::Index>(g.out_positions()), g.out_channels);
  ConstMatMap<T> w(kernel.data(), g.taps() * g.in_channels, g.out_channels);
  ConvGrads<T> out;
  out.dw = Tensor<T>(kernel.shape());
  MatMap<T>(out.dw.data(), w.rows(), w.cols()).noalias() = cols.transpose() * dym;
  out.db = channel_sums(dy, g.out_channels);
  if (need_dx) {
    RowMat<T> dcols = dym * w.transpose();
    out.dx = Tensor<T>(g.in_shape());
    col2im(dcols, g.in_channels, g, out.dx.data());
  }
  return out;
}

// Transposed convolution: the adjoint of the convolution described by g. x has
// g.out_shape() with Cin = g.out_channels, kernel is (kt, kh, kw, Cout, Cin) where
// Cout = g.in_channels, and the result has g.in_shape().
template <typename T>
Tensor<T> deconv_forward(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias,
                         const ConvGeometry& g) {
  if (x.shape() != g.out_shape()) throw ShapeMismatch("deconv input " + shape_str(x.shape()) +
                                                      ", expected " + shape_str(g.out_shape()));
  ConstMatMap<T> xm(x.data(), static_cast<Eigen::Index>(g.out_positions()), g.out_channels);
  ConstMatMap<T> w(kernel.data(), g.taps() * g.in_channels, g.out_channels);
  RowMat<T> cols = xm * w.transpose();
  Tensor<T> y(g.in_shape());
  col2im(cols, g.in_channels, g, y.data());
  MatMap<T> ym(y.data(), static_cast<Eigen::Index>(g.in_positions()), g.in_channels);
  ym.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias.data(), g.in_channels);
  return y;
}

template <typename T>
ConvGrads<T> deconv_backward(const Tensor<T>& x, const Tensor<T>& kernel, const ConvGeometry& g,
                             const Tensor<T>& dy, bool need_dx = true) {
  const auto dcols = im2col(dy.data(), g.in_channels, g);
  ConstMatMap<T> xm(x.data(), static_cast<Eigen::Index>(g.out_positions()), g.out_channels);
  ConstMatMap<T> w(kernel.data(), g.taps() * g.in_channels, g.out_channels);
  ConvGrads<T> out;
  out.dw = Tensor<T>(kernel.shape());
  MatMap<T>(out.dw.data(), w.rows(), w.cols()).noalias() = dcols.transpose() * xm;
  out.db = channel_sums(dy, g.in_channels);
  if (need_dx) {
    out.dx = Tensor<T>(g.out_shape());
    MatMap<T>(out.dx.data(), xm.rows(), xm.cols()).noalias() = dcols * w;
  }
  return out;
}

}  // namespace vinpaint::nn
