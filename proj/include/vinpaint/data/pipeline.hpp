#pragma once

// Sample preparation: frame grouping, crop/resize, hole synthesis, pre-filling,
// network-input assembly and spatial downsampling.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "vinpaint/core/volume.hpp"
#include "vinpaint/nn/params.hpp"

namespace vinpaint::data {

using Rgb = std::array<float, 3>;

// H x W x C frame with values in [0, 1].
using Image = Tensor<float>;

enum class CropMode { CenterSquare, None };

struct PipelineConfig {
  int sample_frames = 32;
  int target_size = 128;
  int downsample_rate = 2;
  double hole_lo_frac = 0.375;
  double hole_hi_frac = 0.5;
  CropMode crop_mode = CropMode::CenterSquare;
  std::pair<int, int> split_ratio{5, 1};
  Rgb mean_pixel{0.5f, 0.5f, 0.5f};

  void validate() const {
    if (sample_frames < 1) throw InvalidConfig("sample_frames must be >= 1");
    if (target_size < 8) throw InvalidConfig("target_size must be >= 8");
    if (downsample_rate < 1 || target_size % downsample_rate)
      throw IndivisibleSize("downsample rate " + std::to_string(downsample_rate) + " does not divide " +
                            std::to_string(target_size));
    if (!(0.0 < hole_lo_frac && hole_lo_frac <= hole_hi_frac && hole_hi_frac < 1.0))
      throw InvalidConfig("hole fractions must satisfy 0 < lo <= hi < 1");
    if (split_ratio.first <= 0 || split_ratio.second <= 0) throw InvalidConfig("split ratio must be positive");
  }
};

struct Sample {
  VideoVolume clean;
  MaskVolume mask;  // empty until a hole is attached
  std::string source_id;
  int frame_offset = 0;
};

// ---------------------------------------------------------------------------
// Frame geometry

inline Image crop_center_square(const Image& img) {
  const int h = img.dim(0), w = img.dim(1), c = img.dim(2);
  const int side = std::min(h, w);
  const int y0 = (h - side) / 2, x0 = (w - side) / 2;
  Image out({side, side, c});
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x)
      for (int k = 0; k < c; ++k)
        out[(std::size_t(y) * side + x) * c + k] = img[(std::size_t(y + y0) * w + x + x0) * c + k];
  return out;
}

// Bilinear resampling with pixel-center alignment and edge clamping.
inline Image resize_bilinear(const Image& img, int out_h, int out_w) {
  const int h = img.dim(0), w = img.dim(1), c = img.dim(2);
  if (h == out_h && w == out_w) return img;
  Image out({out_h, out_w, c});
  const double sy = double(h) / out_h, sx = double(w) / out_w;
  for (int y = 0; y < out_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, double(h - 1));
    const int y0 = static_cast<int>(fy), y1 = std::min(y0 + 1, h - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, double(w - 1));
      const int x0 = static_cast<int>(fx), x1 = std::min(x0 + 1, w - 1);
      const double wx = fx - x0;
      for (int k = 0; k < c; ++k) {
        auto px = [&](int yy, int xx) { return double(img[(std::size_t(yy) * w + xx) * c + k]); };
        const double v = (1 - wy) * ((1 - wx) * px(y0, x0) + wx * px(y0, x1)) +
                         wy * ((1 - wx) * px(y1, x0) + wx * px(y1, x1));
        out[(std::size_t(y) * out_w + x) * c + k] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return out;
}

// Groups consecutive frames into non-overlapping samples of cfg.sample_frames,
// each frame cropped per cfg.crop_mode and resized to target_size squared.
inline std::vector<Sample> extract_samples(const std::vector<Image>& frames, const PipelineConfig& cfg,
                                           const std::string& source_id = "clip") {
  cfg.validate();
  if (frames.empty()) throw EmptyInput("no frames to extract samples from");
  const Shape first = frames.front().shape();
  if (first.size() != 3) throw ShapeMismatch("frames must be HxWxC, got " + shape_str(first));
  for (const auto& f : frames)
    if (f.shape() != first) throw ShapeMismatch("frame " + shape_str(f.shape()) + " differs from " + shape_str(first));

  const int n = static_cast<int>(frames.size()) / cfg.sample_frames;
  const int l = cfg.target_size, c = first[2];
  std::vector<Sample> out;
  out.reserve(n);
  for (int s = 0; s < n; ++s) {
    Sample sample;
    sample.source_id = source_id;
    sample.frame_offset = s * cfg.sample_frames;
    sample.clean = VideoVolume({cfg.sample_frames, l, l, c});
    for (int f = 0; f < cfg.sample_frames; ++f) {
      const Image& src = frames[static_cast<std::size_t>(sample.frame_offset + f)];
      const Image img = resize_bilinear(cfg.crop_mode == CropMode::CenterSquare ? crop_center_square(src) : src, l, l);
      std::copy(img.values().begin(), img.values().end(),
                sample.clean.values().begin() + static_cast<std::ptrdiff_t>(std::size_t(f) * img.size()));
    }
    out.push_back(std::move(sample));
  }
  return out;
}

// First ceil(n * a / (a + b)) samples train, the rest validate.
template <typename S>
std::pair<std::vector<S>, std::vector<S>> split_train_val(const std::vector<S>& samples, std::pair<int, int> ratio) {
  if (samples.empty()) throw EmptyInput("nothing to split");
  if (ratio.first <= 0 || ratio.second <= 0) throw InvalidConfig("split ratio must be positive");
  const long long n = static_cast<long long>(samples.size());
  const long long a = ratio.first, b = ratio.second;
  const auto n_train = static_cast<std::ptrdiff_t>((n * a + a + b - 1) / (a + b));
  return {std::vector<S>(samples.begin(), samples.begin() + n_train),
          std::vector<S>(samples.begin() + n_train, samples.end())};
}

// ---------------------------------------------------------------------------
// Hole synthesis

// Integer side-length range [round(lo * l), round(hi * l)].
inline std::pair<int, int> hole_side_range(int l, double lo_frac = 0.375, double hi_frac = 0.5) {
  return {static_cast<int>(std::lround(lo_frac * l)), static_cast<int>(std::lround(hi_frac * l))};
}

struct SquareHole {
  int side = 0;
  int top = 0;
  int left = 0;
};

inline SquareHole draw_hole(int l, std::mt19937_64& rng, double lo_frac, double hi_frac) {
  const auto [lo, hi] = hole_side_range(l, lo_frac, hi_frac);
  SquareHole h;
  h.side = std::uniform_int_distribution<int>(lo, hi)(rng);
  h.top = std::uniform_int_distribution<int>(0, l - h.side)(rng);
  h.left = std::uniform_int_distribution<int>(0, l - h.side)(rng);
  return h;
}

inline void stamp_hole(MaskVolume& m, int frame, const SquareHole& h) {
  for (int y = h.top; y < h.top + h.side; ++y)
    for (int x = h.left; x < h.left + h.side; ++x) m.at(frame, y, x) = 1;
}

// One square hole at the same place in every frame.
inline MaskVolume gen_regular_mask(int frames, int l, std::uint64_t seed, double lo_frac = 0.375,
                                   double hi_frac = 0.5) {
  if (l < 8) throw InvalidConfig("frame size must be >= 8");
  auto rng = nn::make_rng(seed, 0x6d61736bull);
  const SquareHole hole = draw_hole(l, rng, lo_frac, hi_frac);
  MaskVolume m(frames, l, l);
  for (int f = 0; f < frames; ++f) stamp_hole(m, f, hole);
  return m;
}

// One independently drawn square hole per frame.
inline MaskVolume gen_random_masks(int frames, int l, std::uint64_t seed, double lo_frac = 0.375,
                                   double hi_frac = 0.5) {
  if (l < 8) throw InvalidConfig("frame size must be >= 8");
  auto rng = nn::make_rng(seed, 0x6d61736bull);
  MaskVolume m(frames, l, l);
  for (int f = 0; f < frames; ++f) stamp_hole(m, f, draw_hole(l, rng, lo_frac, hi_frac));
  return m;
}

// ---------------------------------------------------------------------------
// Network inputs

template <typename T>
Tensor<T> prefill(const Tensor<T>& video, const MaskVolume& mask, const Rgb& mean_pixel) {
  require_same_grid(video, mask, "prefill");
  const int c = video.channels();
  if (c > 3) throw ShapeMismatch("prefill expects at most 3 channels");
  Tensor<T> out = video;
  for (std::size_t p = 0; p < mask.size(); ++p)
    if (mask[p])
      for (int k = 0; k < c; ++k) out[p * c + k] = static_cast<T>(mean_pixel[k]);
  return out;
}

// [R, G, B, mask] channel concatenation.
template <typename T>
Tensor<T> assemble_input(const Tensor<T>& video, const MaskVolume& mask) {
  require_same_grid(video, mask, "assemble_input");
  if (video.channels() != 3) throw ShapeMismatch("assemble_input expects 3 channels, got " + shape_str(video.shape()));
  Tensor<T> out({video.frames(), video.height(), video.width(), 4});
  for (std::size_t p = 0; p < mask.size(); ++p) {
    for (int k = 0; k < 3; ++k) out[p * 4 + k] = video[p * 3 + k];
    out[p * 4 + 3] = static_cast<T>(mask[p]);
  }
  return out;
}

// Spatial r x r area averaging; the frame axis is untouched.
template <typename T>
Tensor<T> downsample_volume(const Tensor<T>& video, int r) {
  if (r < 1 || video.height() % r || video.width() % r)
    throw IndivisibleSize("rate " + std::to_string(r) + " does not divide " + shape_str(video.shape()));
  if (r == 1) return video;
  const int f = video.frames(), h = video.height() / r, w = video.width() / r, c = video.channels();
  Tensor<T> out({f, h, w, c});
  const double inv = 1.0 / (r * r);
  for (int t = 0; t < f; ++t)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int k = 0; k < c; ++k) {
          double s = 0;
          for (int dy = 0; dy < r; ++dy)
            for (int dx = 0; dx < r; ++dx) s += static_cast<double>(video.at(t, y * r + dy, x * r + dx, k));
          out.at(t, y, x, k) = static_cast<T>(s * inv);
        }
  return out;
}

// Spatial r x r max-pooling: a block touching any hole pixel is a hole.
inline MaskVolume downsample_mask(const MaskVolume& mask, int r) {
  if (r < 1 || mask.height() % r || mask.width() % r)
    throw IndivisibleSize("rate " + std::to_string(r) + " does not divide mask");
  if (r == 1) return mask;
  MaskVolume out(mask.frames(), mask.height() / r, mask.width() / r);
  for (int t = 0; t < mask.frames(); ++t)
    for (int y = 0; y < mask.height(); ++y)
      for (int x = 0; x < mask.width(); ++x)
        if (mask.at(t, y, x)) out.at(t, y / r, x / r) = 1;
  return out;
}

// Everything both networks consume for one sample.
template <typename T>
struct NetworkInputs {
  Tensor<T> full_input;    // F x H x W x 4, pre-filled
  Tensor<T> lowres_input;  // F x H/r x W/r x 4, pre-filled
  MaskVolume mask;
  MaskVolume lowres_mask;
  Tensor<T> lowres_clean;  // downsampled source video (the 3D target)
};

template <typename T>
NetworkInputs<T> prepare_inputs(const Tensor<T>& video, const MaskVolume& mask, const Rgb& mean_pixel, int r) {
  NetworkInputs<T> in;
  in.mask = mask;
  in.full_input = assemble_input(prefill(video, mask, mean_pixel), mask);
  in.lowres_mask = downsample_mask(mask, r);
  in.lowres_clean = downsample_volume(video, r);
  in.lowres_input = assemble_input(prefill(in.lowres_clean, in.lowres_mask, mean_pixel), in.lowres_mask);
  return in;
}

// Per-channel mean over every unmasked pixel (all pixels when a sample has no mask).
inline Rgb compute_mean_pixel(const std::vector<Sample>& samples) {
  if (samples.empty()) throw EmptyInput("no samples for the mean pixel");
  std::array<double, 3> sum{0, 0, 0};
  double count = 0;
  for (const auto& s : samples) {
    const auto& v = s.clean;
    if (v.channels() != 3) throw ShapeMismatch("mean pixel needs RGB samples");
    const std::size_t n = v.size() / 3;
    const bool masked = !s.mask.empty();
    if (masked) require_same_grid(v, s.mask, "compute_mean_pixel");
    for (std::size_t p = 0; p < n; ++p) {
      if (masked && s.mask[p]) continue;
      for (int k = 0; k < 3; ++k) sum[k] += v[p * 3 + k];
      count += 1;
    }
  }
  if (count == 0) throw EmptyInput("every pixel is masked");
  return {static_cast<float>(sum[0] / count), static_cast<float>(sum[1] / count), static_cast<float>(sum[2] / count)};
}

// Deterministic per-sample seed from (global seed, clip id, frame offset).
inline std::uint64_t sample_seed(std::uint64_t global, const std::string& source_id, int frame_offset) {
  std::uint64_t h = nn::stable_hash(source_id) ^ (global * 0x9e3779b97f4a7c15ull);
  h ^= static_cast<std::uint64_t>(frame_offset) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

struct SynthRect {
  int top = 0, left = 0, height = 0, width = 0;
  int vy = 0, vx = 0;
  Rgb color{};
};

struct SynthVideoParams {
  Rgb base{};
  Rgb grad_x{};
  Rgb grad_y{};
  std::vector<SynthRect> rects;  // drawn in order, later ones on top
};

inline SynthVideoParams draw_synth_params(int l, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> base(0.05f, 0.35f), grad(0.0f, 0.3f), color(0.45f, 1.0f);
  SynthVideoParams p;
  for (int k = 0; k < 3; ++k) {
    p.base[k] = base(rng);
    p.grad_x[k] = grad(rng);
    p.grad_y[k] = grad(rng);
  }
  const int n_rects = std::uniform_int_distribution<int>(2, 4)(rng);
  std::uniform_int_distribution<int> extent(std::max(2, l / 8), std::max(3, l / 3)), vel(-2, 2);
  for (int i = 0; i < n_rects; ++i) {
    SynthRect r;
    r.height = extent(rng);
    r.width = extent(rng);
    r.top = std::uniform_int_distribution<int>(0, l - r.height)(rng);
    r.left = std::uniform_int_distribution<int>(0, l - r.width)(rng);
    r.vy = vel(rng);
    r.vx = vel(rng);
    for (int k = 0; k < 3; ++k) r.color[k] = color(rng);
    p.rects.push_back(r);
  }
  return p;
}

inline void render_synth_frame(const SynthVideoParams& p, int l, int t, float* out) {
  for (int y = 0; y < l; ++y)
    for (int x = 0; x < l; ++x)
      for (int k = 0; k < 3; ++k)
        out[(std::size_t(y) * l + x) * 3 + k] =
            p.base[k] + p.grad_x[k] * float(x) / float(l - 1) + p.grad_y[k] * float(y) / float(l - 1);
  for (const auto& r : p.rects) {
    const int top = r.top + r.vy * t, left = r.left + r.vx * t;
    for (int y = std::max(top, 0); y < std::min(top + r.height, l); ++y)
      for (int x = std::max(left, 0); x < std::min(left + r.width, l); ++x)
        for (int k = 0; k < 3; ++k) out[(std::size_t(y) * l + x) * 3 + k] = r.color[k];
  }
}

// Rectangles translating at constant velocity over a static gradient.
inline std::vector<VideoVolume> synth_corpus(int n_videos, int frames, int l, std::uint64_t seed,
                                             std::vector<SynthVideoParams>* params_out = nullptr) {
  if (n_videos < 1) throw InvalidConfig("n_videos must be >= 1");
  if (frames < 1 || l < 8) throw InvalidConfig("synthetic videos need F >= 1 and l >= 8");
  auto rng = nn::make_rng(seed, 0x73796e74ull);
  std::vector<VideoVolume> out;
  for (int v = 0; v < n_videos; ++v) {
    const auto p = draw_synth_params(l, rng);
    VideoVolume vol({frames, l, l, 3});
    for (int t = 0; t < frames; ++t) render_synth_frame(p, l, t, vol.data() + std::size_t(t) * l * l * 3);
    if (params_out) params_out->push_back(p);
    out.push_back(std::move(vol));
  }
  return out;
}

// Wraps corpus videos as samples, one per video.
inline std::vector<Sample> as_samples(const std::vector<VideoVolume>& videos, const std::string& prefix = "synth") {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < videos.size(); ++i)
    out.push_back(Sample{videos[i], {}, prefix + std::to_string(i), 0});
  return out;
}

}  // namespace vinpaint::data
