#pragma once

#include <string>
#include <variant>
#include <vector>

#include "vinpaint/train/checkpoint.hpp"

namespace vinpaint::infer {

struct MaskFromFile {
  MaskVolume mask;
};
struct RegularMask {
  std::uint64_t seed = 0;
};
struct RandomMask {
  std::uint64_t seed = 0;
};
using MaskSource = std::variant<MaskFromFile, RegularMask, RandomMask>;

struct InpaintRequest {
  std::string checkpoint_path;
  VideoVolume input;  // F x H x W x 3
  MaskSource mask_source = RegularMask{};
  bool emit_lowres = false;
  bool emit_diffs = false;
};

struct InpaintResult {
  VideoVolume output;  // composited: input outside holes, network output inside
  VideoVolume lowres;  // 3D network output, when requested
  MaskVolume mask;
};

// mask * generated + (1 - mask) * original; pixels outside the hole are copied.
inline VideoVolume composite(const VideoVolume& generated, const VideoVolume& original, const MaskVolume& mask) {
  generated.require_same_shape(original, "composite");
  require_same_grid(original, mask, "composite");
  VideoVolume out = original;
  const int c = original.channels();
  for (std::size_t p = 0; p < mask.size(); ++p)
    if (mask[p])
      for (int k = 0; k < c; ++k) out[p * c + k] = std::clamp(generated[p * c + k], 0.0f, 1.0f);
  return out;
}

inline MaskVolume resolve_mask(const MaskSource& src, int frames, int l, const train::TrainConfig& cfg) {
  if (const auto* f = std::get_if<MaskFromFile>(&src)) return f->mask;
  if (const auto* r = std::get_if<RegularMask>(&src))
    return data::gen_regular_mask(frames, l, r->seed, cfg.hole_lo_frac, cfg.hole_hi_frac);
  return data::gen_random_masks(frames, l, std::get<RandomMask>(src).seed, cfg.hole_lo_frac, cfg.hole_hi_frac);
}

// prefill -> assemble -> downsample -> 3D network -> CombCN -> composite.
inline InpaintResult inpaint_video(const models::CompletionModel<float>& model, const train::TrainConfig& cfg,
                                   const VideoVolume& input, const MaskVolume& mask, bool emit_lowres = false) {
  if (input.rank() != 4 || input.channels() != 3) throw ShapeMismatch("input must be F x H x W x 3");
  require_same_grid(input, mask, "inpaint_video");
  if (cfg.image_size && (input.height() != cfg.image_size || input.width() != cfg.image_size))
    throw ShapeMismatch("input frames are " + std::to_string(input.height()) + "x" + std::to_string(input.width()) +
                        ", model was trained on " + std::to_string(cfg.image_size) + "^2");
  InpaintResult r;
  r.mask = mask;
  auto [lowres, out] = models::predict(model, input, mask, cfg.mean_pixel);
  r.output = composite(out, input, mask);
  if (emit_lowres) {
    for (auto& v : lowres.values()) v = std::clamp(v, 0.0f, 1.0f);
    r.lowres = std::move(lowres);
  }
  return r;
}

inline InpaintResult inpaint_video(const InpaintRequest& req) {
  const auto ck = train::load_checkpoint(req.checkpoint_path);
  const auto model = train::model_from_checkpoint(ck);
  if (req.input.rank() != 4) throw ShapeMismatch("input must be F x H x W x 3");
  const auto mask = resolve_mask(req.mask_source, req.input.frames(), req.input.height(), ck.config);
  return inpaint_video(model, ck.config, req.input, mask, req.emit_lowres);
}

struct MetricsReport {
  double video_l1 = 0;            // mean over frames with holes, [0, 255] scale
  std::vector<double> frame_l1;   // NaN for frames without a hole
};

// Normalized masked l1 per video and per frame; same kernel as the CombCN loss.
inline MetricsReport compute_metrics(const VideoVolume& out, const VideoVolume& gt, const MaskVolume& mask) {
  MetricsReport m;
  m.video_l1 = train::loss_combcn(out, mask, gt);
  m.frame_l1 = train::per_frame_l1(out, mask, gt);
  return m;
}

inline constexpr float kDiffGain = 5.0f;

// |frame[k+1] - frame[k]| averaged over channels, times `gain`, clipped to [0, 1].
// Returns F - 1 single-channel images (H x W x 1).
inline std::vector<data::Image> temporal_diff(const VideoVolume& video, float gain = kDiffGain) {
  if (video.rank() != 4 || video.frames() < 2) throw TooFewFrames("temporal diff needs at least 2 frames");
  const int h = video.height(), w = video.width(), c = video.channels();
  std::vector<data::Image> out;
  for (int f = 0; f + 1 < video.frames(); ++f) {
    data::Image img({h, w, 1});
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        float s = 0;
        for (int k = 0; k < c; ++k) s += std::abs(video.at(f + 1, y, x, k) - video.at(f, y, x, k));
        img[std::size_t(y) * w + x] = std::clamp(gain * s / static_cast<float>(c), 0.0f, 1.0f);
      }
    out.push_back(std::move(img));
  }
  return out;
}

// Mean absolute successive-frame difference (unscaled), a flicker measure.
inline double mean_temporal_diff(const VideoVolume& video) {
  if (video.rank() != 4 || video.frames() < 2) throw TooFewFrames("temporal diff needs at least 2 frames");
  const std::size_t per = video.size() / static_cast<std::size_t>(video.frames());
  double s = 0;
  for (std::size_t i = per; i < video.size(); ++i) s += std::abs(static_cast<double>(video[i] - video[i - per]));
  return s / static_cast<double>(video.size() - per);
}

}  // namespace vinpaint::infer
