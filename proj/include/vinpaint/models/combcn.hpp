#pragma once

// 17-layer 2D completion network run per frame at full resolution, with the
// 3D network's output fused in at two feature maps of matching size.

#include <type_traits>
#include <utility>

#include "vinpaint/models/net3d.hpp"

namespace vinpaint::models {

inline constexpr const char* kCombName = "comb";
inline constexpr const char* kFuseName = "fuse";

// Two independent 3x3 convolutions (with BN + ReLU) from a guidance frame to
// the channel counts at the early and late fusion points.
struct FusionBranch {
  nn::LayerSpec branch_a;
  nn::LayerSpec branch_b;
};

struct CombCNSpec {
  nn::NetworkSpec net;
  FusionBranch fusion;
  int early_layer = 0;  // guidance feature A is added to this layer's output
  int late_layer = 0;   // guidance feature B is added to this layer's output
};

inline nn::NetworkSpec combcn_layers() {
  using nn::Dims;
  using nn::LayerKind;
  using detail::row;
  constexpr auto D2 = Dims::D2;
  nn::NetworkSpec net;
  net.name = kCombName;
  net.input_channels = 4;
  net.layers = {
      row(1, LayerKind::Conv, D2, 5, 1, 64),
      row(2, LayerKind::ConvDown, D2, 3, 2, 128),
      row(3, LayerKind::Conv, D2, 3, 1, 128),
      row(4, LayerKind::ConvDown, D2, 3, 2, 256),
      row(5, LayerKind::Conv, D2, 3, 1, 256),
      row(6, LayerKind::Conv, D2, 3, 1, 256),
      row(7, LayerKind::DilatedConv, D2, 3, 1, 256, 2),
      row(8, LayerKind::DilatedConv, D2, 3, 1, 256, 4),
      row(9, LayerKind::DilatedConv, D2, 3, 1, 256, 8),
      row(10, LayerKind::DilatedConv, D2, 3, 1, 256, 16),
      row(11, LayerKind::Conv, D2, 3, 1, 256),
      row(12, LayerKind::Conv, D2, 3, 1, 256),
      row(13, LayerKind::DeconvUp, D2, 4, 2, 128),
      row(14, LayerKind::Conv, D2, 3, 1, 128),
      row(15, LayerKind::DeconvUp, D2, 4, 2, 64),
      row(16, LayerKind::Conv, D2, 3, 1, 32),
      row(17, LayerKind::Conv, D2, 3, 1, 3, 1, false),
  };
  net.skips = {{1, 15}, {3, 13}};
  return net;
}

// Fusion points are the earliest and latest feature maps at the guidance
// resolution: layer 2 output and layer 14 output (the input of layer 15) for
// r = 2, layer 4 output and layer 12 output (the input of layer 13) for r = 4.
// In a layer subset the late point is whichever kept layer feeds the upsampler.
inline CombCNSpec build_combcn(Variant3D variant, const NetOptions& opt = {}) {
  CombCNSpec spec;
  spec.net = detail::apply_options(combcn_layers(), opt);
  const bool quarter = variant.rate() == 4;
  const int early = quarter ? 4 : 2;
  const int upsampler = quarter ? 13 : 15;
  const int pos_early = spec.net.position_of(early);
  const int pos_up = spec.net.position_of(upsampler);
  if (pos_early < 0 || pos_up <= 0) throw InvalidConfig("layer subset drops a fusion point");
  spec.early_layer = early;
  spec.late_layer = spec.net.layers[static_cast<std::size_t>(pos_up - 1)].number;

  auto branch = [&](int number, int target) {
    const auto& tl = spec.net.layers[static_cast<std::size_t>(spec.net.position_of(target))];
    return detail::row(number, nn::LayerKind::Conv, nn::Dims::D2, 3, 1, tl.out_channels);
  };
  spec.fusion = {branch(1, spec.early_layer), branch(2, spec.late_layer)};
  return spec;
}

template <typename T>
nn::ParameterSet<T> init_fusion_params(const CombCNSpec& spec, std::uint64_t seed) {
  nn::ParameterSet<T> out;
  auto rng = nn::make_rng(seed, nn::stable_hash(kFuseName));
  nn::init_layer_params(out, kFuseName, spec.fusion.branch_a, 3, rng);
  nn::init_layer_params(out, kFuseName, spec.fusion.branch_b, 3, rng);
  return out;
}

template <typename T>
struct FusionTrace {
  nn::LayerCache<T> a;
  nn::LayerCache<T> b;
};

// Both guidance features for a batch of guidance frames (F x h x w x 3).
template <typename T>
std::pair<Tensor<T>, Tensor<T>> fuse_guidance(const CombCNSpec& spec, const nn::ParameterSet<T>& params,
                                              const Tensor<T>& guidance, nn::BnMode mode = nn::BnMode::Eval,
                                              std::type_identity_t<FusionTrace<T>>* trace = nullptr) {
  if (guidance.rank() != 4 || guidance.channels() != 3)
    throw ShapeMismatch("guidance must be F x h x w x 3, got " + shape_str(guidance.shape()));
  auto a = nn::apply_layer(spec.fusion.branch_a, params, kFuseName, guidance, mode, trace ? &trace->a : nullptr);
  auto b = nn::apply_layer(spec.fusion.branch_b, params, kFuseName, guidance, mode, trace ? &trace->b : nullptr);
  return {std::move(a), std::move(b)};
}

template <typename T>
struct CombTrace {
  nn::NetworkTrace<T> net;
  FusionTrace<T> fusion;
  bool fused = false;
};

// Runs the CombCN over a batch of 4-channel frames (F x H x W x 4). With no
// guidance this is the plain 2DCN. Batch-norm statistics in Train mode are
// taken over the whole frame batch.
template <typename T>
Tensor<T> forward_combcn(const CombCNSpec& spec, const nn::ParameterSet<T>& params, const Tensor<T>& frames_in,
                         const std::type_identity_t<Tensor<T>>* guidance, nn::BnMode mode = nn::BnMode::Eval,
                         std::type_identity_t<CombTrace<T>>* trace = nullptr) {
  if (!guidance) {
    if (trace) trace->fused = false;
    return nn::forward_network(spec.net, params, frames_in, mode, nullptr, trace ? &trace->net : nullptr);
  }
  if (guidance->frames() != frames_in.frames())
    throw ShapeMismatch("guidance has " + std::to_string(guidance->frames()) + " frames, input has " +
                        std::to_string(frames_in.frames()));
  auto [feat_a, feat_b] = fuse_guidance(spec, params, *guidance, mode, trace ? &trace->fusion : nullptr);
  nn::Injections<T> inj;
  inj.emplace(spec.early_layer, std::move(feat_a));
  if (spec.late_layer == spec.early_layer)
    inj.at(spec.early_layer) += feat_b;
  else
    inj.emplace(spec.late_layer, std::move(feat_b));
  if (trace) trace->fused = true;
  return nn::forward_network(spec.net, params, frames_in, mode, &inj, trace ? &trace->net : nullptr);
}

// G_i for a whole video: V_in (pre-filled), M and the 3D output V_out^d.
template <typename T>
Tensor<T> forward_video(const CombCNSpec& spec, const nn::ParameterSet<T>& params, const Tensor<T>& video_in,
                        const MaskVolume& mask, const Tensor<T>& lowres_out, nn::BnMode mode = nn::BnMode::Eval,
                        std::type_identity_t<CombTrace<T>>* trace = nullptr) {
  if (lowres_out.frames() != video_in.frames()) throw ShapeMismatch("guidance frame count differs from input");
  const auto frames_in = data::assemble_input(video_in, mask);
  return forward_combcn(spec, params, frames_in, &lowres_out, mode, trace);
}

// G_i for a single frame: frame_in is 1 x H x W x 4 (or H x W x 4), guidance
// 1 x h x w x 3 (or h x w x 3). Uses running BN statistics.
template <typename T>
Tensor<T> forward_frame(const CombCNSpec& spec, const nn::ParameterSet<T>& params, Tensor<T> frame_in,
                        Tensor<T> guidance) {
  auto lift = [](Tensor<T>& t) {
    if (t.rank() == 3) t = std::move(t).reshaped({1, t.dim(0), t.dim(1), t.dim(2)});
  };
  lift(frame_in);
  lift(guidance);
  if (frame_in.frames() != 1 || guidance.frames() != 1) throw ShapeMismatch("forward_frame takes one frame");
  auto out = forward_combcn(spec, params, frame_in, &guidance, nn::BnMode::Eval);
  return std::move(out).reshaped({out.height(), out.width(), out.channels()});
}

// Backpropagates through the CombCN (and fusion branches when fused). Returns
// the gradient with respect to the guidance tensor (empty if not fused or not needed).
template <typename T>
Tensor<T> backward_combcn(const CombCNSpec& spec, const nn::ParameterSet<T>& params, const CombTrace<T>& trace,
                          const Tensor<T>& dout, nn::Gradients<T>& grads, bool need_guidance_grad) {
  auto back = nn::backward_network(spec.net, params, trace.net, dout, grads, false);
  if (!trace.fused) return {};
  const auto& ga = back.injection_grads.at(spec.early_layer);
  const auto& gb = back.injection_grads.at(spec.late_layer);
  auto da = nn::layer_backward(spec.fusion.branch_a, params, kFuseName, trace.fusion.a, ga, grads, need_guidance_grad);
  auto db = nn::layer_backward(spec.fusion.branch_b, params, kFuseName, trace.fusion.b, gb, grads, need_guidance_grad);
  if (!need_guidance_grad) return {};
  da += db;
  return da;
}

template <typename T>
void update_running_stats(const CombCNSpec& spec, nn::ParameterSet<T>& params, const CombTrace<T>& trace) {
  nn::update_running_stats(spec.net, params, trace.net);
  if (trace.fused) {
    nn::update_running_stats(spec.fusion.branch_a, params, kFuseName, trace.fusion.a);
    nn::update_running_stats(spec.fusion.branch_b, params, kFuseName, trace.fusion.b);
  }
}

}  // namespace vinpaint::models
