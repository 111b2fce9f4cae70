#pragma once

// The two networks plus fusion branches as one parameter bundle, with the
// joint forward/backward pass used by training, evaluation and gradient checks.

#include <cmath>
#include <limits>

#include "vinpaint/models/combcn.hpp"
#include "vinpaint/train/losses.hpp"

namespace vinpaint::models {

struct ModelOptions {
  Variant3D variant;
  NetOptions net3d;
  NetOptions comb;
  bool fusion_enabled = true;  // false gives the plain 2DCN baseline
};

template <typename T>
struct CompletionModel {
  ModelOptions options;
  nn::NetworkSpec g3d;
  CombCNSpec comb;
  nn::ParameterSet<T> params;  // keys prefixed g3d., comb., fuse.

  static CompletionModel create(const ModelOptions& opt, std::uint64_t seed) {
    CompletionModel m = specs_only(opt);
    m.params = nn::init_params<T>(m.g3d, seed);
    for (auto& [k, v] : nn::init_params<T>(m.comb.net, seed)) m.params[k] = std::move(v);
    for (auto& [k, v] : init_fusion_params<T>(m.comb, seed)) m.params[k] = std::move(v);
    return m;
  }

  static CompletionModel specs_only(const ModelOptions& opt) {
    CompletionModel m;
    m.options = opt;
    m.g3d = build_3dcn(opt.variant, opt.net3d);
    m.comb = build_combcn(opt.variant, opt.comb);
    return m;
  }

  int rate() const { return options.variant.rate(); }
};

enum class StepKind {
  Pretrain3D,     // 3D loss only, 3D parameters only
  Joint,          // total loss over every parameter
  JointFrozen3D,  // total loss; 3D network frozen and detached from the guidance
};

template <typename T>
struct StepResult {
  double loss_3dcn = 0;
  double loss_combcn = std::numeric_limits<double>::quiet_NaN();
  double loss_total = 0;
  Tensor<T> lowres_out;
  Tensor<T> out;
  nn::Gradients<T> grads;
};

// One forward (and optionally backward) pass on a prepared sample. In Train
// BN mode the running statistics of every non-frozen network are updated
// when `update_stats` is set.
template <typename T>
StepResult<T> run_step(CompletionModel<T>& model, const data::NetworkInputs<T>& in, const Tensor<T>& clean,
                       StepKind kind, double alpha, nn::BnMode mode, bool with_grads, bool update_stats = false) {
  StepResult<T> r;
  const bool frozen3d = kind == StepKind::JointFrozen3D;
  const nn::BnMode mode3d = frozen3d ? nn::BnMode::Eval : mode;
  nn::NetworkTrace<T> trace3d;
  const bool grads3d = with_grads && !frozen3d;
  r.lowres_out = nn::forward_network(model.g3d, model.params, in.lowres_input, mode3d, nullptr,
                                     grads3d || (update_stats && !frozen3d) ? &trace3d : nullptr);
  Tensor<T> grad_lowres;
  if (grads3d) grad_lowres = Tensor<T>(r.lowres_out.shape());
  r.loss_3dcn = train::loss_3dcn(r.lowres_out, in.lowres_mask, in.lowres_clean, grads3d ? &grad_lowres : nullptr);
  r.loss_total = r.loss_3dcn;

  CombTrace<T> trace_comb;
  if (kind != StepKind::Pretrain3D) {
    const Tensor<T>* guidance = model.options.fusion_enabled ? &r.lowres_out : nullptr;
    r.out = forward_combcn(model.comb, model.params, in.full_input, guidance, mode,
                           with_grads || update_stats ? &trace_comb : nullptr);
    Tensor<T> grad_out;
    if (with_grads) grad_out = Tensor<T>(r.out.shape());
    r.loss_combcn = train::loss_combcn(r.out, in.mask, clean, with_grads ? &grad_out : nullptr, alpha);
    r.loss_total = train::loss_total(r.loss_3dcn, r.loss_combcn, alpha);
    if (with_grads) {
      auto g_guidance = backward_combcn(model.comb, model.params, trace_comb, grad_out, r.grads, grads3d);
      if (grads3d && !g_guidance.empty()) grad_lowres += g_guidance;
    }
  }
  if (grads3d) nn::backward_network(model.g3d, model.params, trace3d, grad_lowres, r.grads, false);

  if (update_stats && mode == nn::BnMode::Train) {
    if (!frozen3d) nn::update_running_stats(model.g3d, model.params, trace3d);
    if (kind != StepKind::Pretrain3D) update_running_stats(model.comb, model.params, trace_comb);
  }
  return r;
}

// Low-resolution and full-resolution network outputs for an input video
// (values inside the holes are ignored), using running BN statistics.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> predict(const CompletionModel<T>& model, const Tensor<T>& video,
                                        const MaskVolume& mask, const data::Rgb& mean_pixel) {
  const auto in = data::prepare_inputs(video, mask, mean_pixel, model.rate());
  auto lowres = nn::forward_network(model.g3d, model.params, in.lowres_input, nn::BnMode::Eval);
  const Tensor<T>* guidance = model.options.fusion_enabled ? &lowres : nullptr;
  auto out = forward_combcn(model.comb, model.params, in.full_input, guidance, nn::BnMode::Eval);
  return {std::move(lowres), std::move(out)};
}

}  // namespace vinpaint::models
