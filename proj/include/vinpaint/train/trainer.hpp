#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "vinpaint/train/adam.hpp"
#include "vinpaint/train/checkpoint.hpp"

namespace vinpaint::train {

enum class Split { Train, Val };

inline const char* to_string(Phase p) { return p == Phase::Pretrain ? "pretrain" : "joint"; }
inline const char* to_string(Split s) { return s == Split::Train ? "train" : "val"; }

// Losses on the [0, 255] scale. loss_combcn is NaN during pretraining.
struct LossReport {
  int iter = 0;
  double loss_3dcn = 0;
  double loss_combcn = std::numeric_limits<double>::quiet_NaN();
  double loss_total = 0;
  Phase phase = Phase::Pretrain;
  Split split = Split::Train;

  friend bool operator==(const LossReport& a, const LossReport& b) {
    auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
    return a.iter == b.iter && a.phase == b.phase && a.split == b.split && same(a.loss_3dcn, b.loss_3dcn) &&
           same(a.loss_combcn, b.loss_combcn) && same(a.loss_total, b.loss_total);
  }
};

inline void write_csv_header(std::ostream& os) { os << "iter,phase,split,loss_3dcn,loss_combcn,loss_total\n"; }
inline void write_csv_row(std::ostream& os, const LossReport& r) {
  os << r.iter << ',' << to_string(r.phase) << ',' << to_string(r.split) << ',' << r.loss_3dcn << ','
     << r.loss_combcn << ',' << r.loss_total << '\n';
}

struct TrainResult {
  models::CompletionModel<float> model;
  TrainConfig config;
  std::vector<LossReport> reports;
  int pretrain_iters_run = 0;
  nn::ParameterSet<float> pretrained;  // parameters when pretraining ended
  nn::ParameterSet<float> optimizer_state;
};

struct EvalLosses {
  double loss_3dcn = 0;
  double loss_combcn = std::numeric_limits<double>::quiet_NaN();
  double loss_total = 0;
};

// Mean losses over videos with the given masks. Train-mode BN uses per-video
// batch statistics without touching the running averages.
template <typename T>
EvalLosses evaluate(models::CompletionModel<T>& model, const std::vector<Tensor<T>>& videos,
                    const std::vector<MaskVolume>& masks, const data::Rgb& mean_pixel, models::StepKind kind,
                    double alpha, nn::BnMode mode) {
  if (videos.empty()) throw EmptyDataset("nothing to evaluate");
  EvalLosses e;
  if (kind != models::StepKind::Pretrain3D) e.loss_combcn = 0;
  for (std::size_t i = 0; i < videos.size(); ++i) {
    const auto in = data::prepare_inputs(videos[i], masks[i], mean_pixel, model.rate());
    const auto r = models::run_step(model, in, videos[i], kind, alpha, mode, false, false);
    e.loss_3dcn += r.loss_3dcn;
    e.loss_total += r.loss_total;
    if (kind != models::StepKind::Pretrain3D) e.loss_combcn += r.loss_combcn;
  }
  const double n = static_cast<double>(videos.size());
  e.loss_3dcn /= n;
  e.loss_total /= n;
  e.loss_combcn /= n;
  return e;
}

inline std::uint64_t step_stream(Phase phase, std::uint64_t iter) {
  return (static_cast<std::uint64_t>(phase) + 1) << 40 | iter;
}

inline MaskVolume train_mask(const TrainConfig& cfg, const VideoVolume& video, std::uint64_t seed) {
  return cfg.random_train_masks
             ? data::gen_random_masks(video.frames(), video.height(), seed, cfg.hole_lo_frac, cfg.hole_hi_frac)
             : data::gen_regular_mask(video.frames(), video.height(), seed, cfg.hole_lo_frac, cfg.hole_hi_frac);
}

inline std::uint64_t fixed_mask_seed(const TrainConfig& cfg, std::size_t video) {
  return data::sample_seed(cfg.seed, "train", static_cast<int>(video));
}

// Holes used for every step when cfg.fixed_train_masks is set.
inline std::vector<MaskVolume> fixed_train_masks(const std::vector<VideoVolume>& videos, const TrainConfig& cfg) {
  std::vector<MaskVolume> masks;
  for (std::size_t i = 0; i < videos.size(); ++i) masks.push_back(train_mask(cfg, videos[i], fixed_mask_seed(cfg, i)));
  return masks;
}

// Fixed validation masks: one regular hole per validation video.
inline std::vector<MaskVolume> validation_masks(const std::vector<VideoVolume>& videos, const TrainConfig& cfg) {
  std::vector<MaskVolume> masks;
  for (std::size_t i = 0; i < videos.size(); ++i)
    masks.push_back(data::gen_regular_mask(videos[i].frames(), videos[i].height(),
                                           data::sample_seed(cfg.seed, "val", static_cast<int>(i)),
                                           cfg.hole_lo_frac, cfg.hole_hi_frac));
  return masks;
}

class Trainer {
 public:
  using ReportSink = std::function<void(const LossReport&)>;

  Trainer(std::vector<VideoVolume> train_set, std::vector<VideoVolume> val_set, TrainConfig cfg)
      : train_(std::move(train_set)), val_(std::move(val_set)), cfg_(std::move(cfg)) {
    cfg_.validate();
    if (train_.empty()) throw EmptyDataset("training set is empty");
    const auto& first = train_.front();
    if (first.rank() != 4 || first.channels() != 3 || first.height() != first.width())
      throw ShapeMismatch("training videos must be F x l x l x 3, got " + shape_str(first.shape()));
    for (const auto& v : train_) first.require_same_shape(v, "training set");
    for (const auto& v : val_) first.require_same_shape(v, "validation set");
    if (first.height() % cfg_.variant.rate())
      throw IndivisibleSize("frame size " + std::to_string(first.height()) + " not divisible by r");
    cfg_.frames = first.frames();
    cfg_.image_size = first.height();
    if (cfg_.mean_pixel_from_data) {
      cfg_.mean_pixel = data::compute_mean_pixel(data::as_samples(train_));
      cfg_.mean_pixel_from_data = false;
    }
    model_ = models::CompletionModel<float>::create(cfg_.model_options(), cfg_.seed);
    adam_ = Adam<float>(AdamConfig{cfg_.learning_rate, cfg_.weight_decay});
    val_masks_ = validation_masks(val_, cfg_);
  }

  // Continues from a checkpoint written by this trainer.
  void resume(const Checkpoint& ck) {
    if (ck.config.variant != cfg_.variant) throw VersionError("checkpoint variant differs from the trainer's");
    model_.params = model_tensors(ck);
    nn::ParameterSet<float> state;
    for (const auto& [k, v] : ck.tensors)
      if (std::string_view(k).starts_with("adam/")) state[k.substr(5)] = v;
    adam_.set_state(std::move(state));
    cfg_.mean_pixel = ck.config.mean_pixel;
    start_phase_ = ck.phase;
    start_iter_ = static_cast<int>(ck.iter);
    pretrain_run_ = ck.phase == Phase::Joint ? ck.config.pretrain_iters : static_cast<int>(ck.iter);
  }

  TrainResult run(const ReportSink& sink = {}) {
    TrainResult result;
    auto emit = [&](const LossReport& r) {
      result.reports.push_back(r);
      if (sink) sink(r);
    };

    if (start_phase_ == Phase::Pretrain && cfg_.strategy != Strategy::T2) {
      run_phase(Phase::Pretrain, cfg_.pretrain_iters, start_iter_, emit);
      start_iter_ = 0;
      save_if_requested(cfg_.checkpoint_path.empty() ? "" : cfg_.checkpoint_path + ".pretrain", Phase::Joint, 0);
    }
    result.pretrained = model_.params;
    run_phase(Phase::Joint, cfg_.joint_iters, start_phase_ == Phase::Joint ? start_iter_ : 0, emit);
    save_if_requested(cfg_.checkpoint_path, Phase::Joint, static_cast<std::uint64_t>(cfg_.joint_iters));

    result.pretrain_iters_run = pretrain_run_;
    result.model = model_;
    result.config = cfg_;
    result.optimizer_state = adam_.state();
    return result;
  }

  Checkpoint snapshot(Phase phase, std::uint64_t iter) const {
    Checkpoint ck;
    ck.config = cfg_;
    ck.phase = phase;
    ck.iter = iter;
    ck.tensors = model_.params;
    for (const auto& [k, v] : adam_.state()) ck.tensors["adam/" + k] = v;
    return ck;
  }

  const TrainConfig& config() const { return cfg_; }
  models::CompletionModel<float>& model() { return model_; }

 private:
  models::StepKind joint_kind() const {
    return cfg_.strategy == Strategy::T1 ? models::StepKind::JointFrozen3D : models::StepKind::Joint;
  }

  template <typename Emit>
  void run_phase(Phase phase, int iters, int first_done, Emit&& emit) {
    const auto kind = phase == Phase::Pretrain ? models::StepKind::Pretrain3D : joint_kind();
    const bool only3d = phase == Phase::Pretrain;
    const bool freeze3d = kind == models::StepKind::JointFrozen3D;
    auto filter = [&](const std::string& name) {
      const bool is3d = std::string_view(name).starts_with(models::k3dName);
      if (only3d) return is3d;
      return !(freeze3d && is3d);
    };

    double window_sum = 0;
    int window_n = 0;
    std::optional<double> prev_window;
    int strikes = 0;

    for (int it = first_done + 1; it <= iters; ++it) {
      auto rng = nn::make_rng(cfg_.seed, step_stream(phase, static_cast<std::uint64_t>(it)));
      const auto idx = std::uniform_int_distribution<std::size_t>(0, train_.size() - 1)(rng);
      const auto& video = train_[idx];
      const auto mask_seed = cfg_.fixed_train_masks ? fixed_mask_seed(cfg_, idx) : rng();
      const auto mask = train_mask(cfg_, video, mask_seed);
      const auto in = data::prepare_inputs(video, mask, cfg_.mean_pixel, model_.rate());
      auto step = models::run_step(model_, in, video, kind, cfg_.alpha, nn::BnMode::Train, true, true);
      adam_.step(model_.params, step.grads, filter);
      if (phase == Phase::Pretrain) pretrain_run_ = it;

      if (it % cfg_.log_every == 0 || it == iters) {
        emit(LossReport{it, step.loss_3dcn, step.loss_combcn, step.loss_total, phase, Split::Train});
        double monitor = step.loss_3dcn;
        if (!val_.empty()) {
          const auto e = evaluate(model_, val_, val_masks_, cfg_.mean_pixel, kind, cfg_.alpha, nn::BnMode::Eval);
          emit(LossReport{it, e.loss_3dcn, e.loss_combcn, e.loss_total, phase, Split::Val});
          monitor = e.loss_3dcn;
        }
        window_sum += monitor;
        ++window_n;
      }
      if (cfg_.checkpoint_every > 0 && it % cfg_.checkpoint_every == 0)
        save_if_requested(cfg_.checkpoint_path, phase, static_cast<std::uint64_t>(it));

      if (phase == Phase::Pretrain && it % cfg_.convergence_window == 0 && window_n > 0) {
        const double mean = window_sum / window_n;
        if (prev_window) {
          const double improvement = (*prev_window - mean) / std::max(std::abs(*prev_window), 1e-12);
          strikes = improvement < cfg_.convergence_tol ? strikes + 1 : 0;
        }
        prev_window = mean;
        window_sum = 0;
        window_n = 0;
        if (strikes >= 2) break;
      }
    }
  }

  void save_if_requested(const std::string& path, Phase phase, std::uint64_t iter) const {
    if (path.empty()) return;
    save_checkpoint(snapshot(phase, iter), path);
  }

  std::vector<VideoVolume> train_;
  std::vector<VideoVolume> val_;
  std::vector<MaskVolume> val_masks_;
  TrainConfig cfg_;
  models::CompletionModel<float> model_;
  Adam<float> adam_;
  Phase start_phase_ = Phase::Pretrain;
  int start_iter_ = 0;
  int pretrain_run_ = 0;
};

inline TrainResult train(std::vector<VideoVolume> train_set, std::vector<VideoVolume> val_set, const TrainConfig& cfg,
                         const Trainer::ReportSink& sink = {}) {
  Trainer t(std::move(train_set), std::move(val_set), cfg);
  return t.run(sink);
}

}  // namespace vinpaint::train
