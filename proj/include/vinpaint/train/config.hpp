#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "vinpaint/models/completion_model.hpp"

namespace vinpaint::models {

inline void to_json(nlohmann::json& j, const NetOptions& o) {
  j = {{"width_divisor", o.width_divisor}, {"layers", o.layers}};
}
inline void from_json(const nlohmann::json& j, NetOptions& o) {
  o.width_divisor = j.value("width_divisor", 1);
  o.layers = j.value("layers", std::vector<int>{});
}

}  // namespace vinpaint::models

namespace vinpaint::train {

// OURS: pretrain the 3D network, then fine-tune everything jointly.
// T1: pretrain, then train the 2D side with the 3D network frozen.
// T2: joint training from scratch, no pretraining.
enum class Strategy { Ours, T1, T2 };

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::Ours: return "ours";
    case Strategy::T1: return "t1";
    case Strategy::T2: return "t2";
  }
  return "?";
}

inline Strategy parse_strategy(const std::string& s) {
  if (s == "ours") return Strategy::Ours;
  if (s == "t1") return Strategy::T1;
  if (s == "t2") return Strategy::T2;
  throw InvalidConfig("unknown strategy '" + s + "'");
}

struct TrainConfig {
  Strategy strategy = Strategy::Ours;
  models::Variant3D variant;
  double alpha = 1.0;
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  int pretrain_iters = 1000;
  int joint_iters = 1000;
  int batch = 1;
  std::uint64_t seed = 0;
  int log_every = 100;
  int checkpoint_every = 0;
  std::string checkpoint_path;

  models::NetOptions net3d;
  models::NetOptions comb;
  bool fusion_enabled = true;
  // Draw one hole per training video up front instead of a new one every step
  // (overfitting checks).
  bool fixed_train_masks = false;
  // Per-frame holes (random mode) instead of one frame-constant hole.
  bool random_train_masks = false;

  // Pipeline facts carried with the model so inference can check its inputs.
  data::Rgb mean_pixel{0.5f, 0.5f, 0.5f};
  bool mean_pixel_from_data = true;
  double hole_lo_frac = 0.375;
  double hole_hi_frac = 0.5;
  int frames = 0;      // filled from the training data
  int image_size = 0;  // filled from the training data

  // Early stop of pretraining: two consecutive windows whose mean validation
  // loss improves by less than convergence_tol (relative).
  int convergence_window = 1000;
  double convergence_tol = 0.005;

  models::ModelOptions model_options() const { return {variant, net3d, comb, fusion_enabled}; }

  void validate() const {
    if (alpha < 0) throw InvalidConfig("alpha must be >= 0");
    if (!(learning_rate > 0)) throw InvalidConfig("learning_rate must be > 0");
    if (weight_decay < 0) throw InvalidConfig("weight_decay must be >= 0");
    if (strategy == Strategy::T2 && pretrain_iters != 0) throw InvalidConfig("T2 requires pretrain_iters = 0");
    if (pretrain_iters < 0 || joint_iters < 0) throw InvalidConfig("iteration counts must be >= 0");
    if (batch != 1) throw InvalidConfig("batch must be 1 (one video per step)");
    if (log_every < 1) throw InvalidConfig("log_every must be >= 1");
    if (convergence_window < 1) throw InvalidConfig("convergence_window must be >= 1");
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"strategy", to_string(c.strategy)},
       {"variant", models::to_string(c.variant.tag)},
       {"alpha", c.alpha},
       {"learning_rate", c.learning_rate},
       {"weight_decay", c.weight_decay},
       {"pretrain_iters", c.pretrain_iters},
       {"joint_iters", c.joint_iters},
       {"batch", c.batch},
       {"seed", c.seed},
       {"log_every", c.log_every},
       {"checkpoint_every", c.checkpoint_every},
       {"checkpoint_path", c.checkpoint_path},
       {"net3d", c.net3d},
       {"comb", c.comb},
       {"fusion_enabled", c.fusion_enabled},
       {"fixed_train_masks", c.fixed_train_masks},
       {"random_train_masks", c.random_train_masks},
       {"mean_pixel", c.mean_pixel},
       {"mean_pixel_from_data", c.mean_pixel_from_data},
       {"hole_lo_frac", c.hole_lo_frac},
       {"hole_hi_frac", c.hole_hi_frac},
       {"frames", c.frames},
       {"image_size", c.image_size},
       {"convergence_window", c.convergence_window},
       {"convergence_tol", c.convergence_tol}};
}

// Missing keys keep their defaults, so partial JSON files work as overrides.
inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  if (j.contains("strategy")) c.strategy = parse_strategy(j.at("strategy").get<std::string>());
  if (j.contains("variant")) c.variant.tag = models::parse_variant(j.at("variant").get<std::string>());
  c.alpha = j.value("alpha", c.alpha);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.pretrain_iters = j.value("pretrain_iters", c.pretrain_iters);
  c.joint_iters = j.value("joint_iters", c.joint_iters);
  c.batch = j.value("batch", c.batch);
  c.seed = j.value("seed", c.seed);
  c.log_every = j.value("log_every", c.log_every);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.checkpoint_path = j.value("checkpoint_path", c.checkpoint_path);
  if (j.contains("net3d")) c.net3d = j.at("net3d").get<models::NetOptions>();
  if (j.contains("comb")) c.comb = j.at("comb").get<models::NetOptions>();
  c.fusion_enabled = j.value("fusion_enabled", c.fusion_enabled);
  c.fixed_train_masks = j.value("fixed_train_masks", c.fixed_train_masks);
  c.random_train_masks = j.value("random_train_masks", c.random_train_masks);
  if (j.contains("mean_pixel")) c.mean_pixel = j.at("mean_pixel").get<data::Rgb>();
  c.mean_pixel_from_data = j.value("mean_pixel_from_data", c.mean_pixel_from_data);
  c.hole_lo_frac = j.value("hole_lo_frac", c.hole_lo_frac);
  c.hole_hi_frac = j.value("hole_hi_frac", c.hole_hi_frac);
  c.frames = j.value("frames", c.frames);
  c.image_size = j.value("image_size", c.image_size);
  c.convergence_window = j.value("convergence_window", c.convergence_window);
  c.convergence_tol = j.value("convergence_tol", c.convergence_tol);
}

}  // namespace vinpaint::train
