// Trains narrow networks on a few synthetic clips for a handful of steps, then
// fills a hole in a held-out clip and reports the masked error.

#include <iostream>

#include "vinpaint/vinpaint.hpp"

using namespace vinpaint;

int main() {
  auto videos = data::synth_corpus(6, 8, 32, 11);
  auto [train_set, val_set] = data::split_train_val(videos, {5, 1});

  train::TrainConfig cfg;
  cfg.net3d.width_divisor = 8;
  cfg.comb.width_divisor = 8;
  cfg.pretrain_iters = 40;
  cfg.joint_iters = 80;
  cfg.log_every = 20;
  cfg.seed = 1;

  const auto result = train::train(train_set, val_set, cfg, [](const train::LossReport& r) {
    if (r.split == train::Split::Val)
      std::cout << train::to_string(r.phase) << " iter " << r.iter << "  val loss " << r.loss_total << '\n';
  });

  const auto& clip = val_set.front();
  const auto mask = data::gen_regular_mask(clip.frames(), clip.height(), 5);
  const auto filled = infer::inpaint_video(result.model, result.config, clip, mask, true);
  const auto metrics = infer::compute_metrics(filled.output, clip, mask);
  std::cout << "held-out masked l1 (0-255 scale): " << metrics.video_l1 << '\n'
            << "mean successive-frame difference: " << infer::mean_temporal_diff(filled.output) << '\n';
}
