#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "frame_io.hpp"

namespace fs = std::filesystem;
using namespace vinpaint;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Sample files live in --out when given, otherwise under $COMBCN_CACHE.
fs::path cache_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("COMBCN_CACHE"); env && *env) return env;
  throw UsageError("no output directory: pass --out or set COMBCN_CACHE");
}

fs::path manifest_path(const std::string& flag) {
  fs::path p = flag.empty() ? cache_dir("") : fs::path(flag);
  if (fs::is_directory(p)) p /= "manifest.json";
  return p;
}

std::pair<int, int> parse_ratio(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw UsageError("split ratio must look like 5:1");
  try {
    return {std::stoi(s.substr(0, colon)), std::stoi(s.substr(colon + 1))};
  } catch (const std::exception&) {
    throw UsageError("split ratio must look like 5:1");
  }
}

void write_corpus(const fs::path& dir, const std::vector<data::Sample>& samples, std::pair<int, int> ratio) {
  fs::create_directories(dir);
  auto [train_set, val_set] = data::split_train_val(samples, ratio);
  data::Manifest m;
  m.sample_frames = samples.front().clean.frames();
  m.target_size = samples.front().clean.height();
  m.mean_pixel = data::compute_mean_pixel(train_set);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "sample_%05zu.vsmp", i);
    data::write_sample(samples[i], (dir / name).string());
    m.samples.push_back({name, samples[i].source_id, samples[i].frame_offset, i < train_set.size() ? "train" : "val"});
  }
  data::write_manifest(m, (dir / "manifest.json").string());
  std::cerr << "wrote " << samples.size() << " samples (" << train_set.size() << " train, " << val_set.size()
            << " val) to " << dir.string() << '\n';
}

// Each input is a clip (image directory or video file) or a directory of clips.
std::vector<fs::path> expand_clips(const std::vector<std::string>& inputs) {
  std::vector<fs::path> clips;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (!fs::exists(p)) throw IoError("no such input " + in);
    if (!fs::is_directory(p) || !io::list_images(p).empty()) {
      clips.push_back(p);
      continue;
    }
    std::vector<fs::path> children;
    for (const auto& e : fs::directory_iterator(p)) children.push_back(e.path());
    std::sort(children.begin(), children.end());
    clips.insert(clips.end(), children.begin(), children.end());
  }
  return clips;
}

std::vector<VideoVolume> videos_of(const std::vector<data::Sample>& samples) {
  std::vector<VideoVolume> v;
  for (const auto& s : samples) v.push_back(s.clean);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage video inpainting: data preparation, training, inference and evaluation"};
  app.require_subcommand(1);
  std::function<void()> action;

  // prepare
  std::vector<std::string> prep_inputs;
  std::string prep_out, prep_split = "5:1", prep_crop = "center";
  int prep_frames = 32, prep_size = 128;
  auto* prep = app.add_subcommand("prepare", "Cut clips into fixed-length samples and write a manifest");
  prep->add_option("--input", prep_inputs, "Clip directories, video files, or directories of clips")->required();
  prep->add_option("--out", prep_out, "Output directory (default $COMBCN_CACHE)");
  prep->add_option("--frames", prep_frames, "Frames per sample")->check(CLI::PositiveNumber);
  prep->add_option("--size", prep_size, "Output side length")->check(CLI::PositiveNumber);
  prep->add_option("--crop", prep_crop, "Crop before resizing")->check(CLI::IsMember({"center", "none"}));
  prep->add_option("--split", prep_split, "Train:val ratio");
  prep->callback([&] {
    action = [&] {
      data::PipelineConfig pc;
      pc.sample_frames = prep_frames;
      pc.target_size = prep_size;
      pc.crop_mode = prep_crop == "center" ? data::CropMode::CenterSquare : data::CropMode::None;
      pc.split_ratio = parse_ratio(prep_split);
      const auto dir = cache_dir(prep_out);
      std::vector<data::Sample> samples;
      for (const auto& clip : expand_clips(prep_inputs)) {
        auto s = data::extract_samples(io::read_clip(clip), pc, clip.filename().string());
        samples.insert(samples.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
      }
      if (samples.empty()) throw EmptyDataset("no clip has " + std::to_string(prep_frames) + " frames");
      write_corpus(dir, samples, pc.split_ratio);
    };
  });

  // synth
  int syn_n = 6, syn_frames = 8, syn_size = 32;
  std::uint64_t syn_seed = 0;
  std::string syn_out, syn_split = "5:1";
  auto* syn = app.add_subcommand("synth", "Generate a synthetic corpus of moving rectangles");
  syn->add_option("--n", syn_n, "Number of videos")->check(CLI::PositiveNumber);
  syn->add_option("--frames", syn_frames, "Frames per video")->check(CLI::PositiveNumber);
  syn->add_option("--size", syn_size, "Side length")->check(CLI::PositiveNumber);
  syn->add_option("--seed", syn_seed, "Random seed");
  syn->add_option("--out", syn_out, "Output directory (default $COMBCN_CACHE)");
  syn->add_option("--split", syn_split, "Train:val ratio");
  syn->callback([&] {
    action = [&] {
      const auto videos = data::synth_corpus(syn_n, syn_frames, syn_size, syn_seed);
      write_corpus(cache_dir(syn_out), data::as_samples(videos), parse_ratio(syn_split));
    };
  });

  // train
  std::string tr_data, tr_config, tr_resume, tr_out, tr_log, tr_strategy = "ours", tr_variant = "base";
  std::uint64_t tr_seed = 0;
  int tr_pre = 0, tr_joint = 0, tr_div = 1, tr_log_every = 0, tr_ck_every = 0;
  double tr_lr = 0, tr_alpha = 0;
  bool tr_no_fusion = false;
  auto* tr = app.add_subcommand("train", "Train the completion model");
  tr->add_option("--data", tr_data, "Manifest file or its directory (default $COMBCN_CACHE)");
  auto* o_strategy = tr->add_option("--strategy", tr_strategy, "Training strategy")
                         ->check(CLI::IsMember({"ours", "t1", "t2"}));
  auto* o_variant = tr->add_option("--variant", tr_variant, "3D network variant")
                        ->check(CLI::IsMember({"base", "v1", "v2"}));
  tr->add_option("--config", tr_config, "JSON config; flags given on the command line take precedence")
      ->check(CLI::ExistingFile);
  tr->add_option("--resume", tr_resume, "Checkpoint to continue from")->check(CLI::ExistingFile);
  tr->add_option("--out", tr_out, "Checkpoint file to write")->required();
  tr->add_option("--log", tr_log, "Loss CSV (default stdout)");
  auto* o_seed = tr->add_option("--seed", tr_seed, "Random seed");
  auto* o_pre = tr->add_option("--pretrain-iters", tr_pre, "3D network pretraining iterations")
                    ->check(CLI::NonNegativeNumber);
  auto* o_joint = tr->add_option("--joint-iters", tr_joint, "Joint iterations")->check(CLI::NonNegativeNumber);
  auto* o_lr = tr->add_option("--lr", tr_lr, "Learning rate")->check(CLI::PositiveNumber);
  auto* o_alpha = tr->add_option("--alpha", tr_alpha, "Weight of the 2D loss in the total")
                      ->check(CLI::NonNegativeNumber);
  auto* o_div = tr->add_option("--width-divisor", tr_div, "Divide every layer's channel count")
                    ->check(CLI::PositiveNumber);
  auto* o_log_every = tr->add_option("--log-every", tr_log_every, "Iterations per log row")
                          ->check(CLI::PositiveNumber);
  auto* o_ck_every = tr->add_option("--checkpoint-every", tr_ck_every, "Iterations per periodic checkpoint")
                         ->check(CLI::NonNegativeNumber);
  auto* o_no_fusion = tr->add_flag("--no-fusion", tr_no_fusion, "Train the 2D network without guidance fusion");
  std::string tr_masks = "regular";
  auto* o_masks = tr->add_option("--train-masks", tr_masks, "Training holes: one per video or one per frame")
                      ->check(CLI::IsMember({"regular", "random"}));
  tr->callback([&] {
    action = [&] {
      train::TrainConfig cfg;
      std::optional<train::Checkpoint> resume;
      if (!tr_resume.empty()) {
        resume = train::load_checkpoint(tr_resume);
        cfg = resume->config;
      }
      if (!tr_config.empty()) {
        std::ifstream f(tr_config);
        try {
          train::from_json(nlohmann::json::parse(f), cfg);
        } catch (const nlohmann::json::exception& e) {
          throw InvalidConfig(tr_config + ": " + e.what());
        }
      }
      if (o_strategy->count()) cfg.strategy = train::parse_strategy(tr_strategy);
      if (o_variant->count()) cfg.variant.tag = models::parse_variant(tr_variant);
      if (o_seed->count()) cfg.seed = tr_seed;
      if (o_pre->count()) cfg.pretrain_iters = tr_pre;
      if (o_joint->count()) cfg.joint_iters = tr_joint;
      if (o_lr->count()) cfg.learning_rate = tr_lr;
      if (o_alpha->count()) cfg.alpha = tr_alpha;
      if (o_div->count()) cfg.net3d.width_divisor = cfg.comb.width_divisor = tr_div;
      if (o_log_every->count()) cfg.log_every = tr_log_every;
      if (o_ck_every->count()) cfg.checkpoint_every = tr_ck_every;
      if (o_no_fusion->count()) cfg.fusion_enabled = false;
      if (o_masks->count()) cfg.random_train_masks = tr_masks == "random";
      if (cfg.strategy == train::Strategy::T2) cfg.pretrain_iters = 0;
      cfg.checkpoint_path = tr_out;

      const auto mpath = manifest_path(tr_data);
      const auto manifest = data::read_manifest(mpath.string());
      auto train_set = videos_of(data::load_split(manifest, mpath.string(), "train"));
      auto val_set = videos_of(data::load_split(manifest, mpath.string(), "val"));

      std::ofstream log_file;
      if (!tr_log.empty()) {
        log_file.open(tr_log, std::ios::trunc);
        if (!log_file) throw IoError("cannot write " + tr_log);
      }
      std::ostream& log = tr_log.empty() ? std::cout : log_file;
      log << std::setprecision(9);
      train::write_csv_header(log);

      train::Trainer trainer(std::move(train_set), std::move(val_set), cfg);
      if (resume) trainer.resume(*resume);
      const auto result = trainer.run([&](const train::LossReport& r) {
        train::write_csv_row(log, r);
        log.flush();
      });
      std::cerr << "pretrain iterations run: " << result.pretrain_iters_run << ", checkpoint " << tr_out << '\n';
    };
  });

  // infer
  std::string in_ck, in_input, in_mask_file, in_mask = "regular", in_out, in_crop = "center";
  std::uint64_t in_seed = 0;
  bool in_lowres = false, in_diffs = false, in_fit = false;
  auto* inf = app.add_subcommand("infer", "Inpaint a video with a trained checkpoint");
  inf->add_option("--checkpoint", in_ck, "Checkpoint file")->required();
  inf->add_option("--input", in_input, "Image directory, video file or sample file")->required();
  auto* o_mask_file = inf->add_option("--mask-file", in_mask_file, "Mask image, or a directory with one per frame");
  inf->add_option("--mask", in_mask, "Generated mask when no mask file is given")
      ->check(CLI::IsMember({"regular", "random"}))
      ->excludes(o_mask_file);
  inf->add_option("--seed", in_seed, "Seed for generated masks");
  inf->add_option("--out", in_out, "Output directory")->required();
  inf->add_flag("--lowres", in_lowres, "Also write the 3D network's low-resolution result");
  inf->add_flag("--diffs", in_diffs, "Also write temporal difference images of the result");
  inf->add_flag("--fit", in_fit, "Crop and resize frames to the checkpoint's resolution");
  inf->add_option("--crop", in_crop, "Crop used by --fit")->check(CLI::IsMember({"center", "none"}));
  inf->callback([&] {
    action = [&] {
      const auto ck = train::load_checkpoint(in_ck);
      const auto model = train::model_from_checkpoint(ck);
      auto video = io::read_video(in_input);
      if (in_fit)
        video = io::fit_video(video, ck.config.image_size,
                              in_crop == "center" ? data::CropMode::CenterSquare : data::CropMode::None);
      MaskVolume mask;
      if (!in_mask_file.empty()) {
        mask = io::read_mask(in_mask_file, video.frames(), video.height(), video.width());
        if (mask.count() == 0) throw EmptyMask("mask file " + in_mask_file + " marks no pixels");
      } else {
        const infer::MaskSource src = in_mask == "random" ? infer::MaskSource{infer::RandomMask{in_seed}}
                                                          : infer::MaskSource{infer::RegularMask{in_seed}};
        if (video.height() != video.width())
          throw ShapeMismatch("generated masks need square frames; use --fit");
        mask = infer::resolve_mask(src, video.frames(), video.height(), ck.config);
      }
      const auto r = infer::inpaint_video(model, ck.config, video, mask, in_lowres);
      const fs::path out(in_out);
      io::write_frames(out / "frames", r.output, "frame");
      io::write_mask(out / "masks", r.mask, "mask");
      if (in_lowres) io::write_frames(out / "lowres", r.lowres, "frame", "_lowres");
      if (in_diffs) {
        const auto diffs = infer::temporal_diff(r.output);
        fs::create_directories(out / "diffs");
        for (std::size_t k = 0; k < diffs.size(); ++k)
          io::write_image(out / "diffs" / io::frame_name("diff", static_cast<int>(k)), diffs[k]);
      }
      std::cerr << "wrote " << r.output.frames() << " frames to " << (out / "frames").string() << '\n';
    };
  });

  // eval
  std::string ev_output, ev_gt, ev_mask, ev_id, ev_csv;
  auto* ev = app.add_subcommand("eval", "Masked l1 error of a result against ground truth");
  ev->add_option("--output", ev_output, "Result frames (directory, video or sample file)")->required();
  ev->add_option("--gt", ev_gt, "Ground truth frames (directory, video or sample file)")->required();
  ev->add_option("--mask", ev_mask, "Mask image or directory of per-frame masks")->required();
  ev->add_option("--video-id", ev_id, "Identifier written in the CSV (default: ground truth name)");
  ev->add_option("--csv", ev_csv, "CSV file (default stdout)");
  ev->callback([&] {
    action = [&] {
      const auto out = io::read_video(ev_output);
      const auto gt = io::read_video(ev_gt);
      const auto mask = io::read_mask(ev_mask, gt.frames(), gt.height(), gt.width());
      const auto m = infer::compute_metrics(out, gt, mask);
      const std::string id = ev_id.empty() ? fs::path(ev_gt).stem().string() : ev_id;
      std::ofstream file;
      if (!ev_csv.empty()) {
        file.open(ev_csv, std::ios::trunc);
        if (!file) throw IoError("cannot write " + ev_csv);
      }
      std::ostream& os = ev_csv.empty() ? std::cout : file;
      os << std::setprecision(9) << "video_id,frame,l1_masked\n";
      for (std::size_t f = 0; f < m.frame_l1.size(); ++f)
        if (!std::isnan(m.frame_l1[f])) os << id << ',' << f << ',' << m.frame_l1[f] << '\n';
      os << id << ",all," << m.video_l1 << '\n';
    };
  });

  // diff
  std::string df_input, df_out;
  float df_gain = infer::kDiffGain;
  auto* df = app.add_subcommand("diff", "Write successive-frame difference images");
  df->add_option("--input", df_input, "Frames (directory, video or sample file)")->required();
  df->add_option("--out", df_out, "Output directory")->required();
  df->add_option("--gain", df_gain, "Tone-mapping gain")->check(CLI::PositiveNumber);
  df->callback([&] {
    action = [&] {
      const auto video = io::read_video(df_input);
      const auto diffs = infer::temporal_diff(video, df_gain);
      fs::create_directories(df_out);
      for (std::size_t k = 0; k < diffs.size(); ++k)
        io::write_image(fs::path(df_out) / io::frame_name("diff", static_cast<int>(k)), diffs[k]);
      std::cout << std::setprecision(9) << "mean_abs_diff," << infer::mean_temporal_diff(video) << '\n';
    };
  });

  // paramdiff
  std::string pd_a, pd_b, pd_prefix;
  auto* pd = app.add_subcommand("paramdiff", "Compare the parameters of two checkpoints");
  pd->add_option("a", pd_a, "First checkpoint")->required()->check(CLI::ExistingFile);
  pd->add_option("b", pd_b, "Second checkpoint")->required()->check(CLI::ExistingFile);
  pd->add_option("--prefix", pd_prefix, "Only tensors whose name starts with this (g3d., comb., fuse.)");
  pd->callback([&] {
    action = [&] {
      const auto a = train::model_tensors(train::load_checkpoint(pd_a));
      const auto b = train::model_tensors(train::load_checkpoint(pd_b));
      int compared = 0, changed = 0;
      std::cout << std::setprecision(9) << "tensor,max_abs_diff\n";
      for (const auto& [name, ta] : a) {
        if (!std::string_view(name).starts_with(pd_prefix)) continue;
        const auto it = b.find(name);
        if (it == b.end() || it->second.shape() != ta.shape()) {
          std::cout << name << ",missing\n";
          ++changed;
          continue;
        }
        const float d = max_abs_diff(ta, it->second);
        std::cout << name << ',' << d << '\n';
        ++compared;
        changed += !(ta == it->second);
      }
      for (const auto& [name, tb] : b)
        if (std::string_view(name).starts_with(pd_prefix) && !a.count(name)) {
          std::cout << name << ",missing\n";
          ++changed;
        }
      std::cerr << compared << " tensors compared, " << changed << " differ\n";
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  try {
    action();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
