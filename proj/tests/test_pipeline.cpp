#include <gtest/gtest.h>

#include <filesystem>
#include <set>
#include <tuple>

#include "test_util.hpp"

using namespace vinpaint;
using namespace vinpaint::data;

namespace {

std::vector<Image> constant_frames(int n, int h, int w, float v = 0.25f) {
  return std::vector<Image>(static_cast<std::size_t>(n), Image({h, w, 3}, v));
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("vinpaint_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(ExtractSamples, GroupsIntoFullSamples) {
  PipelineConfig cfg;
  const auto samples = extract_samples(constant_frames(160, 48, 64), cfg);
  ASSERT_EQ(samples.size(), 5u);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    EXPECT_EQ(samples[i].clean.shape(), (Shape{32, 128, 128, 3}));
    EXPECT_EQ(samples[i].frame_offset, static_cast<int>(i) * 32);
    EXPECT_TRUE(samples[i].mask.empty());
  }
  EXPECT_TRUE(extract_samples(constant_frames(31, 16, 16), cfg).empty());
}

TEST(ExtractSamples, CountIsFloorOfFramesOverGroup) {
  PipelineConfig cfg;
  cfg.sample_frames = 4;
  cfg.target_size = 8;
  for (int n = 1; n <= 21; ++n)
    EXPECT_EQ(extract_samples(constant_frames(n, 8, 8), cfg).size(), static_cast<std::size_t>(n / 4)) << n;
}

TEST(ExtractSamples, CropsTheCentralSquare) {
  // 640x480 frames: left and right 80-column bands are bright, the centre is dark.
  Image frame({480, 640, 3}, 0.0f);
  for (int y = 0; y < 480; ++y)
    for (int x = 0; x < 640; ++x)
      if (x < 80 || x >= 560)
        for (int k = 0; k < 3; ++k) frame[(std::size_t(y) * 640 + x) * 3 + k] = 1.0f;
  const auto cropped = crop_center_square(frame);
  EXPECT_EQ(cropped.shape(), (Shape{480, 480, 3}));
  for (float v : cropped.values()) ASSERT_EQ(v, 0.0f);

  PipelineConfig cfg;
  cfg.sample_frames = 1;
  const auto s = extract_samples({frame}, cfg);
  ASSERT_EQ(s.size(), 1u);
  for (float v : s[0].clean.values()) ASSERT_EQ(v, 0.0f);

  cfg.crop_mode = CropMode::None;
  const auto squashed = extract_samples({frame}, cfg);
  EXPECT_GT(squashed[0].clean.at(0, 64, 0, 0), 0.9f);
}

TEST(ExtractSamples, Errors) {
  PipelineConfig cfg;
  EXPECT_THROW(extract_samples({}, cfg), EmptyInput);
  std::vector<Image> frames = constant_frames(2, 8, 8);
  frames.push_back(Image({8, 9, 3}));
  EXPECT_THROW(extract_samples(frames, cfg), ShapeMismatch);
}

TEST(ResizeBilinear, ConstantStaysConstantAndIdentityIsExact) {
  const Image c({30, 50, 3}, 0.4f);
  for (float v : resize_bilinear(c, 16, 16).values()) EXPECT_NEAR(v, 0.4f, 1e-6f);
  std::mt19937_64 rng(3);
  const auto img = vinpaint::testing::random_tensor<float>({7, 9, 3}, rng, 0, 1);
  EXPECT_EQ(resize_bilinear(img, 7, 9), img);
}

TEST(SplitTrainVal, CeilingRule) {
  auto sizes = [](int n, std::pair<int, int> r) {
    const auto [tr, va] = split_train_val(std::vector<int>(static_cast<std::size_t>(n)), r);
    return std::pair<std::size_t, std::size_t>{tr.size(), va.size()};
  };
  EXPECT_EQ(sizes(12, {5, 1}), (std::pair<std::size_t, std::size_t>{10, 2}));
  EXPECT_EQ(sizes(6, {5, 1}), (std::pair<std::size_t, std::size_t>{5, 1}));
  EXPECT_EQ(sizes(7, {1, 1}), (std::pair<std::size_t, std::size_t>{4, 3}));
  const auto [tr, va] = split_train_val(std::vector<int>{0, 1, 2, 3, 4, 5, 6}, {1, 1});
  EXPECT_EQ(tr, (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(va, (std::vector<int>{4, 5, 6}));
  EXPECT_THROW(split_train_val(std::vector<int>{}, {5, 1}), EmptyInput);
}

TEST(RegularMask, SideRangeAndFrameConstantSquare) {
  EXPECT_EQ(hole_side_range(128), (std::pair<int, int>{48, 64}));
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto m = gen_regular_mask(4, 128, seed);
    int top = 128, left = 128, bottom = -1, right = -1;
    for (int y = 0; y < 128; ++y)
      for (int x = 0; x < 128; ++x)
        if (m.at(0, y, x)) {
          top = std::min(top, y);
          left = std::min(left, x);
          bottom = std::max(bottom, y);
          right = std::max(right, x);
        }
    const int side = bottom - top + 1;
    ASSERT_EQ(right - left + 1, side);
    ASSERT_GE(side, 48);
    ASSERT_LE(side, 64);
    ASSERT_EQ(m.count(), static_cast<std::size_t>(4 * side * side));
    for (int f = 1; f < 4; ++f)
      for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 128; ++x) ASSERT_EQ(m.at(f, y, x), m.at(0, y, x));
  }
}

TEST(RegularMask, HoleAtTheBottomRightCornerStaysInside) {
  MaskVolume m(1, 128, 128);
  stamp_hole(m, 0, SquareHole{64, 64, 64});
  EXPECT_EQ(m.count(), 64u * 64u);
  EXPECT_EQ(m.at(0, 127, 127), 1);
  EXPECT_EQ(m.at(0, 63, 127), 0);
}

TEST(RandomMask, DistinctPositionsAndSingleFrameMatchesRegular) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto m = gen_random_masks(32, 128, seed);
    std::set<std::tuple<int, int, int>> holes;
    for (int f = 0; f < 32; ++f) {
      int top = -1, left = -1, side = 0;
      for (int y = 0; y < 128 && top < 0; ++y)
        for (int x = 0; x < 128; ++x)
          if (m.at(f, y, x)) {
            top = y;
            left = x;
            break;
          }
      while (left + side < 128 && m.at(f, top, left + side)) ++side;
      ASSERT_GE(side, 48);
      ASSERT_LE(side, 64);
      ASSERT_EQ(m.frame_count(f), static_cast<std::size_t>(side * side));
      holes.insert({top, left, side});
    }
    EXPECT_GE(holes.size(), 2u);
    EXPECT_EQ(gen_random_masks(1, 128, seed), gen_regular_mask(1, 128, seed));
  }
}

TEST(Prefill, IdentityConstantAndIdempotent) {
  std::mt19937_64 rng(11);
  const auto v = vinpaint::testing::random_tensor<float>({2, 8, 8, 3}, rng, 0, 1);
  const Rgb mean{0.1f, 0.2f, 0.3f};
  EXPECT_EQ(prefill(v, MaskVolume(2, 8, 8), mean), v);

  MaskVolume ones(2, 8, 8);
  ones.fill(1);
  const auto all = prefill(v, ones, mean);
  for (std::size_t p = 0; p < ones.size(); ++p)
    for (int k = 0; k < 3; ++k) ASSERT_EQ(all[p * 3 + k], mean[k]);

  const auto m = vinpaint::testing::random_mask(2, 8, 8, rng);
  const auto once = prefill(v, m, mean);
  EXPECT_EQ(prefill(once, m, mean), once);
  EXPECT_THROW(prefill(v, MaskVolume(2, 8, 7), mean), ShapeMismatch);
}

TEST(AssembleInput, ConcatenatesMaskChannel) {
  std::mt19937_64 rng(5);
  const auto v = vinpaint::testing::random_tensor<float>({3, 6, 6, 3}, rng, 0, 1);
  const auto m = vinpaint::testing::random_mask(3, 6, 6, rng);
  const auto x = assemble_input(v, m);
  EXPECT_EQ(x.shape(), (Shape{3, 6, 6, 4}));
  for (std::size_t p = 0; p < m.size(); ++p) {
    for (int k = 0; k < 3; ++k) ASSERT_EQ(x[p * 4 + k], v[p * 3 + k]);
    ASSERT_EQ(x[p * 4 + 3], static_cast<float>(m[p]));
  }
  EXPECT_EQ(assemble_input(VideoVolume({32, 128, 128, 3}), MaskVolume(32, 128, 128)).shape(),
            (Shape{32, 128, 128, 4}));
  EXPECT_THROW(assemble_input(VideoVolume({3, 6, 6, 1}), m), ShapeMismatch);
}

TEST(Downsample, ShapesMeanAndRange) {
  EXPECT_EQ(downsample_volume(VideoVolume({32, 128, 128, 3}), 2).shape(), (Shape{32, 64, 64, 3}));
  std::mt19937_64 rng(8);
  const auto v = vinpaint::testing::random_tensor<float>({3, 8, 8, 3}, rng, 0, 1);
  EXPECT_EQ(downsample_volume(v, 1), v);
  const auto d = downsample_volume(v, 4);
  EXPECT_NEAR(mean_value(d), mean_value(v), 1e-6);
  for (float x : d.values()) {
    ASSERT_GE(x, 0.0f);
    ASSERT_LE(x, 1.0f);
  }
  for (float x : downsample_volume(VideoVolume({2, 8, 8, 3}, 0.7f), 2).values()) ASSERT_NEAR(x, 0.7f, 1e-7f);
  EXPECT_THROW(downsample_volume(v, 3), IndivisibleSize);
}

TEST(Downsample, MaskUsesMaxPooling) {
  MaskVolume m(1, 4, 4);
  m.at(0, 1, 2) = 1;
  const auto d = downsample_mask(m, 2);
  EXPECT_EQ(d.count(), 1u);
  EXPECT_EQ(d.at(0, 0, 1), 1);
  EXPECT_THROW(downsample_mask(m, 3), IndivisibleSize);
}

TEST(MeanPixel, MatchesDirectSummation) {
  auto samples = as_samples(synth_corpus(2, 4, 16, 21));
  samples[0].mask = gen_regular_mask(4, 16, 1);
  samples[1].mask = gen_regular_mask(4, 16, 2);
  double sum[3] = {0, 0, 0};
  double n = 0;
  for (const auto& s : samples)
    for (int f = 0; f < 4; ++f)
      for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
          if (s.mask.at(f, y, x)) continue;
          for (int k = 0; k < 3; ++k) sum[k] += s.clean.at(f, y, x, k);
          n += 1;
        }
  const auto mean = compute_mean_pixel(samples);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(mean[k], sum[k] / n, 1e-6);
}

TEST(SynthCorpus, ShapeDeterminismAndTranslation) {
  std::vector<SynthVideoParams> params;
  const auto a = synth_corpus(2, 8, 32, 7, &params);
  const auto b = synth_corpus(2, 8, 32, 7);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, synth_corpus(2, 8, 32, 8));
  for (std::size_t v = 0; v < a.size(); ++v) {
    EXPECT_EQ(a[v].shape(), (Shape{8, 32, 32, 3}));
    for (float x : a[v].values()) {
      ASSERT_GE(x, 0.0f);
      ASSERT_LE(x, 1.0f);
    }
    // The topmost rectangle is never occluded, so its pixels move by exactly its velocity.
    const auto& r = params[v].rects.back();
    for (int t = 0; t + 1 < 8; ++t)
      for (int y = r.top + r.vy * t; y < r.top + r.vy * t + r.height; ++y)
        for (int x = r.left + r.vx * t; x < r.left + r.vx * t + r.width; ++x) {
          const int y1 = y + r.vy, x1 = x + r.vx;
          if (y < 0 || x < 0 || y >= 32 || x >= 32 || y1 < 0 || x1 < 0 || y1 >= 32 || x1 >= 32) continue;
          for (int k = 0; k < 3; ++k) ASSERT_EQ(a[v].at(t + 1, y1, x1, k), a[v].at(t, y, x, k));
        }
  }
}

TEST(SynthCorpus, IndependentRenderAgrees) {
  std::vector<SynthVideoParams> params;
  const auto vids = synth_corpus(3, 5, 24, 99, &params);
  for (std::size_t v = 0; v < vids.size(); ++v) {
    const auto& p = params[v];
    for (int t = 0; t < 5; ++t)
      for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x) {
          // Last rectangle covering the pixel wins; background otherwise.
          const SynthRect* top = nullptr;
          for (const auto& r : p.rects) {
            const int ry = r.top + r.vy * t, rx = r.left + r.vx * t;
            if (y >= ry && y < ry + r.height && x >= rx && x < rx + r.width) top = &r;
          }
          for (int k = 0; k < 3; ++k) {
            const float expect = top ? top->color[k]
                                     : p.base[k] + p.grad_x[k] * float(x) / 23.0f + p.grad_y[k] * float(y) / 23.0f;
            ASSERT_FLOAT_EQ(vids[v].at(t, y, x, k), expect);
          }
        }
  }
}

TEST(SampleIo, RoundTripWithAndWithoutMask) {
  const auto dir = scratch_dir("sample_io");
  auto samples = as_samples(synth_corpus(2, 3, 16, 4), "clip");
  samples[0].mask = gen_random_masks(3, 16, 9);
  samples[1].frame_offset = 96;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto path = (dir / ("s" + std::to_string(i) + ".bin")).string();
    write_sample(samples[i], path);
    const auto back = read_sample(path);
    EXPECT_EQ(back.clean, samples[i].clean);
    EXPECT_EQ(back.mask, samples[i].mask);
    EXPECT_EQ(back.source_id, samples[i].source_id);
    EXPECT_EQ(back.frame_offset, samples[i].frame_offset);
  }
  const auto path = (dir / "s0.bin").string();
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 5);
  EXPECT_THROW(read_sample(path), IoError);
}

TEST(SampleIo, ManifestRoundTripAndSplitLoading) {
  const auto dir = scratch_dir("manifest");
  Manifest m;
  m.sample_frames = 3;
  m.target_size = 16;
  m.mean_pixel = {0.25f, 0.5f, 0.75f};
  const auto samples = as_samples(synth_corpus(3, 3, 16, 12));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::string file = "s" + std::to_string(i) + ".bin";
    write_sample(samples[i], (dir / file).string());
    m.samples.push_back({file, samples[i].source_id, 0, i < 2 ? "train" : "val"});
  }
  const auto path = (dir / "manifest.json").string();
  write_manifest(m, path);
  const auto back = read_manifest(path);
  EXPECT_EQ(back.mean_pixel, m.mean_pixel);
  ASSERT_EQ(back.samples.size(), 3u);
  const auto train = load_split(back, path, "train");
  const auto val = load_split(back, path, "val");
  ASSERT_EQ(train.size(), 2u);
  ASSERT_EQ(val.size(), 1u);
  EXPECT_EQ(val[0].clean, samples[2].clean);
}

TEST(SampleSeed, DependsOnEveryComponent) {
  const auto s = sample_seed(1, "a", 0);
  EXPECT_EQ(s, sample_seed(1, "a", 0));
  EXPECT_NE(s, sample_seed(2, "a", 0));
  EXPECT_NE(s, sample_seed(1, "b", 0));
  EXPECT_NE(s, sample_seed(1, "a", 32));
}
