#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace vinpaint;
using namespace vinpaint::train;
using vinpaint::testing::random_mask;
using vinpaint::testing::random_tensor;

namespace {

// Scalar-loop reference: per-frame sum of |diff| over hole pixels and channels,
// divided by (hole pixels x channels), times 255.
double oracle_frame(const Tensor<double>& out, const MaskVolume& m, const Tensor<double>& gt, int f) {
  double s = 0, n = 0;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(f, y, x)) continue;
      n += 1;
      for (int k = 0; k < out.channels(); ++k) s += std::abs(out.at(f, y, x, k) - gt.at(f, y, x, k));
    }
  return 255.0 * s / (n * out.channels());
}

double oracle_3d(const Tensor<double>& out, const MaskVolume& m, const Tensor<double>& gt) {
  double s = 0, n = 0;
  for (int f = 0; f < m.frames(); ++f)
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x) {
        if (!m.at(f, y, x)) continue;
        n += 1;
        for (int k = 0; k < out.channels(); ++k) s += std::abs(out.at(f, y, x, k) - gt.at(f, y, x, k));
      }
  return 255.0 * s / (n * out.channels());
}

double oracle_comb(const Tensor<double>& out, const MaskVolume& m, const Tensor<double>& gt) {
  double s = 0;
  int n = 0;
  for (int f = 0; f < m.frames(); ++f) {
    if (m.frame_count(f) == 0) continue;
    s += oracle_frame(out, m, gt, f);
    ++n;
  }
  return s / n;
}

}  // namespace

TEST(Loss3d, ZeroForPerfectOutput) {
  std::mt19937_64 rng(1);
  const auto v = random_tensor<float>({2, 4, 4, 3}, rng, 0, 1);
  MaskVolume m(2, 4, 4);
  m.at(1, 2, 2) = 1;
  EXPECT_EQ(loss_3dcn(v, m, v), 0.0);
  EXPECT_EQ(loss_combcn(v, m, v), 0.0);
}

TEST(Loss3d, SinglePixelHandSum) {
  Tensor<double> out({1, 2, 2, 3}), gt({1, 2, 2, 3});
  out.at(0, 1, 0, 0) = 0.1;
  out.at(0, 1, 0, 1) = 0.2;
  out.at(0, 1, 0, 2) = 0.3;
  out.at(0, 0, 0, 0) = 0.9;  // outside the hole, ignored
  MaskVolume m(1, 2, 2);
  m.at(0, 1, 0) = 1;
  EXPECT_NEAR(loss_3dcn(out, m, gt), 51.0, 1e-12);
}

TEST(Loss3d, UniformDifferenceEverywhere) {
  Tensor<double> out({2, 4, 4, 3}, 0.1), gt({2, 4, 4, 3}, 0.0);
  MaskVolume m(2, 4, 4);
  m.fill(1);
  EXPECT_NEAR(loss_3dcn(out, m, gt), 25.5, 1e-12);
  EXPECT_NEAR(loss_3dcn(out, m, gt), oracle_3d(out, m, gt), 1e-12);
}

TEST(Loss3d, EmptyMaskAndShapeErrors) {
  Tensor<float> a({1, 4, 4, 3});
  EXPECT_THROW(loss_3dcn(a, MaskVolume(1, 4, 4), a), EmptyMask);
  MaskVolume m(1, 4, 4);
  m.fill(1);
  EXPECT_THROW(loss_3dcn(a, m, Tensor<float>({1, 4, 5, 3})), ShapeMismatch);
  EXPECT_THROW(loss_3dcn(a, MaskVolume(1, 4, 5), a), ShapeMismatch);
}

TEST(LossComb, MeanOverFrames) {
  // Frame 0 error 10/255, frame 1 error 30/255, different hole sizes.
  Tensor<double> out({2, 4, 4, 3}), gt({2, 4, 4, 3});
  MaskVolume m(2, 4, 4);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) m.at(0, y, x) = 1;
  m.at(1, 3, 3) = 1;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = i < out.size() / 2 ? 10.0 / 255 : 30.0 / 255;
  EXPECT_NEAR(loss_combcn(out, m, gt), 20.0, 1e-12);
  const auto per = per_frame_l1(out, m, gt);
  EXPECT_NEAR(per[0], 10.0, 1e-12);
  EXPECT_NEAR(per[1], 30.0, 1e-12);
}

TEST(LossComb, EmptyFramesAreSkipped) {
  Tensor<double> out({3, 4, 4, 3}, 0.2), gt({3, 4, 4, 3});
  MaskVolume m(3, 4, 4);
  m.at(1, 0, 0) = 1;
  EXPECT_NEAR(loss_combcn(out, m, gt), 51.0, 1e-12);
  EXPECT_TRUE(std::isnan(per_frame_l1(out, m, gt)[0]));
  EXPECT_THROW(loss_combcn(out, MaskVolume(3, 4, 4), gt), EmptyMask);
}

TEST(LossOracle, RandomInstancesAgree) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> fd(1, 4), sd(1, 8);
  for (int trial = 0; trial < 100; ++trial) {
    const int f = fd(rng), h = sd(rng), w = sd(rng);
    const auto out = random_tensor<double>({f, h, w, 3}, rng, 0, 1);
    const auto gt = random_tensor<double>({f, h, w, 3}, rng, 0, 1);
    auto m = random_mask(f, h, w, rng, 0.4);
    m.at(0, 0, 0) = 1;
    EXPECT_NEAR(loss_3dcn(out, m, gt), oracle_3d(out, m, gt), 1e-6);
    EXPECT_NEAR(loss_combcn(out, m, gt), oracle_comb(out, m, gt), 1e-6);
    const auto of = out.cast<float>(), gf = gt.cast<float>();
    EXPECT_NEAR(loss_3dcn(of, m, gf), oracle_3d(out, m, gt), 1e-3);
  }
}

TEST(LossScale, ConstantDifferenceIsExactly255c) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> cd(0.0, 1.0);
  std::uniform_int_distribution<int> fd(1, 4), sd(1, 8);
  for (int trial = 0; trial < 200; ++trial) {
    const double c = trial == 0 ? 0.0 : cd(rng);
    const int f = fd(rng), h = sd(rng), w = sd(rng);
    Tensor<double> out({f, h, w, 3}, c), gt({f, h, w, 3}, 0.0);
    auto m = random_mask(f, h, w, rng);
    for (int k = 0; k < f; ++k) m.at(k, 0, 0) = 1;
    EXPECT_EQ(loss_3dcn(out, m, gt), 255.0 * c);
    EXPECT_EQ(loss_combcn(out, m, gt), 255.0 * c);
  }
}

TEST(LossGradient, SignTimesNormalization) {
  std::mt19937_64 rng(3);
  const auto out = random_tensor<double>({2, 3, 3, 3}, rng, 0, 1);
  const auto gt = random_tensor<double>({2, 3, 3, 3}, rng, 0, 1);
  auto m = random_mask(2, 3, 3, rng, 0.5);
  m.at(0, 0, 0) = m.at(1, 1, 1) = 1;
  for (int which = 0; which < 2; ++which) {
    Tensor<double> grad(out.shape());
    auto f = [&](const Tensor<double>& o) { return which ? loss_combcn(o, m, gt) : loss_3dcn(o, m, gt); };
    if (which)
      loss_combcn(out, m, gt, &grad, 0.5);
    else
      loss_3dcn(out, m, gt, &grad, 0.5);
    auto probe = out;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double num = vinpaint::testing::central_difference(probe[i], 1e-7, [&] { return f(probe); });
      EXPECT_NEAR(grad[i], 0.5 * num, 1e-5) << i;
    }
  }
}

TEST(LossTotal, AffineCombination) {
  EXPECT_NEAR(loss_total(4.45, 4.20, 1.0), 8.65, 1e-12);
  EXPECT_EQ(loss_total(3.0, 7.0, 0.0), 3.0);
  EXPECT_EQ(loss_total(0.0, 0.0, 1.0), 0.0);
  // Affine in each argument: f(a + t) - f(a) does not depend on a.
  for (double a : {0.5, 2.0, 10.0}) {
    EXPECT_DOUBLE_EQ(loss_total(a + 1.5, 2.0, 0.5) - loss_total(a, 2.0, 0.5), 1.5);
    EXPECT_DOUBLE_EQ(loss_total(2.0, a + 2.0, 0.5) - loss_total(2.0, a, 0.5), 1.0);
    EXPECT_DOUBLE_EQ(loss_total(2.0, 4.0, a + 1.0) - loss_total(2.0, 4.0, a), 4.0);
  }
}
