//  Copyright 2026 The dccf Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#include <gtest/gtest.h>

#include "dccf/assembly.hpp"
#include "dccf/losses.hpp"
#include "support/synthetic.hpp"

namespace dccf {
namespace {

TEST(FgMse, EqualImagesGiveZero) {
  const RgbImage img = testing::random_image(10, 10, 1);
  EXPECT_EQ(fg_mse(img, img, testing::ellipse_mask(10, 10)), 0.0);
}

TEST(FgMse, FullMaskIsPlainMean) {
  const RgbImage a = testing::random_image(20, 20, 2);
  const RgbImage b = testing::random_image(20, 20, 3);
  double sse = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) sse += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
  EXPECT_DOUBLE_EQ(fg_mse(a, b, testing::full_mask(20, 20)), sse / 400.0);
}

TEST(FgMse, SmallMaskUsesAreaFloor) {
  const RgbImage gt(10, 10, 0.25);
  RgbImage pred = gt;
  pred.data[3 * 37 + 1] += 0.5;
  Mask mask(10, 10);
  for (int i = 0; i < 4; ++i) mask.data[i] = 1.0;
  EXPECT_EQ(fg_mse(pred, gt, mask), 0.0025);
}

TEST(FgMse, HalvingResidualsQuartersLoss) {
  const RgbImage gt = testing::random_image(32, 32, 4);
  const RgbImage pred = testing::random_image(32, 32, 5);
  RgbImage half = gt;
  for (std::size_t i = 0; i < half.data.size(); ++i) half.data[i] = gt.data[i] + 0.5 * (pred.data[i] - gt.data[i]);
  const Mask mask = testing::ellipse_mask(32, 32);
  EXPECT_NEAR(fg_mse(half, gt, mask), 0.25 * fg_mse(pred, gt, mask), 1e-15);
}

TEST(FgMse, RejectsMismatch) {
  EXPECT_THROW(fg_mse(RgbImage(3, 3), RgbImage(3, 3), Mask(3, 2)), DimensionError);
  EXPECT_THROW(fg_mse(RgbImage(3, 3), RgbImage(2, 3), Mask(3, 3)), DimensionError);
}

TEST(AuxLosses, ZeroOnEqualImages) {
  const RgbImage img = testing::random_image(24, 24, 6);
  const Mask mask = testing::ellipse_mask(24, 24);
  for (LossMode m : {LossMode::kStandard, LossMode::kSmooth}) {
    const AuxLosses a = aux_hsv_losses(img, img, mask, m);
    EXPECT_EQ(a.value, 0.0);
    EXPECT_EQ(a.saturation, 0.0);
    EXPECT_EQ(a.hue, 0.0);
  }
}

TEST(AuxLosses, OppositeHueGivesTwo) {
  RgbImage a(12, 12), b(12, 12);
  for (std::size_t i = 0; i < a.pixels(); ++i) {
    const double h = kTwoPi * (i % 7) / 14.0;
    a.set_pixel(i, hsv_to_rgb_px(Vec3{h, 0.8, 0.7}));
    b.set_pixel(i, hsv_to_rgb_px(Vec3{h + kPi, 0.8, 0.7}));
  }
  const AuxLosses l = aux_hsv_losses(a, b, testing::full_mask(12, 12), LossMode::kStandard);
  EXPECT_NEAR(l.hue, 2.0, 1e-12);
  EXPECT_NEAR(l.value, 0.0, 1e-24);
  EXPECT_NEAR(l.saturation, 0.0, 1e-24);
}

TEST(AuxLosses, NonNegative) {
  const Mask mask = testing::ellipse_mask(24, 24);
  for (int seed = 0; seed < 5; ++seed) {
    const RgbImage a = testing::random_image(24, 24, 10 + seed);
    const RgbImage b = testing::random_image(24, 24, 20 + seed);
    for (LossMode m : {LossMode::kStandard, LossMode::kSmooth}) {
      const AuxLosses l = aux_hsv_losses(a, b, mask, m);
      EXPECT_GT(l.value, 0.0);
      EXPECT_GT(l.saturation, 0.0);
      EXPECT_GT(l.hue, 0.0);
    }
  }
}

TEST(TvReg, Examples) {
  EXPECT_EQ(tv_reg(identity_saturation_map(6, 6)), 0.0);
  EXPECT_EQ(tv_reg(identity_stack(5, 5)), 0.0);
  EXPECT_EQ(tv_reg(testing::random_stack(1, 1, 1, 0.5)), 0.0);
  ParamGrid g(2, 1, 1);
  g.data = {0.0, 1.0};
  EXPECT_EQ(tv_reg(g), 0.5);
}

TEST(TvReg, GradientMatchesDifferences) {
  ParamGrid g(4, 3, 2);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : g.data) v = u(rng);
  ParamGrid grad(4, 3, 2);
  tv_reg_gradient(g, 2.0, grad);
  const double h = 1e-7;
  for (std::size_t i = 0; i < g.data.size(); ++i) {
    ParamGrid p = g, m = g;
    p.data[i] += h;
    m.data[i] -= h;
    EXPECT_NEAR(grad.data[i], 2.0 * (tv_reg(p) - tv_reg(m)) / (2.0 * h), 1e-6);
  }
}

struct Fixture {
  RgbImage comp = testing::photo_like(32, 32, 30);
  RgbImage gt = testing::photo_like(32, 32, 31);
  Mask mask = testing::ellipse_mask(32, 32);
};

TEST(TotalLoss, IdentityOnEqualPairIsZero) {
  Fixture f;
  const FilterStack s = identity_stack(4, 4);
  const PipelineTrace t = run_pipeline(f.gt, s);
  const LossInputs in{t, t, f.gt, f.gt, f.mask, f.mask};
  for (LossMode m : {LossMode::kRgbOnly, LossMode::kStandard, LossMode::kSmooth})
    EXPECT_LT(total_loss(in, s, LossWeights{}, m).total, 1e-12);
}

TEST(TotalLoss, ZeroWeightsGiveZero) {
  Fixture f;
  const FilterStack s = testing::random_stack(4, 4, 2, 0.3);
  const PipelineTrace t = run_pipeline(f.comp, s);
  const LossInputs in{t, t, f.gt, f.gt, f.mask, f.mask};
  const LossWeights zero{0, 0, 0, 0, 0, 0};
  for (LossMode m : {LossMode::kRgbOnly, LossMode::kStandard, LossMode::kSmooth})
    EXPECT_EQ(total_loss(in, s, zero, m).total, 0.0);
}

TEST(TotalLoss, WeightedSumOfTerms) {
  Fixture f;
  const FilterStack s = testing::random_stack(4, 4, 3, 0.3);
  const PipelineTrace t = run_pipeline(f.comp, s);
  const LossInputs in{t, t, f.gt, f.gt, f.mask, f.mask};
  const LossWeights w{1.0, 0.5, 0.2, 0.3, 0.4, 0.01};
  const LossTerms l = total_loss(in, s, w, LossMode::kSmooth);
  const AuxLosses a = aux_hsv_losses(t.i1, t.i2, t.i3, AuxTargets::from(f.gt), f.mask, LossMode::kSmooth);
  const double rgb = fg_mse(t.i3, f.gt, f.mask) + fg_mse(t.i4, f.gt, f.mask);
  EXPECT_DOUBLE_EQ(l.rgb_low, rgb);
  EXPECT_DOUBLE_EQ(l.value, a.value);
  EXPECT_DOUBLE_EQ(l.hue, a.hue);
  EXPECT_DOUBLE_EQ(l.tv, tv_reg(s));
  EXPECT_NEAR(l.total, 1.5 * rgb + 0.2 * a.value + 0.3 * a.saturation + 0.4 * a.hue + 0.01 * tv_reg(s), 1e-14);
  EXPECT_EQ(total_loss(in, s, w, LossMode::kRgbOnly).value, 0.0);
}

TEST(TotalLoss, RejectsNegativeWeight) {
  Fixture f;
  const FilterStack s = identity_stack(2, 2);
  const PipelineTrace t = run_pipeline(f.comp, s);
  const LossInputs in{t, t, f.gt, f.gt, f.mask, f.mask};
  EXPECT_THROW(total_loss(in, s, LossWeights{1, 1, -0.1, 0, 0, 0}, LossMode::kSmooth), std::invalid_argument);
}

TEST(LossMode, Names) {
  for (LossMode m : {LossMode::kRgbOnly, LossMode::kStandard, LossMode::kSmooth})
    EXPECT_EQ(parse_loss_mode(to_string(m)), m);
  EXPECT_THROW(parse_loss_mode("fancy"), std::invalid_argument);
}

}  // namespace
}  // namespace dccf
