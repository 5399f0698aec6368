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

#include <algorithm>
#include <limits>

#include "dccf/optimizer.hpp"
#include "support/synthetic.hpp"

namespace dccf {
namespace {

FitConfig small_config(int iters) {
  FitConfig cfg;
  cfg.grid_w = cfg.grid_h = 8;
  cfg.max_iters = iters;
  return cfg;
}

TEST(Fit, IdentityIsStationaryOnEqualPair) {
  const RgbImage img = testing::photo_like(32, 32, 1);
  const FitResult r = fit(img, img, testing::ellipse_mask(32, 32), small_config(10));
  ASSERT_FALSE(r.report.loss_history.empty());
  EXPECT_LT(r.report.loss_history.front(), 1e-12);
  EXPECT_LE(r.report.best_loss, r.report.loss_history.front());
  EXPECT_LT(r.report.final_mse, 1e-12);
}

TEST(Fit, SingleIteration) {
  const RgbImage gt = testing::photo_like(32, 32, 2);
  const Mask mask = testing::ellipse_mask(32, 32);
  const RgbImage comp = synth_perturb(gt, mask, {0.3, 0.2, 1.2});
  const FitResult r = fit(comp, gt, mask, small_config(1));
  EXPECT_EQ(r.report.loss_history.size(), 1u);
  EXPECT_EQ(r.report.iterations_run, 1);
  EXPECT_TRUE(std::isfinite(r.report.final_psnr));
}

TEST(Fit, ImprovesAndKeepsBestMonotone) {
  const RgbImage gt = testing::photo_like(48, 48, 3);
  const Mask mask = testing::ellipse_mask(48, 48);
  const RgbImage comp = synth_perturb(gt, mask, {0.4, 0.3, 1.3});
  const FitResult r = fit(comp, gt, mask, small_config(60));
  const auto& h = r.report.loss_history;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> running;
  for (double l : h) running.push_back(best = std::min(best, l));
  EXPECT_TRUE(std::is_sorted(running.rbegin(), running.rend()));
  EXPECT_EQ(r.report.best_loss, best);
  EXPECT_LT(best, 0.2 * h.front());
  EXPECT_GT(r.report.final_psnr, psnr(comp, gt) + 6.0);
}

TEST(Fit, DeterministicForSeed) {
  const RgbImage gt = testing::photo_like(32, 32, 4);
  const Mask mask = testing::ellipse_mask(32, 32);
  const RgbImage comp = synth_perturb(gt, mask, {0.2, -0.2, 0.9});
  FitConfig cfg = small_config(15);
  cfg.init_noise = 0.01;
  cfg.seed = 42;
  const FitResult a = fit(comp, gt, mask, cfg);
  const FitResult b = fit(comp, gt, mask, cfg);
  EXPECT_EQ(a.report.loss_history, b.report.loss_history);
  EXPECT_EQ(a.stack, b.stack);
  cfg.seed = 43;
  EXPECT_NE(fit(comp, gt, mask, cfg).report.loss_history, a.report.loss_history);
}

TEST(Fit, ResultIsFloatRepresentable) {
  const RgbImage gt = testing::photo_like(32, 32, 5);
  const Mask mask = testing::ellipse_mask(32, 32);
  const FitResult r = fit(synth_perturb(gt, mask, {0.3, 0.0, 1.0}), gt, mask, small_config(5));
  for_each_grid(r.stack, [](const char*, const ParamGrid& g) {
    for (double v : g.data) EXPECT_EQ(static_cast<double>(static_cast<float>(v)), v);
  });
}

TEST(Fit, NonFiniteInputRaises) {
  RgbImage comp = testing::photo_like(16, 16, 6);
  const RgbImage gt = comp;
  comp.data[3 * 120] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(fit(comp, gt, testing::full_mask(16, 16), small_config(3)), NumericalError);
}

TEST(Fit, ConfigValidation) {
  const RgbImage img(8, 8, 0.5);
  const Mask mask = testing::full_mask(8, 8);
  auto expect_bad = [&](auto mutate) {
    FitConfig cfg = small_config(1);
    mutate(cfg);
    EXPECT_THROW(fit(img, img, mask, cfg), std::invalid_argument);
  };
  expect_bad([](FitConfig& c) { c.grid_w = 0; });
  expect_bad([](FitConfig& c) { c.step = 0.0; });
  expect_bad([](FitConfig& c) { c.max_iters = 0; });
  expect_bad([](FitConfig& c) { c.momentum = 1.0; });
  expect_bad([](FitConfig& c) { c.knots = 0; });
  expect_bad([](FitConfig& c) { c.weights.tv = -1.0; });
  EXPECT_THROW(fit(img, img, Mask(8, 7), small_config(1)), DimensionError);
}

TEST(SynthPerturb, NeutralSpecIsIdentity) {
  const RgbImage gt = testing::random_image(16, 16, 7);
  EXPECT_LE(max_abs_diff(synth_perturb(gt, testing::full_mask(16, 16), {0.0, 0.0, 1.0}), gt), 1e-12);
}

TEST(SynthPerturb, RedBecomesGreen) {
  const RgbImage gt = filled(8, 8, {1, 0, 0});
  const Mask mask = testing::ellipse_mask(8, 8);
  const RgbImage out = synth_perturb(gt, mask, {2.0 * kPi / 3.0, 0.0, 1.0});
  for (std::size_t i = 0; i < out.pixels(); ++i) {
    const Vec3 expect = mask.data[i] > 0.5 ? Vec3{0, 1, 0} : Vec3{1, 0, 0};
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(out.pixel(i)[c], expect[c], 1e-12);
  }
}

TEST(SynthPerturb, HueOnlyKeepsValueAndSaturation) {
  const RgbImage gt = testing::random_image(32, 32, 8);
  const RgbImage out = synth_perturb(gt, testing::full_mask(32, 32), {1.1, 0.0, 1.0});
  const HsvImage a = rgb_to_hsv(out), b = rgb_to_hsv(gt);
  EXPECT_LE(max_abs_diff(a.v, b.v), 1e-6);
  EXPECT_LE(max_abs_diff(a.s, b.s), 1e-6);
}

TEST(SynthPerturb, BackgroundUntouchedAndErrors) {
  const RgbImage gt = testing::random_image(16, 16, 9);
  const Mask mask = testing::ellipse_mask(16, 16);
  const RgbImage out = synth_perturb(gt, mask, {0.5, 0.5, 1.5});
  for (std::size_t i = 0; i < gt.pixels(); ++i) {
    if (mask.data[i] == 0.0) {
      EXPECT_EQ(out.pixel(i), gt.pixel(i));
    }
  }
  EXPECT_THROW(synth_perturb(gt, mask, {0.0, 0.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(synth_perturb(gt, Mask(4, 4), {0.0, 0.0, 1.0}), DimensionError);
}

}  // namespace
}  // namespace dccf
