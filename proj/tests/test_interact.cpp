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
#include "dccf/interact.hpp"
#include "support/synthetic.hpp"

namespace dccf {
namespace {

TEST(BlendHue, Endpoints) {
  const HueFilterMap f = testing::random_stack(4, 4, 1, 0.3).hue;
  EXPECT_EQ(blend_hue(f, 77.0, 0.0), f);
  const HueFilterMap full = blend_hue(f, 90.0, 1.0);
  const Mat3 r = hue_rotation_matrix(kPi / 2.0);
  for (std::size_t cell = 0; cell < 16; ++cell) {
    const auto p = detail::cell_params(full.params, cell);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) EXPECT_NEAR(p[4 * i + j], r[i][j], 1e-15);
      EXPECT_EQ(p[4 * i + 3], detail::cell_params(f.params, cell)[4 * i + 3]);
    }
  }
}

TEST(BlendHue, IdentityHalfway) {
  const HueFilterMap f = affine_hue_map(3, 3, identity_affine());
  const HueFilterMap out = blend_hue(f, 0.0, 0.5);
  for (std::size_t i = 0; i < out.params.data.size(); ++i) EXPECT_NEAR(out.params.data[i], f.params.data[i], 1e-15);
}

TEST(BlendHue, RangeChecks) {
  const HueFilterMap f = affine_hue_map(2, 2, identity_affine());
  EXPECT_THROW(blend_hue(f, 10.0, 1.5), std::invalid_argument);
  EXPECT_THROW(blend_hue(f, 10.0, -0.1), std::invalid_argument);
  EXPECT_THROW(blend_hue(f, 361.0, 0.5), std::invalid_argument);
}

TEST(BlendValue, Examples) {
  const ValueFilterMap f = testing::random_stack(3, 3, 2, 0.2).val;
  UserCurve user = UserCurve::identity();
  user.v_min = 0.1;
  user.phis[1] = 0.4;
  EXPECT_EQ(blend_value(f, user, 0.0), f);
  const ValueFilterMap full = blend_value(f, user, 1.0);
  for (std::size_t cell = 0; cell < 9; ++cell) {
    const auto p = detail::cell_params(full.params, cell);
    EXPECT_EQ(p[0], 0.1);
    for (int k = 0; k < 8; ++k) EXPECT_EQ(p[k + 1], user.phis[k]);
  }
  const ValueFilterMap id = identity_value_map(3, 3);
  EXPECT_EQ(blend_value(id, UserCurve::identity(), 0.37), id);
  EXPECT_THROW(blend_value(f, UserCurve::identity(4), 0.5), std::invalid_argument);
}

TEST(BlendSaturation, Examples) {
  SaturationFilterMap f = identity_saturation_map(2, 2);
  f.params.fill_channel(0, 0.4);
  EXPECT_EQ(blend_saturation(f, -0.2, 0.0), f);
  for (double v : blend_saturation(f, 0.0, 1.0).params.data) EXPECT_EQ(v, 0.0);
  for (double v : blend_saturation(f, -0.2, 0.5).params.data) EXPECT_NEAR(v, 0.1, 1e-15);
  EXPECT_THROW(blend_saturation(f, 1.5, 0.5), std::invalid_argument);
}

TEST(Blend, Convex) {
  const FilterStack s = testing::random_stack(4, 4, 3, 0.5);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> a(0.0, 1.0), sg(-1.0, 1.0), th(0.0, 360.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double alpha = a(rng), sigma = sg(rng), theta = th(rng);
    const SaturationFilterMap bs = blend_saturation(s.sat, sigma, alpha);
    for (std::size_t i = 0; i < bs.params.data.size(); ++i) {
      const double lo = std::min(sigma, s.sat.params.data[i]), hi = std::max(sigma, s.sat.params.data[i]);
      EXPECT_GE(bs.params.data[i], lo - 1e-15);
      EXPECT_LE(bs.params.data[i], hi + 1e-15);
    }
    const Mat3 r = hue_rotation_matrix(theta * kPi / 180.0);
    const HueFilterMap bh = blend_hue(s.hue, theta, alpha);
    for (std::size_t cell = 0; cell < 16; ++cell) {
      const auto before = detail::cell_params(s.hue.params, cell);
      const auto after = detail::cell_params(bh.params, cell);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          const double x = before[4 * i + j], y = r[i][j];
          EXPECT_GE(after[4 * i + j], std::min(x, y) - 1e-15);
          EXPECT_LE(after[4 * i + j], std::max(x, y) + 1e-15);
        }
      }
    }
  }
}

TEST(Adjustment, HueBlendChangesOnlyHuePlane) {
  const RgbImage img = testing::saturated_image(32, 32, 5);
  const FilterStack s = testing::random_stack(4, 4, 6, 0.2);
  Adjustment adj;
  adj.hue = Adjustment::Hue{45.0, 0.7};
  const PipelineTrace a = run_pipeline(img, s);
  const PipelineTrace b = run_pipeline(img, apply_adjustment(s, adj));
  const testing::PlaneDiff d = testing::plane_diff(a.i3, b.i3);
  EXPECT_LE(d.v, 1e-6);
  EXPECT_LE(d.s, 1e-6);
  EXPECT_GT(d.h, 0.1);
}

TEST(Adjustment, EmptyIsIdentity) {
  const FilterStack s = testing::random_stack(3, 3, 7, 0.2);
  EXPECT_EQ(apply_adjustment(s, Adjustment{}), s);
  Adjustment zero;
  zero.hue = Adjustment::Hue{120.0, 0.0};
  zero.sat = Adjustment::Sat{0.5, 0.0};
  zero.val = Adjustment::Val{UserCurve::identity(), 0.0};
  EXPECT_EQ(apply_adjustment(s, zero), s);
}

}  // namespace
}  // namespace dccf
