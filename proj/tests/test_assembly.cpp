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
#include "dccf/upsample.hpp"
#include "support/synthetic.hpp"

namespace dccf {
namespace {

using testing::plane_diff;

TEST(Upsample, TwoCellRamp) {
  ParamGrid g(2, 1, 1);
  g.data = {0.0, 1.0};
  const ParamGrid up = upsample_grid(g, 4, 1);
  ASSERT_EQ(up.data.size(), 4u);
  EXPECT_DOUBLE_EQ(up.data[0], 0.0);
  EXPECT_DOUBLE_EQ(up.data[1], 0.25);
  EXPECT_DOUBLE_EQ(up.data[2], 0.75);
  EXPECT_DOUBLE_EQ(up.data[3], 1.0);
}

TEST(Upsample, ConstantMapIsBitExact) {
  ParamGrid g(5, 3, 2);
  g.fill_channel(0, 0.1234567890123);
  g.fill_channel(1, -7.77);
  for (auto [w, h] : {std::pair{5, 3}, {17, 9}, {256, 111}, {2, 1}}) {
    const ParamGrid up = upsample_grid(g, w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        EXPECT_EQ(up.at(0, x, y), 0.1234567890123);
        EXPECT_EQ(up.at(1, x, y), -7.77);
      }
    }
  }
}

TEST(Upsample, SingleCellBroadcasts) {
  const FilterStack s = testing::random_stack(1, 1, 3, 0.3);
  const FilterStack up = upsample_stack(s, 7, 5);
  for_each_grid(up, [&](const char*, const ParamGrid& g) {
    EXPECT_EQ(g.width, 7);
    EXPECT_EQ(g.height, 5);
  });
  for (int c = 0; c < up.attn.params.channels; ++c)
    for (int i = 0; i < 35; ++i) EXPECT_EQ(up.attn.params.data[c * 35 + i], s.attn.params.data[c]);
}

TEST(Upsample, RejectsEmptyTarget) {
  EXPECT_THROW(upsample_grid(ParamGrid(2, 2, 1), 0, 4), std::invalid_argument);
}

TEST(Upsample, MonotoneRampKeepsTv) {
  ParamGrid g(4, 1, 1);
  g.data = {0.0, 0.2, 0.3, 0.9};
  const ParamGrid up = upsample_grid(g, 16, 1);
  double variation = 0.0;
  for (int x = 0; x + 1 < 16; ++x) variation += std::abs(up.data[x + 1] - up.data[x]);
  EXPECT_LE(variation, 0.9 + 1e-9);
}

TEST(AssembleStage, SameImageIsIdentity) {
  const RgbImage img = testing::random_image(16, 16, 11);
  for (Channel c : {Channel::kValue, Channel::kSaturation, Channel::kHue})
    EXPECT_LE(max_abs_diff(assemble_stage(img, img, c), img), 1e-6);
}

TEST(AssembleStage, GrayStaysGrayUnderHue) {
  const RgbImage gray = filled(4, 4, {0.4, 0.4, 0.4});
  const RgbImage colored = filled(4, 4, {0.9, 0.1, 0.3});
  EXPECT_LE(max_abs_diff(assemble_stage(gray, colored, Channel::kHue), gray), 1e-12);
}

TEST(AssembleStage, HueTakesOnlyHue) {
  const RgbImage img = testing::saturated_image(16, 16, 12);
  const RgbImage rotated =
      apply_hue_affine(img, affine_hue_map(16, 16, make_affine(hue_rotation_matrix(2.0 * kPi / 3.0))));
  const RgbImage out = assemble_stage(img, rotated, Channel::kHue);
  const HsvImage a = rgb_to_hsv(out), p = rgb_to_hsv(img), f = rgb_to_hsv(rotated);
  EXPECT_LE(max_abs_diff(a.v, p.v), 1e-6);
  EXPECT_LE(max_abs_diff(a.s, p.s), 1e-6);
  for (std::size_t i = 0; i < a.h.size(); ++i) EXPECT_LE(testing::hue_distance(a.h.data[i], f.h.data[i]), 1e-6);
}

TEST(AssembleStage, RejectsMismatch) {
  EXPECT_THROW(assemble_stage(RgbImage(3, 3), RgbImage(3, 4), Channel::kValue), DimensionError);
}

TEST(Pipeline, IdentityStack) {
  const RgbImage img = testing::random_image(32, 24, 13);
  const PipelineTrace t = run_pipeline(img, identity_stack(8, 6));
  for (int k = 1; k <= 4; ++k) EXPECT_LE(max_abs_diff(trace_stage(t, k), img), 1e-6) << "stage " << k;
  EXPECT_THROW(trace_stage(t, 0), std::invalid_argument);
  EXPECT_THROW(trace_stage(t, 5), std::invalid_argument);
}

TEST(Pipeline, HueRotationOnly) {
  const RgbImage img = testing::saturated_image(24, 24, 14);
  FilterStack s = identity_stack(4, 4);
  s.hue = affine_hue_map(4, 4, make_affine(hue_rotation_matrix(2.0 * kPi / 3.0)));
  const PipelineTrace t = run_pipeline(img, s);
  const testing::PlaneDiff d = plane_diff(t.i3, img);
  EXPECT_LE(d.v, 1e-6);
  EXPECT_LE(d.s, 1e-6);
  const HsvImage a = rgb_to_hsv(t.i3), b = rgb_to_hsv(img);
  for (std::size_t i = 0; i < a.h.size(); ++i)
    EXPECT_NEAR(testing::hue_distance(a.h.data[i], b.h.data[i]), 2.0 * kPi / 3.0, 1e-6);
}

TEST(Pipeline, Disentanglement) {
  for (int trial = 0; trial < 5; ++trial) {
    const RgbImage img = testing::saturated_image(32, 32, 100 + trial);
    const FilterStack s = testing::random_stack(6, 6, 200 + trial, 0.3);
    const PipelineTrace t = run_pipeline(img, s);
    const testing::PlaneDiff dv = plane_diff(t.i1, img);
    const testing::PlaneDiff ds = plane_diff(t.i2, t.i1);
    const testing::PlaneDiff dh = plane_diff(t.i3, t.i2);
    EXPECT_LE(dv.s, 1e-6);
    EXPECT_LE(dv.h, 1e-6);
    EXPECT_LE(ds.v, 1e-6);
    EXPECT_LE(ds.h, 1e-6);
    EXPECT_LE(dh.v, 1e-6);
    EXPECT_LE(dh.s, 1e-6);
  }
}

TEST(Pipeline, TracePlanesMatchStageOutputs) {
  const RgbImage img = testing::saturated_image(16, 16, 15);
  const PipelineTrace t = run_pipeline(img, testing::random_stack(4, 4, 16, 0.2));
  const HsvImage a = rgb_to_hsv(t.i1), b = rgb_to_hsv(t.i2), c = rgb_to_hsv(t.i3);
  EXPECT_LE(max_abs_diff(a.v, t.v1), 1e-9);
  EXPECT_LE(max_abs_diff(b.s, t.s2), 1e-9);
  for (std::size_t i = 0; i < c.h.size(); ++i) {
    if (c.s.data[i] > 1e-3 && c.v.data[i] > 1e-3) {
      EXPECT_LE(testing::hue_distance(c.h.data[i], t.h3.data[i]), 1e-9);
    }
    EXPECT_GE(t.h3.data[i], 0.0);
    EXPECT_LT(t.h3.data[i], kTwoPi);
  }
}

TEST(Pipeline, PermutedOrder) {
  const RgbImage img = testing::saturated_image(16, 16, 17);
  FilterStack s = testing::random_stack(4, 4, 18, 0.2);
  s.order = parse_order("HVS");
  const PipelineTrace t = run_pipeline(img, s);
  EXPECT_EQ(t.order, s.order);
  EXPECT_TRUE(is_valid(t.i4));
  // The hue stage ran first, so V and S of its output are the input's.
  const testing::PlaneDiff d = plane_diff(t.i1, img);
  EXPECT_LE(d.v, 1e-6);
  EXPECT_LE(d.s, 1e-6);
  EXPECT_EQ(&t.output_of(Channel::kHue), &t.i1);
  EXPECT_EQ(&t.output_of(Channel::kSaturation), &t.i3);
}

TEST(Pipeline, Deterministic) {
  const RgbImage img = testing::random_image(20, 20, 19);
  const FilterStack s = testing::random_stack(5, 5, 20, 0.3);
  const PipelineTrace a = run_pipeline(img, s);
  const PipelineTrace b = run_pipeline(img, s);
  EXPECT_EQ(a.i1, b.i1);
  EXPECT_EQ(a.i4, b.i4);
  EXPECT_EQ(a.h3, b.h3);
}

TEST(Pipeline, ConstantMapsCommuteWithUpsampling) {
  const RgbImage low = testing::photo_like(64, 64, 21);
  const RgbImage high = resize_bilinear(low, 256, 256);
  FilterStack s = identity_stack(3, 3);
  s.sat.params.fill_channel(0, 0.3);
  s.val.params.fill_channel(0, 0.05);
  s.val.params.fill_channel(1, 0.8);
  s.hue = affine_hue_map(3, 3, make_affine(hue_rotation_matrix(0.4)));
  s.attn.params.fill_channel(0, 0.0);
  const RgbImage a = resize_bilinear(run_pipeline(low, s).i4, 256, 256);
  const RgbImage b = run_pipeline(high, s).i4;
  // Filtering is nonlinear, so resizing the low-res output differs from filtering at full res.
  const RgbImage c = run_pipeline(high, upsample_stack(s, 256, 256)).i4;
  EXPECT_LE(max_abs_diff(b, c), 1e-6);
  EXPECT_GT(max_abs_diff(a, b), 0.0);
}

TEST(Pipeline, ValidatesStack) {
  FilterStack s = identity_stack(4, 4);
  s.sat = identity_saturation_map(3, 4);
  EXPECT_ANY_THROW(run_pipeline(RgbImage(8, 8), s));
}

}  // namespace
}  // namespace dccf
