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

#pragma once

#include <array>
#include <span>
#include <vector>

#include "dccf/colorspace.hpp"
#include "dccf/filters.hpp"
#include "dccf/upsample.hpp"

namespace dccf {

/// Intermediate results of one pipeline run at full resolution.
///
/// I1..I3 are the outputs of the first, second and third chromatic stage in
/// execution order (so I3 always carries all three adjustments) and I4 is the
/// attentive result. V1, S2 and H3 are the planes extracted by the value,
/// saturation and hue stage respectively, wherever they ran in the order.
struct PipelineTrace {
  RgbImage i1, i2, i3, i4;
  PlaneImage v1, s2, h3;
  StageOrder order = kDefaultOrder;

  const RgbImage& stage_output(int k) const { return k == 0 ? i1 : (k == 1 ? i2 : i3); }

  /// Output image of the stage that handled `c`.
  const RgbImage& output_of(Channel c) const {
    for (int k = 0; k < 3; ++k)
      if (order[k] == c) return stage_output(k);
    return i3;
  }
};

/// Keeps the `channel` plane of `filtered` and the other two HSV planes of `prev`.
inline Vec3 assemble_px(const Vec3& prev, const Vec3& filtered, Channel channel) {
  Vec3 hsv = rgb_to_hsv_px(prev);
  const Vec3 f = rgb_to_hsv_px(filtered);
  const int k = channel == Channel::kHue ? 0 : (channel == Channel::kSaturation ? 1 : 2);
  hsv[k] = f[k];
  return hsv_to_rgb_px(hsv);
}

inline RgbImage assemble_stage(const RgbImage& prev, const RgbImage& filtered, Channel channel) {
  require_same_size(prev, filtered, "assemble_stage");
  RgbImage out(prev.width, prev.height);
  for (std::size_t i = 0; i < prev.pixels(); ++i) out.set_pixel(i, assemble_px(prev.pixel(i), filtered.pixel(i), channel));
  return out;
}

/// One chromatic stage on one pixel. `plane` receives the channel value the stage produced.
inline Vec3 stage_px(Channel channel, const Vec3& x, std::span<const double> p, const ParamLayout& L, double& plane) {
  Vec3 hsv = rgb_to_hsv_px(x);
  switch (channel) {
    case Channel::kValue: {
      // The value curve is defined on V, so it runs on the V plane directly.
      hsv[2] = value_curve(hsv[2], p[L.val], p.subspan(L.val + 1, L.knots));
      plane = hsv[2];
      break;
    }
    case Channel::kSaturation: {
      hsv[1] = rgb_to_hsv_px(saturation_px(x, p[L.sat]))[1];
      plane = hsv[1];
      break;
    }
    case Channel::kHue: {
      hsv[0] = rgb_to_hsv_px(hue_affine_px(x, p.subspan(L.hue, 12)))[0];
      plane = hsv[0];
      break;
    }
  }
  return hsv_to_rgb_px(hsv);
}

/// Full forward pass of one pixel.
struct PixelForward {
  std::array<Vec3, 3> stage_out{};
  Vec3 out{};
  std::array<double, 3> planes{};  // indexed by Channel
};

inline PixelForward forward_px(const Vec3& in, std::span<const double> p, const ParamLayout& L,
                               const StageOrder& order) {
  PixelForward r;
  Vec3 x = in;
  for (int k = 0; k < 3; ++k) {
    x = stage_px(order[k], x, p, L, r.planes[static_cast<int>(order[k])]);
    r.stage_out[k] = x;
  }
  r.out = attentive_px(in, x, p[L.attn], p.subspan(L.attn + 1, 12));
  return r;
}

/// Upsamples the stack to the image's resolution on the fly and runs the
/// three chromatic stages in stack.order followed by the attentive stage.
inline PipelineTrace run_pipeline(const RgbImage& img, const FilterStack& stack) {
  validate_stack(stack);
  const int w = img.width;
  const int h = img.height;
  PipelineTrace t{RgbImage(w, h), RgbImage(w, h), RgbImage(w, h), RgbImage(w, h),
                  PlaneImage(w, h), PlaneImage(w, h), PlaneImage(w, h), stack.order};
  if (w == 0 || h == 0) return t;
  StackSampler sampler(stack, w, h);
  const ParamLayout& L = sampler.layout();
  std::vector<double> row(static_cast<std::size_t>(w) * L.total);
  for (int y = 0; y < h; ++y) {
    sampler.sample_row(y, row);
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const auto p = std::span<const double>(row).subspan(static_cast<std::size_t>(x) * L.total, L.total);
      const PixelForward f = forward_px(img.pixel(i), p, L, stack.order);
      t.i1.set_pixel(i, f.stage_out[0]);
      t.i2.set_pixel(i, f.stage_out[1]);
      t.i3.set_pixel(i, f.stage_out[2]);
      t.i4.set_pixel(i, f.out);
      t.v1.data[i] = f.planes[0];
      t.s2.data[i] = f.planes[1];
      t.h3.data[i] = f.planes[2];
    }
  }
  return t;
}

/// Output image of one stage: 1..3 chromatic stages, 4 attentive.
inline const RgbImage& trace_stage(const PipelineTrace& t, int stage) {
  switch (stage) {
    case 1: return t.i1;
    case 2: return t.i2;
    case 3: return t.i3;
    case 4: return t.i4;
    default: throw std::invalid_argument("stage must be in 1..4");
  }
}

}  // namespace dccf
