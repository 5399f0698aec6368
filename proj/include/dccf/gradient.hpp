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

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "dccf/assembly.hpp"
#include "dccf/colorspace.hpp"
#include "dccf/filters.hpp"
#include "dccf/losses.hpp"
#include "dccf/upsample.hpp"

namespace dccf {

/// Longest side of the low-resolution stream that carries the auxiliary HSV losses.
inline constexpr int kLowStreamMaxSide = 256;

/// A (composite, ground truth, mask) triple prepared for fitting: the working
/// (high) stream and its area-averaged low stream, plus cached supervision maps.
struct FitProblem {
  RgbImage composite;
  RgbImage gt;
  Mask mask;
  RgbImage composite_low;
  RgbImage gt_low;
  Mask mask_low;
  bool shared = true;  // low stream is the working image itself
  AuxTargets targets;

  static FitProblem make(const RgbImage& composite, const RgbImage& gt, const Mask& mask,
                         int low_max_side = kLowStreamMaxSide) {
    require_same_size(composite, gt, "fit problem");
    require_same_size(composite, mask, "fit problem");
    if (composite.width < 1 || composite.height < 1) throw std::invalid_argument("fit problem: empty image");
    FitProblem p;
    p.composite = composite;
    p.gt = gt;
    p.mask = mask;
    const int f = downsample_factor(composite.width, composite.height, low_max_side);
    p.shared = f == 1;
    if (!p.shared) {
      p.composite_low = downsample_area(composite, f);
      p.gt_low = downsample_area(gt, f);
      p.mask_low = downsample_area(mask, f);
    }
    p.targets = AuxTargets::from(p.low_gt());
    return p;
  }

  const RgbImage& low_composite() const { return shared ? composite : composite_low; }
  const RgbImage& low_gt() const { return shared ? gt : gt_low; }
  const Mask& low_mask() const { return shared ? mask : mask_low; }
};

/// Forward traces of both streams plus the loss terms.
struct Evaluation {
  PipelineTrace low;
  PipelineTrace high;  // empty when the streams are shared
  LossTerms terms;
};

inline Evaluation evaluate(const FitProblem& p, const FilterStack& stack, const LossWeights& w, LossMode mode) {
  Evaluation e;
  e.low = run_pipeline(p.low_composite(), stack);
  if (!p.shared) e.high = run_pipeline(p.composite, stack);
  const PipelineTrace& high = p.shared ? e.low : e.high;
  e.terms = total_loss({e.low, high, p.low_gt(), p.gt, p.low_mask(), p.mask}, stack, w, mode, &p.targets);
  return e;
}

inline double evaluate_loss(const FitProblem& p, const FilterStack& stack, const LossWeights& w, LossMode mode) {
  return evaluate(p, stack, w, mode).terms.total;
}

/// A gradient has the shape of the stack it differentiates.
using StackGradient = FilterStack;

inline StackGradient zero_gradient(const FilterStack& s) {
  StackGradient g = s;
  for_each_grid(g, [](const char*, ParamGrid& grid) { std::ranges::fill(grid.data, 0.0); });
  return g;
}

// ---------------------------------------------------------------------------
// Per-pixel backward kernels. Each takes the stage input x, the pixel's
// parameters p and dL/d(output); it accumulates dL/dp into gp and returns dL/dx.
// Clamps and ReLUs contribute a zero subgradient at their kinks.
// ---------------------------------------------------------------------------

namespace detail {

inline bool interior(double u) { return u > 0.0 && u < 1.0; }

inline Vec3 value_stage_backward(const Vec3& x, std::span<const double> p, const ParamLayout& L, const Vec3& g_out,
                                 std::span<double> gp) {
  Vec3 hsv;
  const Mat3 j_in = rgb_to_hsv_jacobian(x, &hsv);
  const double v_min = p[L.val];
  const auto phi = p.subspan(L.val + 1, L.knots);
  const double u = value_curve_raw(hsv[2], v_min, phi);
  const double v1 = clamp01(u);
  const Mat3 j_out = hsv_to_rgb_jacobian({hsv[0], hsv[1], v1});
  const Vec3 g_hsv = mul_t(j_out, g_out);
  const double g_u = interior(u) ? g_hsv[2] : 0.0;
  double slope = 0.0;
  if (g_u != 0.0) {
    gp[L.val] += g_u;
    for (int i = 0; i < L.knots; ++i) {
      const double r = hsv[2] - knot(i, L.knots);
      if (r > 0.0) {
        gp[L.val + 1 + i] += g_u * r;
        slope += phi[i];
      }
    }
  }
  return mul_t(j_in, {g_hsv[0], g_hsv[1], g_u * slope});
}

inline Vec3 saturation_stage_backward(const Vec3& x, std::span<const double> p, const ParamLayout& L,
                                      const Vec3& g_out, std::span<double> gp) {
  Vec3 hsv;
  const Mat3 j_in = rgb_to_hsv_jacobian(x, &hsv);
  const double sigma = p[L.sat];
  const double s = std::clamp(sigma, -1.0, 1.0);
  const double cmed = mid_tone(x);
  Vec3 pre, y;
  for (int c = 0; c < 3; ++c) {
    pre[c] = x[c] + (x[c] - cmed) * s;
    y[c] = clamp01(pre[c]);
  }
  Vec3 hsv_y;
  const Mat3 j_y = rgb_to_hsv_jacobian(y, &hsv_y);
  const Mat3 j_out = hsv_to_rgb_jacobian({hsv[0], hsv_y[1], hsv[2]});
  const Vec3 g_hsv = mul_t(j_out, g_out);
  const Vec3 g_y = mul_t(j_y, {0.0, g_hsv[1], 0.0});

  Vec3 g_x = mul_t(j_in, {g_hsv[0], 0.0, g_hsv[2]});
  double g_s = 0.0;
  double g_sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double g_pre = interior(pre[c]) ? g_y[c] : 0.0;
    g_s += g_pre * (x[c] - cmed);
    g_sum += g_pre;
    g_x[c] += g_pre * (1.0 + s);
  }
  if (sigma > -1.0 && sigma < 1.0) gp[L.sat] += g_s;
  // C_med = (C_max + C_min) / 2, routed to the first max / min channel.
  const int imax = static_cast<int>(std::max_element(x.begin(), x.end()) - x.begin());
  const int imin = static_cast<int>(std::min_element(x.begin(), x.end()) - x.begin());
  const double g_cmed = -s * g_sum;
  g_x[imax] += 0.5 * g_cmed;
  g_x[imin] += 0.5 * g_cmed;
  return g_x;
}

inline Vec3 hue_stage_backward(const Vec3& x, std::span<const double> p, const ParamLayout& L, const Vec3& g_out,
                               std::span<double> gp) {
  Vec3 hsv;
  const Mat3 j_in = rgb_to_hsv_jacobian(x, &hsv);
  const auto a = p.subspan(L.hue, 12);
  const Vec3 pre = apply_affine(a, x);
  const Vec3 y = {clamp01(pre[0]), clamp01(pre[1]), clamp01(pre[2])};
  Vec3 hsv_y;
  const Mat3 j_y = rgb_to_hsv_jacobian(y, &hsv_y);
  const Mat3 j_out = hsv_to_rgb_jacobian({hsv_y[0], hsv[1], hsv[2]});
  const Vec3 g_hsv = mul_t(j_out, g_out);
  const Vec3 g_y = mul_t(j_y, {g_hsv[0], 0.0, 0.0});

  Vec3 g_x = mul_t(j_in, {0.0, g_hsv[1], g_hsv[2]});
  for (int i = 0; i < 3; ++i) {
    const double g_pre = interior(pre[i]) ? g_y[i] : 0.0;
    if (g_pre == 0.0) continue;
    for (int j = 0; j < 3; ++j) {
      gp[L.hue + 4 * i + j] += g_pre * x[j];
      g_x[j] += g_pre * a[4 * i + j];
    }
    gp[L.hue + 4 * i + 3] += g_pre;
  }
  return g_x;
}

/// Returns dL/dI3; the attentive stage does not propagate into the composite.
inline Vec3 attentive_backward(const Vec3& input, const Vec3& refined, std::span<const double> p,
                               const ParamLayout& L, const Vec3& g_out, std::span<double> gp) {
  const double alpha = logistic(p[L.attn]);
  const auto w = p.subspan(L.attn + 1, 12);
  const Vec3 z = apply_affine(w, refined);
  Vec3 g_refined{};
  double g_alpha = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double pre = input[i] * alpha + z[i] * (1.0 - alpha);
    if (!interior(pre)) continue;
    const double g = g_out[i];
    g_alpha += g * (input[i] - z[i]);
    const double gz = g * (1.0 - alpha);
    for (int j = 0; j < 3; ++j) {
      gp[L.attn + 1 + 4 * i + j] += gz * refined[j];
      g_refined[j] += gz * w[4 * i + j];
    }
    gp[L.attn + 1 + 4 * i + 3] += gz;
  }
  gp[L.attn] += g_alpha * alpha * (1.0 - alpha);
  return g_refined;
}

inline Vec3 stage_backward(Channel c, const Vec3& x, std::span<const double> p, const ParamLayout& L,
                           const Vec3& g_out, std::span<double> gp) {
  switch (c) {
    case Channel::kValue: return value_stage_backward(x, p, L, g_out, gp);
    case Channel::kSaturation: return saturation_stage_backward(x, p, L, g_out, gp);
    case Channel::kHue: return hue_stage_backward(x, p, L, g_out, gp);
  }
  return {};
}

inline void add_scaled_residual(RgbImage& g, const RgbImage& pred, const RgbImage& gt, double scale) {
  for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += scale * (pred.data[i] - gt.data[i]);
}

/// Image-space gradients of the auxiliary losses, added onto the stage outputs they supervise.
inline void aux_image_gradients(const PipelineTrace& tr, const AuxTargets& gt, const Mask& mask, const LossWeights& w,
                                LossMode mode, std::array<RgbImage, 3>& g_stage) {
  if (mode == LossMode::kRgbOnly) return;
  const double norm = foreground_norm(mask);
  auto slot = [&](Channel c) -> RgbImage& {
    for (int k = 0; k < 3; ++k)
      if (tr.order[k] == c) return g_stage[k];
    return g_stage[2];
  };
  const RgbImage& xv = tr.output_of(Channel::kValue);
  const RgbImage& xs = tr.output_of(Channel::kSaturation);
  const RgbImage& xh = tr.output_of(Channel::kHue);
  RgbImage& gv = slot(Channel::kValue);
  RgbImage& gs = slot(Channel::kSaturation);
  RgbImage& gh = slot(Channel::kHue);
  const std::size_t n = xv.pixels();

  if (mode == LossMode::kSmooth) {
    if (w.value != 0.0) {
      const PlaneImage smooth = smooth_value_map(xv);
      PlaneImage g_smooth(smooth.width, smooth.height);
      for (std::size_t i = 0; i < n; ++i) g_smooth.data[i] = w.value * 2.0 * (smooth.data[i] - gt.smooth_v.data[i]) / norm;
      const PlaneImage g_v = gaussian_blur_adjoint(g_smooth, kSmoothValueStd, kSmoothValueKernel);
      for (std::size_t i = 0; i < n; ++i) {
        const Mat3 j = rgb_to_hsv_jacobian(xv.pixel(i));
        for (int c = 0; c < 3; ++c) gv.data[3 * i + c] += j[2][c] * g_v.data[i];
      }
    }
    if (w.saturation != 0.0) {
      using J = Jet<3>;
      for (std::size_t i = 0; i < n; ++i) {
        const Vec3 x = xs.pixel(i);
        const J s = smooth_saturation_px(J(x[0], 0), J(x[1], 1), J(x[2], 2));
        const double g = w.saturation * 2.0 * (s.a - gt.smooth_s.data[i]) / norm;
        for (int c = 0; c < 3; ++c) gs.data[3 * i + c] += g * s.v[c];
      }
    }
    if (w.hue != 0.0) {
      using J = Jet<3>;
      for (std::size_t i = 0; i < n; ++i) {
        const Vec3 x = xh.pixel(i);
        const auto r = smooth_hue_px(J(x[0], 0), J(x[1], 1), J(x[2], 2));
        for (int k = 0; k < 3; ++k) {
          const double g = w.hue * 2.0 * (r[k].a - gt.smooth_h.data[3 * i + k]) / norm;
          for (int c = 0; c < 3; ++c) gh.data[3 * i + c] += g * r[k].v[c];
        }
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      if (w.value != 0.0) {
        Vec3 hsv;
        const Mat3 j = rgb_to_hsv_jacobian(xv.pixel(i), &hsv);
        const double g = w.value * 2.0 * (hsv[2] - gt.standard.v.data[i]) / norm;
        for (int c = 0; c < 3; ++c) gv.data[3 * i + c] += j[2][c] * g;
      }
      if (w.saturation != 0.0) {
        Vec3 hsv;
        const Mat3 j = rgb_to_hsv_jacobian(xs.pixel(i), &hsv);
        const double g = w.saturation * 2.0 * (hsv[1] - gt.standard.s.data[i]) / norm;
        for (int c = 0; c < 3; ++c) gs.data[3 * i + c] += j[1][c] * g;
      }
      if (w.hue != 0.0) {
        Vec3 hsv;
        const Mat3 j = rgb_to_hsv_jacobian(xh.pixel(i), &hsv);
        const double g = w.hue * std::sin(hsv[0] - gt.standard.h.data[i]) / norm;
        for (int c = 0; c < 3; ++c) gh.data[3 * i + c] += j[0][c] * g;
      }
    }
  }
}

/// Pulls image-space gradients on the stage outputs and I4 back onto the grid.
inline void backward_stream(const RgbImage& composite, const PipelineTrace& tr, const FilterStack& stack,
                            const std::array<RgbImage, 3>& g_stage, const RgbImage& g_i4, StackGradient& grad) {
  const int w = composite.width;
  const int h = composite.height;
  StackSampler sampler(stack, w, h);
  const ParamLayout& L = sampler.layout();
  std::vector<double> row(static_cast<std::size_t>(w) * L.total);
  std::vector<double> grow(row.size());
  for (int y = 0; y < h; ++y) {
    sampler.sample_row(y, row);
    std::ranges::fill(grow, 0.0);
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const auto p = std::span<const double>(row).subspan(static_cast<std::size_t>(x) * L.total, L.total);
      const auto gp = std::span<double>(grow).subspan(static_cast<std::size_t>(x) * L.total, L.total);
      const Vec3 in = composite.pixel(i);
      const std::array<Vec3, 3> out = {tr.i1.pixel(i), tr.i2.pixel(i), tr.i3.pixel(i)};
      Vec3 g = attentive_backward(in, out[2], p, L, g_i4.pixel(i), gp);
      for (int k = 2; k >= 0; --k) {
        const Vec3 extra = g_stage[k].pixel(i);
        for (int c = 0; c < 3; ++c) g[c] += extra[c];
        const Vec3& x_in = k == 0 ? in : out[k - 1];
        g = stage_backward(stack.order[k], x_in, p, L, g, gp);
      }
    }
    sampler.scatter_row(y, grow, grad);
  }
}

}  // namespace detail

/// Exact gradient of total_loss with respect to every grid parameter. Returns
/// the loss terms of the same evaluation.
inline LossTerms analytic_gradients(const FitProblem& prob, const FilterStack& stack, const LossWeights& w,
                                    LossMode mode, StackGradient& grad) {
  validate_stack(stack);
  const Evaluation e = evaluate(prob, stack, w, mode);
  grad = zero_gradient(stack);

  auto rgb_grads = [&](const PipelineTrace& tr, const RgbImage& gt, const Mask& mask, double weight,
                       std::array<RgbImage, 3>& g_stage, RgbImage& g_i4) {
    if (weight == 0.0) return;
    const double scale = 2.0 * weight / foreground_norm(mask);
    detail::add_scaled_residual(g_stage[2], tr.i3, gt, scale);
    detail::add_scaled_residual(g_i4, tr.i4, gt, scale);
  };

  const RgbImage& lc = prob.low_composite();
  std::array<RgbImage, 3> g_low = {RgbImage(lc.width, lc.height), RgbImage(lc.width, lc.height),
                                   RgbImage(lc.width, lc.height)};
  RgbImage g_low_i4(lc.width, lc.height);
  rgb_grads(e.low, prob.low_gt(), prob.low_mask(), w.rgb_low, g_low, g_low_i4);
  if (prob.shared) rgb_grads(e.low, prob.gt, prob.mask, w.rgb_high, g_low, g_low_i4);
  detail::aux_image_gradients(e.low, prob.targets, prob.low_mask(), w, mode, g_low);
  detail::backward_stream(lc, e.low, stack, g_low, g_low_i4, grad);

  if (!prob.shared && w.rgb_high != 0.0) {
    const RgbImage& c = prob.composite;
    std::array<RgbImage, 3> g_high = {RgbImage(c.width, c.height), RgbImage(c.width, c.height),
                                      RgbImage(c.width, c.height)};
    RgbImage g_high_i4(c.width, c.height);
    rgb_grads(e.high, prob.gt, prob.mask, w.rgb_high, g_high, g_high_i4);
    detail::backward_stream(c, e.high, stack, g_high, g_high_i4, grad);
  }

  if (w.tv != 0.0) {
    const FilterStack& s = stack;
    tv_reg_gradient(s.val.params, w.tv, grad.val.params);
    tv_reg_gradient(s.sat.params, w.tv, grad.sat.params);
    tv_reg_gradient(s.hue.params, w.tv, grad.hue.params);
    tv_reg_gradient(s.attn.params, w.tv, grad.attn.params);
  }
  return e.terms;
}

/// Central difference of the total loss for one grid parameter.
inline double finite_diff_probe(const FitProblem& prob, const FilterStack& stack, const LossWeights& w, LossMode mode,
                                int grid_index, int channel, int x, int y, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite difference step must be positive");
  FilterStack s = stack;
  ParamGrid* g = nullptr;
  int idx = 0;
  for_each_grid(s, [&](const char*, ParamGrid& grid) {
    if (idx++ == grid_index) g = &grid;
  });
  if (!g) throw std::invalid_argument("grid index out of range");
  const double p0 = g->at(channel, x, y);
  g->at(channel, x, y) = p0 + h;
  const double lp = evaluate_loss(prob, s, w, mode);
  g->at(channel, x, y) = p0 - h;
  const double lm = evaluate_loss(prob, s, w, mode);
  return (lp - lm) / (2.0 * h);
}

/// Central differences (L(p+h) − L(p−h)) / 2h for every parameter.
inline StackGradient finite_diff_oracle(const FitProblem& prob, const FilterStack& stack, const LossWeights& w,
                                        LossMode mode, double h) {
  validate_stack(stack);
  StackGradient out = zero_gradient(stack);
  int gi = 0;
  for_each_grid(out, [&](const char*, ParamGrid& g) {
    for (int c = 0; c < g.channels; ++c)
      for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) g.at(c, x, y) = finite_diff_probe(prob, stack, w, mode, gi, c, x, y, h);
    ++gi;
  });
  return out;
}

}  // namespace dccf
