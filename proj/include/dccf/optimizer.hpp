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

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "dccf/assembly.hpp"
#include "dccf/colorspace.hpp"
#include "dccf/filters.hpp"
#include "dccf/gradient.hpp"
#include "dccf/losses.hpp"

namespace dccf {

struct FitConfig {
  int grid_w = 64;
  int grid_h = 64;
  int knots = kDefaultKnots;
  LossWeights weights;
  LossMode mode = LossMode::kSmooth;
  // Step on the preconditioned gradient (see fit()).
  double step = 0.1;
  double momentum = 0.9;
  int max_iters = 500;
  std::uint64_t seed = 0;
  StageOrder order = kDefaultOrder;
  // Uniform jitter of the identity initialization, drawn from `seed`.
  double init_noise = 0.0;
  // Stop once repeated halving has shrunk the step below this.
  double min_step = 1e-6;
  int low_max_side = kLowStreamMaxSide;

  void validate() const {
    if (grid_w < 1 || grid_h < 1) throw std::invalid_argument("fit: grid dimensions must be positive");
    if (knots < 1 || knots > kMaxKnots) throw std::invalid_argument("fit: knots must be in [1, 64]");
    if (!(step > 0.0)) throw std::invalid_argument("fit: step must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("fit: momentum must be in [0, 1)");
    if (max_iters < 1) throw std::invalid_argument("fit: max_iters must be at least 1");
    if (!(init_noise >= 0.0)) throw std::invalid_argument("fit: init_noise must be >= 0");
    if (low_max_side < 1) throw std::invalid_argument("fit: low_max_side must be positive");
    if (!is_valid_order(order)) throw std::invalid_argument("fit: order must be a permutation of V,S,H");
    weights.validate();
  }
};

struct FitReport {
  std::vector<double> loss_history;
  double best_loss = 0.0;
  double final_mse = 0.0;
  double final_psnr = 0.0;
  int iterations_run = 0;
  double wall_time = 0.0;  // seconds
};

struct FitResult {
  FilterStack stack;
  FitReport report;
};

namespace detail {

inline void axpy(double a, const FilterStack& x, FilterStack& y) {
  const std::array<const ParamGrid*, 4> src = {&x.val.params, &x.sat.params, &x.hue.params, &x.attn.params};
  const std::array<ParamGrid*, 4> dst = {&y.val.params, &y.sat.params, &y.hue.params, &y.attn.params};
  for (std::size_t k = 0; k < 4; ++k) {
    for (std::size_t j = 0; j < dst[k]->data.size(); ++j) dst[k]->data[j] += a * src[k]->data[j];
  }
}

inline void scale(FilterStack& x, double a) {
  for_each_grid(x, [&](const char*, ParamGrid& g) {
    for (double& v : g.data) v *= a;
  });
}

/// Name of the first parameter channel holding a non-finite value, or "" if none.
inline std::string first_non_finite(const FilterStack& g) {
  std::string bad;
  for_each_grid(g, [&](const char* name, const ParamGrid& grid) {
    if (!bad.empty()) return;
    for (int c = 0; c < grid.channels; ++c) {
      for (double v : grid.channel(c)) {
        if (!std::isfinite(v)) {
          bad = channel_name(name, c);
          return;
        }
      }
    }
  });
  return bad;
}

inline void round_to_float(FilterStack& s) {
  for_each_grid(s, [](const char*, ParamGrid& g) {
    for (double& v : g.data) v = static_cast<double>(static_cast<float>(v));
  });
}

}  // namespace detail

/// Fits a filter stack to a (composite, ground truth, mask) triple.
///
/// Heavy-ball gradient descent from the identity stack. The raw gradient is
/// scaled by cells · max(100, mask area) / pixels so that one step moves a
/// cell's parameters by roughly the per-pixel residual of the pixels it
/// covers, independent of grid and image size. Whenever the loss rises above
/// the previous iterate the step is halved, momentum is cleared and the
/// parameters return to the best stack seen so far.
///
/// The returned stack is the best-loss stack rounded to float32 (the on-disk
/// precision), so saving and reloading it reproduces it exactly.
inline FitResult fit(const RgbImage& composite, const RgbImage& gt, const Mask& mask, const FitConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const FitProblem prob = FitProblem::make(composite, gt, mask, cfg.low_max_side);

  FilterStack stack = identity_stack(cfg.grid_w, cfg.grid_h, cfg.knots);
  stack.order = cfg.order;
  if (cfg.init_noise > 0.0) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> jitter(-cfg.init_noise, cfg.init_noise);
    for_each_grid(stack, [&](const char*, ParamGrid& g) {
      for (double& v : g.data) v += jitter(rng);
    });
  }

  const double cells = static_cast<double>(cfg.grid_w) * cfg.grid_h;
  const double precond = cells * foreground_norm(prob.mask) / static_cast<double>(composite.pixels());

  FitResult result;
  FitReport& report = result.report;
  FilterStack velocity = zero_gradient(stack);
  FilterStack best = stack;
  double best_loss = std::numeric_limits<double>::infinity();
  double prev_loss = std::numeric_limits<double>::infinity();
  double step = cfg.step;
  StackGradient grad;

  for (int it = 0; it < cfg.max_iters; ++it) {
    const LossTerms terms = analytic_gradients(prob, stack, cfg.weights, cfg.mode, grad);
    const double loss = terms.total;
    if (!std::isfinite(loss)) {
      const std::string bad = detail::first_non_finite(grad);
      throw NumericalError("fit: non-finite loss at iteration " + std::to_string(it) +
                               (bad.empty() ? std::string() : " (first bad gradient channel " + bad + ")"),
                           it, bad.empty() ? "loss" : bad);
    }
    if (const std::string bad = detail::first_non_finite(grad); !bad.empty()) {
      throw NumericalError("fit: non-finite gradient in channel " + bad + " at iteration " + std::to_string(it), it,
                           bad);
    }
    report.loss_history.push_back(loss);
    report.iterations_run = it + 1;

    if (loss < best_loss) {
      best_loss = loss;
      best = stack;
    } else if (loss > prev_loss) {
      step *= 0.5;
      velocity = zero_gradient(stack);
      stack = best;
      prev_loss = best_loss;
      if (step < cfg.min_step) break;
      continue;
    }
    prev_loss = loss;

    detail::scale(velocity, cfg.momentum);
    detail::axpy(-step * precond, grad, velocity);
    detail::axpy(1.0, velocity, stack);
  }

  detail::round_to_float(best);
  report.best_loss = best_loss;
  const PipelineTrace final_trace = run_pipeline(composite, best);
  report.final_mse = mse(final_trace.i4, gt);
  report.final_psnr = psnr(final_trace.i4, gt);
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  result.stack = std::move(best);
  return result;
}

/// Forward-model perturbation used to synthesize composites.
struct PerturbSpec {
  double theta = 0.0;  // hue shift, radians
  double sigma = 0.0;  // saturation strength, as in the saturation filter
  double gamma = 1.0;  // value exponent, > 0
};

/// Foreground pixels get V ← V^γ, then the saturation transform with σ, then
/// a hue shift by θ (applied on the HSV hue, so V and S are untouched by it).
/// Background pixels are copied unchanged; soft masks blend.
inline RgbImage synth_perturb(const RgbImage& gt, const Mask& mask, const PerturbSpec& spec) {
  require_same_size(gt, mask, "synth_perturb");
  if (!(spec.gamma > 0.0)) throw std::invalid_argument("synth_perturb: gamma must be positive");
  RgbImage out = gt;
  for (std::size_t i = 0; i < gt.pixels(); ++i) {
    const double m = mask.data[i];
    if (m <= 0.0) continue;
    const Vec3 src = gt.pixel(i);
    Vec3 hsv = rgb_to_hsv_px(src);
    hsv[2] = std::pow(hsv[2], spec.gamma);
    Vec3 x = saturation_px(hsv_to_rgb_px(hsv), spec.sigma);
    if (spec.theta != 0.0) {
      hsv = rgb_to_hsv_px(x);
      hsv[0] = std::fmod(hsv[0] + spec.theta, kTwoPi);
      if (hsv[0] < 0.0) hsv[0] += kTwoPi;
      x = hsv_to_rgb_px(hsv);
    }
    Vec3 c;
    for (int k = 0; k < 3; ++k) c[k] = clamp01(m * x[k] + (1.0 - m) * src[k]);
    out.set_pixel(i, c);
  }
  return out;
}

}  // namespace dccf
