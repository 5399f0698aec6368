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
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "dccf/assembly.hpp"
#include "dccf/colorspace.hpp"
#include "dccf/filters.hpp"
#include "dccf/image.hpp"

namespace dccf {

/// Floor on the foreground area used to normalize squared errors.
inline constexpr double kMinForegroundArea = 100.0;

enum class LossMode { kRgbOnly, kStandard, kSmooth };

inline LossMode parse_loss_mode(const std::string& s) {
  if (s == "rgb_only" || s == "rgb") return LossMode::kRgbOnly;
  if (s == "standard") return LossMode::kStandard;
  if (s == "smooth") return LossMode::kSmooth;
  throw std::invalid_argument("unknown loss mode '" + s + "' (expected rgb_only, standard or smooth)");
}

inline std::string to_string(LossMode m) {
  switch (m) {
    case LossMode::kRgbOnly: return "rgb_only";
    case LossMode::kStandard: return "standard";
    case LossMode::kSmooth: return "smooth";
  }
  return "?";
}

/// λ1..λ5 and the TV weight of the total objective.
struct LossWeights {
  double rgb_low = 1.0;     // λ1
  double rgb_high = 1.0;    // λ2
  double value = 0.1;       // λ3
  double saturation = 0.1;  // λ4
  double hue = 0.1;         // λ5
  double tv = 1e-3;

  void validate() const {
    for (double v : {rgb_low, rgb_high, value, saturation, hue, tv}) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("loss weights must be finite and >= 0");
    }
  }
};

inline double foreground_norm(const Mask& mask) {
  const double area = std::accumulate(mask.data.begin(), mask.data.end(), 0.0);
  return std::max(kMinForegroundArea, area);
}

/// Σ_p ‖pred_p − gt_p‖² / max(100, Σ_p mask_p), summed over every pixel.
inline double fg_mse(const RgbImage& pred, const RgbImage& gt, const Mask& mask) {
  require_same_size(pred, gt, "fg_mse");
  require_same_size(pred, mask, "fg_mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = pred.data[i] - gt.data[i];
    acc += d * d;
  }
  return acc / foreground_norm(mask);
}

inline double fg_mse(const PlaneImage& pred, const PlaneImage& gt, const Mask& mask) {
  require_same_size(pred, gt, "fg_mse");
  require_same_size(pred, mask, "fg_mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = pred.data[i] - gt.data[i];
    acc += d * d;
  }
  return acc / foreground_norm(mask);
}

/// Σ_p (1 − cos(H_pred − H_gt)) / max(100, Σ mask).
inline double fg_cosine_distance(const PlaneImage& pred, const PlaneImage& gt, const Mask& mask) {
  require_same_size(pred, gt, "fg_cosine_distance");
  require_same_size(pred, mask, "fg_cosine_distance");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) acc += 1.0 - std::cos(pred.data[i] - gt.data[i]);
  return acc / foreground_norm(mask);
}

/// Supervision planes derived from a ground-truth image, computed once per fit.
struct AuxTargets {
  PlaneImage smooth_v;
  PlaneImage smooth_s;
  RgbImage smooth_h;
  HsvImage standard;

  static AuxTargets from(const RgbImage& gt) {
    return {smooth_value_map(gt), smooth_saturation_map(gt), smooth_hue_map(gt), rgb_to_hsv(gt)};
  }
};

struct AuxLosses {
  double value = 0.0;
  double saturation = 0.0;
  double hue = 0.0;
};

/// Auxiliary V/S/H losses for the outputs of the value, saturation and hue stages.
inline AuxLosses aux_hsv_losses(const RgbImage& value_stage, const RgbImage& saturation_stage,
                                const RgbImage& hue_stage, const AuxTargets& gt, const Mask& mask, LossMode mode) {
  AuxLosses r;
  if (mode == LossMode::kSmooth) {
    r.value = fg_mse(smooth_value_map(value_stage), gt.smooth_v, mask);
    r.saturation = fg_mse(smooth_saturation_map(saturation_stage), gt.smooth_s, mask);
    r.hue = fg_mse(smooth_hue_map(hue_stage), gt.smooth_h, mask);
  } else if (mode == LossMode::kStandard) {
    r.value = fg_mse(rgb_to_hsv(value_stage).v, gt.standard.v, mask);
    r.saturation = fg_mse(rgb_to_hsv(saturation_stage).s, gt.standard.s, mask);
    r.hue = fg_cosine_distance(rgb_to_hsv(hue_stage).h, gt.standard.h, mask);
  }
  return r;
}

/// All three auxiliary losses evaluated on the same prediction.
inline AuxLosses aux_hsv_losses(const RgbImage& pred, const RgbImage& gt, const Mask& mask, LossMode mode) {
  require_same_size(pred, gt, "aux_hsv_losses");
  require_same_size(pred, mask, "aux_hsv_losses");
  return aux_hsv_losses(pred, pred, pred, AuxTargets::from(gt), mask, mode);
}

/// Anisotropic total variation summed over channels, divided by the cell count.
inline double tv_reg(const ParamGrid& g) {
  if (g.cells() == 0) return 0.0;
  double acc = 0.0;
  for (int c = 0; c < g.channels; ++c) {
    for (int y = 0; y < g.height; ++y) {
      for (int x = 0; x < g.width; ++x) {
        if (x + 1 < g.width) acc += std::abs(g.at(c, x + 1, y) - g.at(c, x, y));
        if (y + 1 < g.height) acc += std::abs(g.at(c, x, y + 1) - g.at(c, x, y));
      }
    }
  }
  return acc / static_cast<double>(g.cells());
}

template <class Map>
double tv_reg(const Map& m) {
  return tv_reg(m.params);
}

inline double tv_reg(const FilterStack& s) {
  double acc = 0.0;
  for_each_grid(s, [&](const char*, const ParamGrid& g) { acc += tv_reg(g); });
  return acc;
}

/// Adds d(weight · tv_reg(g))/dg into `grad` (subgradient 0 where neighbours are equal).
inline void tv_reg_gradient(const ParamGrid& g, double weight, ParamGrid& grad) {
  if (g.cells() == 0 || weight == 0.0) return;
  const double k = weight / static_cast<double>(g.cells());
  auto sign = [](double d) { return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0); };
  for (int c = 0; c < g.channels; ++c) {
    for (int y = 0; y < g.height; ++y) {
      for (int x = 0; x < g.width; ++x) {
        if (x + 1 < g.width) {
          const double s = k * sign(g.at(c, x + 1, y) - g.at(c, x, y));
          grad.at(c, x + 1, y) += s;
          grad.at(c, x, y) -= s;
        }
        if (y + 1 < g.height) {
          const double s = k * sign(g.at(c, x, y + 1) - g.at(c, x, y));
          grad.at(c, x, y + 1) += s;
          grad.at(c, x, y) -= s;
        }
      }
    }
  }
}

struct LossTerms {
  double rgb_low = 0.0;
  double rgb_high = 0.0;
  double value = 0.0;
  double saturation = 0.0;
  double hue = 0.0;
  double tv = 0.0;
  double total = 0.0;
};

/// Both streams of one fitting problem. When the working image already fits the
/// low-resolution budget, the two streams are the same images.
struct LossInputs {
  const PipelineTrace& low;
  const PipelineTrace& high;
  const RgbImage& gt_low;
  const RgbImage& gt_high;
  const Mask& mask_low;
  const Mask& mask_high;
};

/// λ1·L_rgb_low + λ2·L_rgb_high + λ3·L_val + λ4·L_sat + λ5·L_hue + tv·Σ TV.
/// RGB terms count both I3 and I4; auxiliary terms use the low stream only.
inline LossTerms total_loss(const LossInputs& in, const FilterStack& stack, const LossWeights& w, LossMode mode,
                            const AuxTargets* targets = nullptr) {
  w.validate();
  LossTerms t;
  if (w.rgb_low != 0.0) t.rgb_low = fg_mse(in.low.i3, in.gt_low, in.mask_low) + fg_mse(in.low.i4, in.gt_low, in.mask_low);
  if (w.rgb_high != 0.0) {
    t.rgb_high = fg_mse(in.high.i3, in.gt_high, in.mask_high) + fg_mse(in.high.i4, in.gt_high, in.mask_high);
  }
  if (mode != LossMode::kRgbOnly && (w.value != 0.0 || w.saturation != 0.0 || w.hue != 0.0)) {
    AuxTargets local;
    if (!targets) {
      local = AuxTargets::from(in.gt_low);
      targets = &local;
    }
    const AuxLosses a = aux_hsv_losses(in.low.output_of(Channel::kValue), in.low.output_of(Channel::kSaturation),
                                       in.low.output_of(Channel::kHue), *targets, in.mask_low, mode);
    t.value = a.value;
    t.saturation = a.saturation;
    t.hue = a.hue;
  }
  t.tv = tv_reg(stack);
  t.total = w.rgb_low * t.rgb_low + w.rgb_high * t.rgb_high + w.value * t.value + w.saturation * t.saturation +
            w.hue * t.hue + w.tv * t.tv;
  return t;
}

}  // namespace dccf
