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

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dccf/colorspace.hpp"
#include "dccf/filters.hpp"

namespace dccf {

/// A user's global value curve, parameterized like one cell of the value filter.
struct UserCurve {
  double v_min = 0.0;
  std::vector<double> phis;

  static UserCurve identity(int knots = kDefaultKnots) {
    UserCurve c;
    c.phis.assign(knots, 0.0);
    c.phis[0] = 1.0;
    return c;
  }
};

namespace detail {

inline void require_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in [0, 1]");
}

}  // namespace detail

/// Per cell R' = α·R(θ) + (1−α)·R_cell, translation untouched. θ in degrees.
inline HueFilterMap blend_hue(const HueFilterMap& f, double theta_deg, double alpha) {
  detail::require_alpha(alpha);
  if (!(theta_deg >= 0.0 && theta_deg <= 360.0)) throw std::invalid_argument("hue theta must be in [0, 360]");
  const Mat3 user = hue_rotation_matrix(theta_deg * kPi / 180.0);
  HueFilterMap out = f;
  if (alpha == 0.0) return out;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for (double& v : out.params.channel(4 * i + j)) v = alpha * user[i][j] + (1.0 - alpha) * v;
    }
  }
  return out;
}

/// Per cell parameters = α·user + (1−α)·cell.
inline ValueFilterMap blend_value(const ValueFilterMap& f, const UserCurve& user, double alpha) {
  detail::require_alpha(alpha);
  if (static_cast<int>(user.phis.size()) != f.knots()) {
    throw std::invalid_argument("user curve has " + std::to_string(user.phis.size()) + " knots, filter has " +
                                std::to_string(f.knots()));
  }
  ValueFilterMap out = f;
  if (alpha == 0.0) return out;
  for (double& v : out.params.channel(0)) v = alpha * user.v_min + (1.0 - alpha) * v;
  for (int k = 0; k < f.knots(); ++k) {
    for (double& v : out.params.channel(k + 1)) v = alpha * user.phis[k] + (1.0 - alpha) * v;
  }
  return out;
}

/// Per cell σ' = α·σ_user + (1−α)·σ_cell.
inline SaturationFilterMap blend_saturation(const SaturationFilterMap& f, double sigma_user, double alpha) {
  detail::require_alpha(alpha);
  if (!(sigma_user >= -1.0 && sigma_user <= 1.0)) throw std::invalid_argument("sigma must be in [-1, 1]");
  SaturationFilterMap out = f;
  if (alpha == 0.0) return out;
  for (double& v : out.params.data) v = alpha * sigma_user + (1.0 - alpha) * v;
  return out;
}

/// Optional per-dimension user intents.
struct Adjustment {
  struct Hue {
    double theta = 0.0;
    double alpha = 0.0;
  };
  struct Sat {
    double sigma = 0.0;
    double alpha = 0.0;
  };
  struct Val {
    UserCurve curve;
    double alpha = 0.0;
  };
  std::optional<Hue> hue;
  std::optional<Sat> sat;
  std::optional<Val> val;
};

/// Applies every present intent to a copy of the stack.
inline FilterStack apply_adjustment(const FilterStack& stack, const Adjustment& adj) {
  FilterStack out = stack;
  if (adj.hue) out.hue = blend_hue(stack.hue, adj.hue->theta, adj.hue->alpha);
  if (adj.sat) out.sat = blend_saturation(stack.sat, adj.sat->sigma, adj.sat->alpha);
  if (adj.val) out.val = blend_value(stack.val, adj.val->curve, adj.val->alpha);
  return out;
}

}  // namespace dccf
