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
#include <stdexcept>
#include <string>
#include <vector>

#include "dccf/colorspace.hpp"
#include "dccf/image.hpp"
#include "dccf/linalg.hpp"

namespace dccf {

inline constexpr int kDefaultKnots = 8;
inline constexpr int kMaxKnots = 64;

/// Raw attention parameter of the identity stack; logistic(-16) ≈ 1.1e-7.
inline constexpr double kIdentityAttentionRaw = -16.0;

/// Channel-major parameter grid: data[(c * height + y) * width + x].
struct ParamGrid {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;

  ParamGrid() = default;
  ParamGrid(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::size_t cells() const { return static_cast<std::size_t>(width) * height; }

  double& at(int c, int x, int y) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  double at(int c, int x, int y) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }

  std::span<double> channel(int c) { return {data.data() + c * cells(), cells()}; }
  std::span<const double> channel(int c) const { return {data.data() + c * cells(), cells()}; }

  void fill_channel(int c, double v) { std::ranges::fill(channel(c), v); }

  bool operator==(const ParamGrid&) const = default;
};

/// Per-cell value curve: channel 0 = V_min, channels 1..m = φ₁..φ_m.
struct ValueFilterMap {
  ParamGrid params;

  int knots() const { return params.channels - 1; }
  bool operator==(const ValueFilterMap&) const = default;
};

/// Per-cell saturation strength σ (one channel).
struct SaturationFilterMap {
  ParamGrid params;
  bool operator==(const SaturationFilterMap&) const = default;
};

/// Per-cell 3x4 affine [R | t], 12 channels row-major.
struct HueFilterMap {
  ParamGrid params;
  bool operator==(const HueFilterMap&) const = default;
};

/// Per-cell raw attention a (α = logistic(a)) followed by a 3x4 W_ref, 13 channels.
struct AttentiveFilterMap {
  ParamGrid params;
  bool operator==(const AttentiveFilterMap&) const = default;
};

enum class Channel { kValue = 0, kSaturation = 1, kHue = 2 };

using StageOrder = std::array<Channel, 3>;

inline constexpr StageOrder kDefaultOrder = {Channel::kValue, Channel::kSaturation, Channel::kHue};

inline bool is_valid_order(const StageOrder& o) {
  std::array<int, 3> seen{};
  for (Channel c : o) {
    const int i = static_cast<int>(c);
    if (i < 0 || i > 2) return false;
    ++seen[i];
  }
  return seen == std::array<int, 3>{1, 1, 1};
}

inline char channel_letter(Channel c) {
  switch (c) {
    case Channel::kValue: return 'V';
    case Channel::kSaturation: return 'S';
    case Channel::kHue: return 'H';
  }
  return '?';
}

inline std::string order_to_string(const StageOrder& o) {
  return {channel_letter(o[0]), channel_letter(o[1]), channel_letter(o[2])};
}

/// Parses "VSH", "HVS", ... (case-insensitive).
inline StageOrder parse_order(const std::string& s) {
  if (s.size() != 3) throw std::invalid_argument("order must name three stages, got '" + s + "'");
  StageOrder o{};
  for (int i = 0; i < 3; ++i) {
    switch (std::toupper(static_cast<unsigned char>(s[i]))) {
      case 'V': o[i] = Channel::kValue; break;
      case 'S': o[i] = Channel::kSaturation; break;
      case 'H': o[i] = Channel::kHue; break;
      default: throw std::invalid_argument("unknown stage '" + std::string(1, s[i]) + "' in order");
    }
  }
  if (!is_valid_order(o)) throw std::invalid_argument("order must be a permutation of V,S,H: '" + s + "'");
  return o;
}

struct FilterStack {
  ValueFilterMap val;
  SaturationFilterMap sat;
  HueFilterMap hue;
  AttentiveFilterMap attn;
  StageOrder order = kDefaultOrder;

  int grid_width() const { return val.params.width; }
  int grid_height() const { return val.params.height; }
  int knots() const { return val.knots(); }

  bool operator==(const FilterStack&) const = default;
};

/// Visits the four parameter grids in serialization order with a display name.
template <class Stack, class F>
void for_each_grid(Stack& stack, F&& f) {
  f("val", stack.val.params);
  f("sat", stack.sat.params);
  f("hue", stack.hue.params);
  f("attn", stack.attn.params);
}

/// Name of one scalar parameter channel, e.g. "val.phi3" or "hue.d24".
inline std::string channel_name(const std::string& grid, int c) {
  if (grid == "val") return c == 0 ? "val.v_min" : "val.phi" + std::to_string(c);
  if (grid == "sat") return "sat.sigma";
  if (grid == "hue") return "hue.d" + std::to_string(c / 4 + 1) + std::to_string(c % 4 + 1);
  if (grid == "attn") return c == 0 ? "attn.a_raw" : "attn.w" + std::to_string((c - 1) / 4 + 1) + std::to_string((c - 1) % 4 + 1);
  return grid + "." + std::to_string(c);
}

inline void validate_stack(const FilterStack& s) {
  const auto& v = s.val.params;
  if (v.width < 1 || v.height < 1) throw std::invalid_argument("filter stack grid must be at least 1x1");
  if (v.channels < 2 || v.channels - 1 > kMaxKnots) throw std::invalid_argument("value filter needs 1..64 knots");
  auto check = [&](const ParamGrid& g, int channels, const char* name) {
    if (g.width != v.width || g.height != v.height) {
      throw DimensionError(std::string(name) + " map grid differs from value map grid");
    }
    if (g.channels != channels || g.data.size() != g.cells() * channels) {
      throw std::invalid_argument(std::string(name) + " map has wrong channel count");
    }
  };
  check(s.val.params, v.channels, "value");
  check(s.sat.params, 1, "saturation");
  check(s.hue.params, 12, "hue");
  check(s.attn.params, 13, "attentive");
  if (!is_valid_order(s.order)) throw std::invalid_argument("stage order is not a permutation");
}

// ---------------------------------------------------------------------------
// Per-pixel transforms.
// ---------------------------------------------------------------------------

inline double logistic(double a) { return 1.0 / (1.0 + std::exp(-a)); }

inline double knot(int i, int m) { return static_cast<double>(i) / m; }

/// Curve before the output clamp: V_min + Σ φᵢ·max(x − (i−1)/m, 0).
inline double value_curve_raw(double x, double v_min, std::span<const double> phi) {
  const int m = static_cast<int>(phi.size());
  double u = v_min;
  for (int i = 0; i < m; ++i) u += phi[i] * std::max(x - knot(i, m), 0.0);
  return u;
}

inline double value_curve(double x, double v_min, std::span<const double> phi) {
  return clamp01(value_curve_raw(x, v_min, phi));
}

inline double mid_tone(const Vec3& x) {
  return 0.5 * (std::max({x[0], x[1], x[2]}) + std::min({x[0], x[1], x[2]}));
}

inline Vec3 saturation_px(const Vec3& x, double sigma) {
  const double s = std::clamp(sigma, -1.0, 1.0);
  const double cmed = mid_tone(x);
  return {clamp01(x[0] + (x[0] - cmed) * s), clamp01(x[1] + (x[1] - cmed) * s), clamp01(x[2] + (x[2] - cmed) * s)};
}

inline Vec3 hue_affine_px(const Vec3& x, std::span<const double> delta) {
  const Vec3 y = apply_affine(delta, x);
  return {clamp01(y[0]), clamp01(y[1]), clamp01(y[2])};
}

/// I4 = clamp01(I·α + (W_ref·I3 + t_ref)·(1−α)) with α = logistic(a_raw).
inline Vec3 attentive_px(const Vec3& input, const Vec3& refined, double a_raw, std::span<const double> w_ref) {
  const double alpha = logistic(a_raw);
  const Vec3 z = apply_affine(w_ref, refined);
  return {clamp01(input[0] * alpha + z[0] * (1.0 - alpha)), clamp01(input[1] * alpha + z[1] * (1.0 - alpha)),
          clamp01(input[2] * alpha + z[2] * (1.0 - alpha))};
}

/// Rotation by θ about the gray diagonal (1,1,1)/√3; θ = 2π/3 maps red → green → blue → red.
inline Mat3 hue_rotation_matrix(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double diag = c + (1.0 - c) / 3.0;
  const double off = (1.0 - c) / 3.0;
  const double k = s / std::sqrt(3.0);
  return {{{diag, off - k, off + k}, {off + k, diag, off - k}, {off - k, off + k, diag}}};
}

// ---------------------------------------------------------------------------
// Whole-image application with full-resolution maps.
// ---------------------------------------------------------------------------

namespace detail {

inline void require_map_matches(const ParamGrid& g, int w, int h, const char* what) {
  if (g.width != w || g.height != h) {
    throw DimensionError(std::string(what) + ": filter map is " + std::to_string(g.width) + "x" +
                         std::to_string(g.height) + ", image is " + std::to_string(w) + "x" + std::to_string(h));
  }
}

inline std::vector<double> cell_params(const ParamGrid& g, std::size_t cell) {
  std::vector<double> p(g.channels);
  for (int c = 0; c < g.channels; ++c) p[c] = g.data[c * g.cells() + cell];
  return p;
}

}  // namespace detail

inline PlaneImage apply_value_curve(const PlaneImage& v, const ValueFilterMap& f) {
  detail::require_map_matches(f.params, v.width, v.height, "apply_value_curve");
  PlaneImage out(v.width, v.height);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto p = detail::cell_params(f.params, i);
    out.data[i] = value_curve(v.data[i], p[0], std::span<const double>(p).subspan(1));
  }
  return out;
}

inline RgbImage apply_saturation(const RgbImage& img, const SaturationFilterMap& f) {
  detail::require_map_matches(f.params, img.width, img.height, "apply_saturation");
  RgbImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels(); ++i) out.set_pixel(i, saturation_px(img.pixel(i), f.params.data[i]));
  return out;
}

inline RgbImage apply_hue_affine(const RgbImage& img, const HueFilterMap& f) {
  detail::require_map_matches(f.params, img.width, img.height, "apply_hue_affine");
  RgbImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels(); ++i) {
    out.set_pixel(i, hue_affine_px(img.pixel(i), detail::cell_params(f.params, i)));
  }
  return out;
}

inline RgbImage apply_attentive(const RgbImage& input, const RgbImage& refined, const AttentiveFilterMap& f) {
  require_same_size(input, refined, "apply_attentive");
  detail::require_map_matches(f.params, input.width, input.height, "apply_attentive");
  RgbImage out(input.width, input.height);
  for (std::size_t i = 0; i < input.pixels(); ++i) {
    const auto p = detail::cell_params(f.params, i);
    out.set_pixel(i, attentive_px(input.pixel(i), refined.pixel(i), p[0], std::span<const double>(p).subspan(1)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Construction.
// ---------------------------------------------------------------------------

inline ValueFilterMap identity_value_map(int w, int h, int knots = kDefaultKnots) {
  ValueFilterMap m{ParamGrid(w, h, knots + 1, 0.0)};
  m.params.fill_channel(1, 1.0);
  return m;
}

inline SaturationFilterMap identity_saturation_map(int w, int h) { return {ParamGrid(w, h, 1, 0.0)}; }

inline HueFilterMap affine_hue_map(int w, int h, const Affine34& a) {
  HueFilterMap m{ParamGrid(w, h, 12)};
  for (int c = 0; c < 12; ++c) m.params.fill_channel(c, a[c]);
  return m;
}

inline AttentiveFilterMap attentive_map(int w, int h, double a_raw, const Affine34& w_ref) {
  AttentiveFilterMap m{ParamGrid(w, h, 13)};
  m.params.fill_channel(0, a_raw);
  for (int c = 0; c < 12; ++c) m.params.fill_channel(c + 1, w_ref[c]);
  return m;
}

/// Identity curve, σ = 0, Δ = [I|0], attention ≈ 0 with W_ref = [I|0], order V→S→H.
inline FilterStack identity_stack(int grid_w, int grid_h, int knots = kDefaultKnots) {
  if (grid_w < 1 || grid_h < 1) throw std::invalid_argument("identity_stack: grid must be at least 1x1");
  if (knots < 1 || knots > kMaxKnots) throw std::invalid_argument("identity_stack: knots must be in [1, 64]");
  return FilterStack{identity_value_map(grid_w, grid_h, knots), identity_saturation_map(grid_w, grid_h),
                     affine_hue_map(grid_w, grid_h, identity_affine()),
                     attentive_map(grid_w, grid_h, kIdentityAttentionRaw, identity_affine()), kDefaultOrder};
}

}  // namespace dccf
