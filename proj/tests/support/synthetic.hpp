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

// Deterministic synthetic images, masks and stacks shared by the unit and
// acceptance suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "dccf/colorspace.hpp"
#include "dccf/filters.hpp"
#include "dccf/image.hpp"

namespace dccf::testing {

inline RgbImage random_image(int w, int h, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  RgbImage img(w, h);
  for (double& v : img.data) v = u(rng);
  return img;
}

/// Random colors in [0.2, 0.8] whose sorted channels are at least `gap` apart,
/// so no pixel sits on an HSV branch tie.
inline RgbImage separated_image(int w, int h, std::uint64_t seed, double gap = 0.06) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.2, 0.8);
  RgbImage img(w, h);
  for (std::size_t i = 0; i < img.pixels(); ++i) {
    Vec3 c;
    for (;;) {
      c = {u(rng), u(rng), u(rng)};
      Vec3 s = c;
      std::sort(s.begin(), s.end());
      if (s[1] - s[0] >= gap && s[2] - s[1] >= gap) break;
    }
    img.set_pixel(i, c);
  }
  return img;
}

/// Random saturated colors: S in [0.5, 0.9], V in [0.4, 0.9], arbitrary hue.
inline RgbImage saturated_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> hue(0.0, kTwoPi), sat(0.5, 0.9), val(0.4, 0.9);
  RgbImage img(w, h);
  for (std::size_t i = 0; i < img.pixels(); ++i) img.set_pixel(i, hsv_to_rgb_px(Vec3{hue(rng), sat(rng), val(rng)}));
  return img;
}

/// Smooth, photo-like image: a few low-frequency color waves over a vertical
/// sky-to-ground gradient, values kept inside (0.08, 0.92).
inline RgbImage photo_like(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::array<std::array<Wave, 3>, 3> waves{};
  for (auto& ch : waves)
    for (auto& wv : ch) wv = {0.5 + 2.5 * u(rng), 0.5 + 2.5 * u(rng), kTwoPi * u(rng), 0.05 + 0.08 * u(rng)};
  const Vec3 top = {0.3 + 0.4 * u(rng), 0.3 + 0.4 * u(rng), 0.3 + 0.4 * u(rng)};
  const Vec3 bottom = {0.3 + 0.4 * u(rng), 0.3 + 0.4 * u(rng), 0.3 + 0.4 * u(rng)};
  RgbImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double nx = (x + 0.5) / w;
      const double ny = (y + 0.5) / h;
      Vec3 c;
      for (int k = 0; k < 3; ++k) {
        double v = top[k] + (bottom[k] - top[k]) * ny;
        for (const Wave& wv : waves[k]) v += wv.amp * std::sin(kTwoPi * (wv.fx * nx + wv.fy * ny) + wv.phase);
        c[k] = std::clamp(v, 0.08, 0.92);
      }
      img.set_pixel(x, y, c);
    }
  }
  return img;
}

/// Piecewise-constant scene with hard edges: stripes, checker tiles and discs
/// over a smooth base, values inside (0.1, 0.9).
inline RgbImage edge_rich(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto color = [&] { return Vec3{0.15 + 0.7 * u(rng), 0.15 + 0.7 * u(rng), 0.15 + 0.7 * u(rng)}; };
  const Vec3 a = color(), b = color(), c = color(), d = color();
  struct Disc {
    double cx, cy, r;
    Vec3 col;
  };
  std::vector<Disc> discs;
  for (int i = 0; i < 12; ++i) discs.push_back({u(rng), u(rng), 0.03 + 0.08 * u(rng), color()});
  RgbImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double nx = (x + 0.5) / w;
      const double ny = (y + 0.5) / h;
      Vec3 col;
      if (nx < 0.5) {
        const int stripe = static_cast<int>(std::floor(nx * 40.0 + 6.0 * ny));
        col = (stripe % 2 == 0) ? a : b;
      } else {
        const int tile = static_cast<int>(std::floor(nx * 32.0)) + static_cast<int>(std::floor(ny * 32.0));
        col = (tile % 2 == 0) ? c : d;
      }
      for (const Disc& disc : discs) {
        if ((nx - disc.cx) * (nx - disc.cx) + (ny - disc.cy) * (ny - disc.cy) < disc.r * disc.r) col = disc.col;
      }
      for (int k = 0; k < 3; ++k) col[k] = std::clamp(col[k] + 0.05 * std::sin(7.0 * nx + 3.0 * k) * std::cos(5.0 * ny), 0.1, 0.9);
      img.set_pixel(x, y, col);
    }
  }
  return img;
}

/// Centered elliptical foreground covering about a third of the frame.
inline Mask ellipse_mask(int w, int h, double rx = 0.33, double ry = 0.3) {
  Mask m(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double nx = ((x + 0.5) / w - 0.5) / rx;
      const double ny = ((y + 0.5) / h - 0.5) / ry;
      m.at(x, y) = (nx * nx + ny * ny <= 1.0) ? 1.0 : 0.0;
    }
  }
  return m;
}

inline Mask full_mask(int w, int h) { return Mask(w, h, 1.0); }

/// Identity stack plus uniform noise of the given amplitude on every parameter;
/// the attention logit is centered at 0 so both blend branches carry weight.
inline FilterStack random_stack(int gw, int gh, std::uint64_t seed, double amplitude) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  FilterStack s = identity_stack(gw, gh);
  s.attn.params.fill_channel(0, 0.0);
  for_each_grid(s, [&](const char*, ParamGrid& g) {
    for (double& v : g.data) v += u(rng);
  });
  return s;
}

/// Largest per-pixel HSV plane differences between two images.
/// S is compared where both V exceed `floor`, H where both S exceed it as well.
struct PlaneDiff {
  double v = 0.0;
  double s = 0.0;
  double h = 0.0;
};

inline double hue_distance(double a, double b) {
  const double d = std::fmod(std::abs(a - b), kTwoPi);
  return std::min(d, kTwoPi - d);
}

inline PlaneDiff plane_diff(const RgbImage& a, const RgbImage& b, double floor = 1e-3) {
  PlaneDiff d;
  for (std::size_t i = 0; i < a.pixels(); ++i) {
    const Vec3 x = rgb_to_hsv_px(a.pixel(i));
    const Vec3 y = rgb_to_hsv_px(b.pixel(i));
    d.v = std::max(d.v, std::abs(x[2] - y[2]));
    if (x[2] > floor && y[2] > floor) {
      d.s = std::max(d.s, std::abs(x[1] - y[1]));
      if (x[1] > floor && y[1] > floor) d.h = std::max(d.h, hue_distance(x[0], y[0]));
    }
  }
  return d;
}

}  // namespace dccf::testing
