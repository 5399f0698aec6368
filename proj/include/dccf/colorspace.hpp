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
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "dccf/image.hpp"
#include "dccf/jet.hpp"
#include "dccf/linalg.hpp"

namespace dccf {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double kSmoothValueStd = 1.5;
inline constexpr int kSmoothValueKernel = 5;
inline constexpr double kSmoothHueValue = 0.8;
inline constexpr double kSmoothHueSaturation = 0.5;

/// Planes of an HSV image: hue in radians [0, 2π), saturation and value in [0,1].
struct HsvImage {
  PlaneImage h;
  PlaneImage s;
  PlaneImage v;

  int width() const { return v.width; }
  int height() const { return v.height; }
};

// ---------------------------------------------------------------------------
// Per-pixel kernels. Templated so the same code yields values (double) and
// exact Jacobians (Jet<N>).
// ---------------------------------------------------------------------------

template <class T>
T clamp01_t(const T& x) {
  if (x < 0.0) return T(0.0);
  if (x > 1.0) return T(1.0);
  return x;
}

template <class T>
const T& max_t(const T& a, const T& b) {
  return (b > a) ? b : a;
}

template <class T>
const T& min_t(const T& a, const T& b) {
  return (b < a) ? b : a;
}

/// Standard hexcone conversion. Gray pixels get H = 0, black pixels S = 0.
template <class T>
std::array<T, 3> rgb_to_hsv_px(const T& r, const T& g, const T& b) {
  const T& cmax = max_t(max_t(r, g), b);
  const T& cmin = min_t(min_t(r, g), b);
  const T d = cmax - cmin;
  const T s = (cmax > 0.0) ? T(d / cmax) : T(0.0);
  T h(0.0);
  if (d > 0.0) {
    T sector;
    if (!(g > r) && !(b > r)) {
      sector = (g - b) / d;
      if (sector < 0.0) sector = sector + 6.0;
    } else if (!(b > g)) {
      sector = (b - r) / d + 2.0;
    } else {
      sector = (r - g) / d + 4.0;
    }
    h = sector * (kPi / 3.0);
    if (h >= kTwoPi) h = h - kTwoPi;
  }
  return {h, s, cmax};
}

template <class T>
std::array<T, 3> hsv_to_rgb_px(const T& h, const T& s, const T& v) {
  T hh = h / (kPi / 3.0);
  const double wrap = std::floor(primal(hh) / 6.0);
  hh = hh - 6.0 * wrap;
  int sector = static_cast<int>(std::floor(primal(hh)));
  if (sector > 5) sector = 5;
  if (sector < 0) sector = 0;
  const T f = hh - static_cast<double>(sector);
  const T p = v * (1.0 - s);
  const T q = v * (1.0 - s * f);
  const T t = v * (1.0 - s * (1.0 - f));
  switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

inline Vec3 rgb_to_hsv_px(const Vec3& c) {
  const auto r = rgb_to_hsv_px(c[0], c[1], c[2]);
  return {r[0], r[1], r[2]};
}

inline Vec3 hsv_to_rgb_px(const Vec3& c) {
  const auto r = hsv_to_rgb_px(c[0], c[1], c[2]);
  return {r[0], r[1], r[2]};
}

namespace detail {

template <class F>
Mat3 jacobian3(F&& f, const Vec3& x, Vec3* value) {
  using J = Jet<3>;
  const std::array<J, 3> out = f(J(x[0], 0), J(x[1], 1), J(x[2], 2));
  Mat3 m{};
  for (int i = 0; i < 3; ++i) {
    if (value) (*value)[i] = out[i].a;
    for (int j = 0; j < 3; ++j) m[i][j] = out[i].v[j];
  }
  return m;
}

}  // namespace detail

/// d(h,s,v)/d(r,g,b); subgradient 0 at branch ties.
inline Mat3 rgb_to_hsv_jacobian(const Vec3& rgb, Vec3* hsv = nullptr) {
  return detail::jacobian3([](const auto& r, const auto& g, const auto& b) { return rgb_to_hsv_px(r, g, b); }, rgb,
                           hsv);
}

/// d(r,g,b)/d(h,s,v).
inline Mat3 hsv_to_rgb_jacobian(const Vec3& hsv, Vec3* rgb = nullptr) {
  return detail::jacobian3([](const auto& h, const auto& s, const auto& v) { return hsv_to_rgb_px(h, s, v); }, hsv,
                           rgb);
}

// ---------------------------------------------------------------------------
// Whole-image conversions.
// ---------------------------------------------------------------------------

inline HsvImage rgb_to_hsv(const RgbImage& img) {
  HsvImage out{PlaneImage(img.width, img.height), PlaneImage(img.width, img.height),
               PlaneImage(img.width, img.height)};
  for (std::size_t i = 0; i < img.pixels(); ++i) {
    const Vec3 hsv = rgb_to_hsv_px(img.pixel(i));
    out.h.data[i] = hsv[0];
    out.s.data[i] = hsv[1];
    out.v.data[i] = hsv[2];
  }
  return out;
}

inline RgbImage hsv_to_rgb(const HsvImage& img) {
  require_same_size(img.h, img.s, "hsv_to_rgb");
  require_same_size(img.h, img.v, "hsv_to_rgb");
  RgbImage out(img.v.width, img.v.height);
  for (std::size_t i = 0; i < out.pixels(); ++i) {
    out.set_pixel(i, hsv_to_rgb_px(Vec3{img.h.data[i], img.s.data[i], img.v.data[i]}));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gaussian blur (separable, clamp-to-edge) and its adjoint.
// ---------------------------------------------------------------------------

inline std::vector<double> gaussian_kernel(double std_dev, int size) {
  if (size < 1 || size % 2 == 0) throw std::invalid_argument("gaussian kernel size must be odd and positive");
  if (!(std_dev > 0.0)) throw std::invalid_argument("gaussian std must be positive");
  const int r = size / 2;
  std::vector<double> k(size);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-(i * i) / (2.0 * std_dev * std_dev));
    sum += k[i + r];
  }
  for (double& w : k) w /= sum;
  return k;
}

namespace detail {

// One separable pass. `adjoint` scatters instead of gathers, which is the
// transpose of the clamp-to-edge convolution.
inline PlaneImage convolve_pass(const PlaneImage& p, const std::vector<double>& k, bool horizontal, bool adjoint) {
  const int r = static_cast<int>(k.size()) / 2;
  PlaneImage out(p.width, p.height, 0.0);
  const int n = horizontal ? p.width : p.height;
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      const int pos = horizontal ? x : y;
      for (int i = -r; i <= r; ++i) {
        const int q = std::clamp(pos + i, 0, n - 1);
        const int sx = horizontal ? q : x;
        const int sy = horizontal ? y : q;
        if (adjoint) {
          out.at(sx, sy) += k[i + r] * p.at(x, y);
        } else {
          out.at(x, y) += k[i + r] * p.at(sx, sy);
        }
      }
    }
  }
  return out;
}

}  // namespace detail

inline PlaneImage gaussian_blur(const PlaneImage& p, double std_dev, int size) {
  const auto k = gaussian_kernel(std_dev, size);
  return detail::convolve_pass(detail::convolve_pass(p, k, true, false), k, false, false);
}

/// Transpose of gaussian_blur as a linear map; differs from the blur itself only near borders.
inline PlaneImage gaussian_blur_adjoint(const PlaneImage& p, double std_dev, int size) {
  const auto k = gaussian_kernel(std_dev, size);
  return detail::convolve_pass(detail::convolve_pass(p, k, false, true), k, true, true);
}

// ---------------------------------------------------------------------------
// Smoothed supervision maps.
// ---------------------------------------------------------------------------

inline PlaneImage value_plane(const RgbImage& img) {
  PlaneImage v(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels(); ++i) {
    v.data[i] = std::max({img.data[3 * i], img.data[3 * i + 1], img.data[3 * i + 2]});
  }
  return v;
}

inline PlaneImage smooth_value_map(const RgbImage& img) {
  return gaussian_blur(value_plane(img), kSmoothValueStd, kSmoothValueKernel);
}

/// Regions visited by the selective-color pass, in application order.
enum class ColorRegion { kRed, kGreen, kBlue, kCyan, kMagenta, kYellow, kBlack, kWhite, kNeutral };

inline constexpr std::array<ColorRegion, 9> kSelectiveColorPass = {
    ColorRegion::kRed,  ColorRegion::kGreen,   ColorRegion::kBlue,  ColorRegion::kCyan,   ColorRegion::kMagenta,
    ColorRegion::kYellow, ColorRegion::kBlack, ColorRegion::kWhite, ColorRegion::kNeutral};

namespace detail {

template <class T>
T smoothstep(double e0, double e1, const T& x) {
  T t = (x - e0) / (e1 - e0);
  t = clamp01_t(t);
  return t * t * (3.0 - 2.0 * t);
}

// Membership of a hue in the 60°-wide sector around `center`: cos² window,
// adjacent sectors sum to one.
template <class T>
T hue_sector_weight(const T& h, double center) {
  using std::cos;
  T d = h - center;
  if (d < 0.0) d = -d;
  if (d > kPi) d = kTwoPi - d;
  if (!(d < kPi / 3.0)) return T(0.0);
  const T c = cos(d * 1.5);
  return c * c;
}

}  // namespace detail

/// Soft membership of a pixel (given as h,s,v) in a selective-color region.
template <class T>
T region_weight(ColorRegion region, const std::array<T, 3>& hsv) {
  const T& h = hsv[0];
  const T& s = hsv[1];
  const T& v = hsv[2];
  auto low_s = [&] { return 1.0 - detail::smoothstep(0.05, 0.15, s); };
  auto dark = [&] { return 1.0 - detail::smoothstep(0.20, 0.30, v); };
  auto bright = [&] { return detail::smoothstep(0.70, 0.80, v); };
  switch (region) {
    case ColorRegion::kRed: return detail::hue_sector_weight(h, 0.0) * s;
    case ColorRegion::kYellow: return detail::hue_sector_weight(h, kPi / 3.0) * s;
    case ColorRegion::kGreen: return detail::hue_sector_weight(h, 2.0 * kPi / 3.0) * s;
    case ColorRegion::kCyan: return detail::hue_sector_weight(h, kPi) * s;
    case ColorRegion::kBlue: return detail::hue_sector_weight(h, 4.0 * kPi / 3.0) * s;
    case ColorRegion::kMagenta: return detail::hue_sector_weight(h, 5.0 * kPi / 3.0) * s;
    case ColorRegion::kBlack: return dark();
    case ColorRegion::kWhite: return bright() * low_s();
    case ColorRegion::kNeutral: return low_s() * (1.0 - dark()) * (1.0 - bright());
  }
  return T(0.0);
}

/// Gray-level saturation surrogate for one pixel. Nine selective-color steps
/// run in sequence, each weighted by the current pixel's membership in its
/// region: colored regions at -100% (lighten toward white), blacks, whites and
/// neutrals at +100% (darken). A step with strength a = sigma * w maps every
/// channel to clamp01(x - a * (1 - x)). Returns the channel mean, so saturated
/// pixels come out light and gray ones dark.
template <class T>
T smooth_saturation_px(const T& r, const T& g, const T& b) {
  std::array<T, 3> x = {r, g, b};
  for (ColorRegion region : kSelectiveColorPass) {
    const double sigma = (region == ColorRegion::kBlack || region == ColorRegion::kWhite ||
                          region == ColorRegion::kNeutral)
                             ? 1.0
                             : -1.0;
    const auto hsv = rgb_to_hsv_px(x[0], x[1], x[2]);
    const T w = region_weight(region, hsv);
    if (!(w > 0.0)) continue;
    const T amount = w * sigma;
    for (auto& c : x) c = clamp01_t(c - amount * (1.0 - c));
  }
  return (x[0] + x[1] + x[2]) / 3.0;
}

/// Hue rendering with value and saturation pinned; only H survives.
template <class T>
std::array<T, 3> smooth_hue_px(const T& r, const T& g, const T& b) {
  const auto hsv = rgb_to_hsv_px(r, g, b);
  return hsv_to_rgb_px(hsv[0], T(kSmoothHueSaturation), T(kSmoothHueValue));
}

inline PlaneImage smooth_saturation_map(const RgbImage& img) {
  PlaneImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels(); ++i) {
    out.data[i] = smooth_saturation_px(img.data[3 * i], img.data[3 * i + 1], img.data[3 * i + 2]);
  }
  return out;
}

inline RgbImage smooth_hue_map(const RgbImage& img) {
  RgbImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels(); ++i) {
    const auto c = smooth_hue_px(img.data[3 * i], img.data[3 * i + 1], img.data[3 * i + 2]);
    out.set_pixel(i, {c[0], c[1], c[2]});
  }
  return out;
}

}  // namespace dccf
