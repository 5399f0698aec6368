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
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dccf/error.hpp"

namespace dccf {

using Vec3 = std::array<double, 3>;

/// Single-channel float plane, row-major.
struct PlaneImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  PlaneImage() = default;
  PlaneImage(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  std::size_t size() const { return data.size(); }
  double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

  bool operator==(const PlaneImage&) const = default;
};

/// Foreground mask; values in [0,1], hard masks use {0,1}.
using Mask = PlaneImage;

/// Interleaved RGB image with channel values nominally in [0,1], row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  RgbImage() = default;
  RgbImage(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }

  Vec3 pixel(std::size_t i) const { return {data[3 * i], data[3 * i + 1], data[3 * i + 2]}; }
  Vec3 pixel(int x, int y) const { return pixel(static_cast<std::size_t>(y) * width + x); }

  void set_pixel(std::size_t i, const Vec3& c) {
    data[3 * i] = c[0];
    data[3 * i + 1] = c[1];
    data[3 * i + 2] = c[2];
  }
  void set_pixel(int x, int y, const Vec3& c) { set_pixel(static_cast<std::size_t>(y) * width + x, c); }

  bool operator==(const RgbImage&) const = default;
};

inline double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

template <class A, class B>
bool same_size(const A& a, const B& b) {
  return a.width == b.width && a.height == b.height;
}

template <class A, class B>
void require_same_size(const A& a, const B& b, const char* what) {
  if (!same_size(a, b)) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a.width) + "x" +
                         std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                         std::to_string(b.height) + ")");
  }
}

/// True when every value is finite and inside [0,1].
inline bool is_valid(const RgbImage& img) {
  if (img.width < 0 || img.height < 0 || img.data.size() != img.pixels() * 3) return false;
  return std::all_of(img.data.begin(), img.data.end(),
                     [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; });
}

inline RgbImage filled(int w, int h, const Vec3& c) {
  RgbImage img(w, h);
  for (std::size_t i = 0; i < img.pixels(); ++i) img.set_pixel(i, c);
  return img;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("max_abs_diff: size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const RgbImage& a, const RgbImage& b) {
  require_same_size(a, b, "max_abs_diff");
  return max_abs_diff(a.data, b.data);
}

inline double max_abs_diff(const PlaneImage& a, const PlaneImage& b) {
  require_same_size(a, b, "max_abs_diff");
  return max_abs_diff(a.data, b.data);
}

/// Mean squared error over all pixels and channels.
inline double mse(const RgbImage& a, const RgbImage& b) {
  require_same_size(a, b, "mse");
  if (a.data.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.data.size());
}

/// PSNR in dB for signals with peak 1.
inline double psnr(const RgbImage& a, const RgbImage& b) {
  const double e = mse(a, b);
  if (e <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / e);
}

namespace detail {

template <int C>
std::vector<double> box_downsample(std::span<const double> src, int w, int h, int factor, int& ow, int& oh) {
  ow = (w + factor - 1) / factor;
  oh = (h + factor - 1) / factor;
  std::vector<double> out(static_cast<std::size_t>(ow) * oh * C, 0.0);
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      std::array<double, C> acc{};
      int n = 0;
      for (int y = oy * factor; y < std::min(h, (oy + 1) * factor); ++y) {
        for (int x = ox * factor; x < std::min(w, (ox + 1) * factor); ++x) {
          const std::size_t s = (static_cast<std::size_t>(y) * w + x) * C;
          for (int c = 0; c < C; ++c) acc[c] += src[s + c];
          ++n;
        }
      }
      const std::size_t d = (static_cast<std::size_t>(oy) * ow + ox) * C;
      for (int c = 0; c < C; ++c) out[d + c] = acc[c] / n;
    }
  }
  return out;
}

}  // namespace detail

/// Smallest integer box factor that brings the longer side to at most `max_side`.
inline int downsample_factor(int width, int height, int max_side) {
  const int longest = std::max(width, height);
  return std::max(1, (longest + max_side - 1) / max_side);
}

/// Area-average downsampling by an integer factor; partial border blocks average what they cover.
inline RgbImage downsample_area(const RgbImage& img, int factor) {
  if (factor <= 1) return img;
  RgbImage out;
  out.data = detail::box_downsample<3>(img.data, img.width, img.height, factor, out.width, out.height);
  return out;
}

inline PlaneImage downsample_area(const PlaneImage& img, int factor) {
  if (factor <= 1) return img;
  PlaneImage out;
  out.data = detail::box_downsample<1>(img.data, img.width, img.height, factor, out.width, out.height);
  return out;
}

/// Bilinear image resize with pixel-center alignment and clamp-to-edge sampling.
inline RgbImage resize_bilinear(const RgbImage& img, int width, int height) {
  if (width < 1 || height < 1) throw std::invalid_argument("resize_bilinear: target must be at least 1x1");
  RgbImage out(width, height);
  const double sx = static_cast<double>(img.width) / width;
  const double sy = static_cast<double>(img.height) / height;
  for (int y = 0; y < height; ++y) {
    const double gy = (y + 0.5) * sy - 0.5;
    const int y0 = static_cast<int>(std::floor(gy));
    const double fy = gy - y0;
    const int ya = std::clamp(y0, 0, img.height - 1);
    const int yb = std::clamp(y0 + 1, 0, img.height - 1);
    for (int x = 0; x < width; ++x) {
      const double gx = (x + 0.5) * sx - 0.5;
      const int x0 = static_cast<int>(std::floor(gx));
      const double fx = gx - x0;
      const int xa = std::clamp(x0, 0, img.width - 1);
      const int xb = std::clamp(x0 + 1, 0, img.width - 1);
      const Vec3 p00 = img.pixel(xa, ya), p10 = img.pixel(xb, ya);
      const Vec3 p01 = img.pixel(xa, yb), p11 = img.pixel(xb, yb);
      Vec3 c;
      for (int k = 0; k < 3; ++k) {
        const double top = p00[k] + fx * (p10[k] - p00[k]);
        const double bot = p01[k] + fx * (p11[k] - p01[k]);
        c[k] = top + fy * (bot - top);
      }
      out.set_pixel(x, y, c);
    }
  }
  return out;
}

}  // namespace dccf
