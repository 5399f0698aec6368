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
#include <span>
#include <stdexcept>
#include <vector>

#include "dccf/filters.hpp"

namespace dccf {

/// Bilinear sampling position of one output pixel along one axis.
struct AxisTap {
  int i0 = 0;
  int i1 = 0;
  double f = 0.0;
};

/// Cell-center convention: pixel x samples grid coordinate (x + 0.5)·N/W − 0.5, clamped at the edges.
inline std::vector<AxisTap> axis_taps(int cells, int pixels) {
  std::vector<AxisTap> taps(pixels);
  const double scale = static_cast<double>(cells) / pixels;
  for (int x = 0; x < pixels; ++x) {
    const double g = (x + 0.5) * scale - 0.5;
    const int i = static_cast<int>(std::floor(g));
    taps[x] = {std::clamp(i, 0, cells - 1), std::clamp(i + 1, 0, cells - 1), g - i};
  }
  return taps;
}

inline ParamGrid upsample_grid(const ParamGrid& g, int width, int height) {
  if (width < 1 || height < 1) throw std::invalid_argument("upsample_filter_map: target must be at least 1x1");
  if (g.width < 1 || g.height < 1) throw std::invalid_argument("upsample_filter_map: empty grid");
  const auto tx = axis_taps(g.width, width);
  const auto ty = axis_taps(g.height, height);
  ParamGrid out(width, height, g.channels);
  for (int c = 0; c < g.channels; ++c) {
    for (int y = 0; y < height; ++y) {
      const AxisTap& ay = ty[y];
      for (int x = 0; x < width; ++x) {
        const AxisTap& ax = tx[x];
        const double a = g.at(c, ax.i0, ay.i0) + ax.f * (g.at(c, ax.i1, ay.i0) - g.at(c, ax.i0, ay.i0));
        const double b = g.at(c, ax.i0, ay.i1) + ax.f * (g.at(c, ax.i1, ay.i1) - g.at(c, ax.i0, ay.i1));
        out.at(c, x, y) = a + ay.f * (b - a);
      }
    }
  }
  return out;
}

template <class Map>
Map upsample_filter_map(const Map& map, int width, int height) {
  return Map{upsample_grid(map.params, width, height)};
}

inline FilterStack upsample_stack(const FilterStack& s, int width, int height) {
  return FilterStack{upsample_filter_map(s.val, width, height), upsample_filter_map(s.sat, width, height),
                     upsample_filter_map(s.hue, width, height), upsample_filter_map(s.attn, width, height), s.order};
}

/// Offsets of each filter's parameters inside one pixel's flat parameter vector.
struct ParamLayout {
  int knots = kDefaultKnots;
  int val = 0;
  int sat = 0;
  int hue = 0;
  int attn = 0;
  int total = 0;

  explicit ParamLayout(int m) : knots(m), val(0), sat(m + 1), hue(m + 2), attn(m + 14), total(m + 27) {}
};

/// Streams per-pixel parameters of a whole stack at an arbitrary output
/// resolution without materializing full-resolution maps, and scatters
/// per-pixel gradients back onto the grid (the exact adjoint).
class StackSampler {
 public:
  StackSampler(const FilterStack& stack, int width, int height)
      : stack_(&stack),
        layout_(stack.knots()),
        width_(width),
        height_(height),
        tx_(axis_taps(stack.grid_width(), width)),
        ty_(axis_taps(stack.grid_height(), height)),
        column_(stack.grid_width()) {}

  const ParamLayout& layout() const { return layout_; }
  int width() const { return width_; }
  int height() const { return height_; }

  /// Fills out[x * layout().total + k] for every pixel x in row y.
  void sample_row(int y, std::span<double> out) {
    const AxisTap& ay = ty_[y];
    int offset = 0;
    for_each_grid(*stack_, [&](const char*, const ParamGrid& g) {
      for (int c = 0; c < g.channels; ++c) {
        for (int gx = 0; gx < g.width; ++gx) {
          const double a = g.at(c, gx, ay.i0);
          column_[gx] = a + ay.f * (g.at(c, gx, ay.i1) - a);
        }
        const int k = offset + c;
        for (int x = 0; x < width_; ++x) {
          const AxisTap& ax = tx_[x];
          const double a = column_[ax.i0];
          out[static_cast<std::size_t>(x) * layout_.total + k] = a + ax.f * (column_[ax.i1] - a);
        }
      }
      offset += g.channels;
    });
  }

  /// Adds the grid-space gradient of row y's per-pixel gradients into `acc`.
  void scatter_row(int y, std::span<const double> grad, FilterStack& acc) {
    const AxisTap& ay = ty_[y];
    int offset = 0;
    for_each_grid(acc, [&](const char*, ParamGrid& g) {
      for (int c = 0; c < g.channels; ++c) {
        std::fill(column_.begin(), column_.end(), 0.0);
        const int k = offset + c;
        for (int x = 0; x < width_; ++x) {
          const AxisTap& ax = tx_[x];
          const double v = grad[static_cast<std::size_t>(x) * layout_.total + k];
          column_[ax.i0] += (1.0 - ax.f) * v;
          column_[ax.i1] += ax.f * v;
        }
        for (int gx = 0; gx < g.width; ++gx) {
          g.at(c, gx, ay.i0) += (1.0 - ay.f) * column_[gx];
          g.at(c, gx, ay.i1) += ay.f * column_[gx];
        }
      }
      offset += g.channels;
    });
  }

 private:
  const FilterStack* stack_;
  ParamLayout layout_;
  int width_;
  int height_;
  std::vector<AxisTap> tx_;
  std::vector<AxisTap> ty_;
  std::vector<double> column_;
};

}  // namespace dccf
