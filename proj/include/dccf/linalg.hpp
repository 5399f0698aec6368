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

#include "dccf/image.hpp"

namespace dccf {

/// Row-major 3x3 matrix.
using Mat3 = std::array<std::array<double, 3>, 3>;

inline Mat3 identity3() { return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; }

inline Vec3 mul(const Mat3& m, const Vec3& x) {
  return {m[0][0] * x[0] + m[0][1] * x[1] + m[0][2] * x[2],
          m[1][0] * x[0] + m[1][1] * x[1] + m[1][2] * x[2],
          m[2][0] * x[0] + m[2][1] * x[1] + m[2][2] * x[2]};
}

/// mᵀ·x, the adjoint used when pulling gradients back through a Jacobian.
inline Vec3 mul_t(const Mat3& m, const Vec3& x) {
  return {m[0][0] * x[0] + m[1][0] * x[1] + m[2][0] * x[2],
          m[0][1] * x[0] + m[1][1] * x[1] + m[2][1] * x[2],
          m[0][2] * x[0] + m[1][2] * x[1] + m[2][2] * x[2]};
}

inline Mat3 mul(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
  return r;
}

inline Mat3 transpose(const Mat3& m) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = m[j][i];
  return r;
}

inline double det(const Mat3& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

/// 3x4 affine color transform stored row-major as 12 values: [R | t].
using Affine34 = std::array<double, 12>;

inline Affine34 identity_affine() { return {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0}; }

inline Vec3 apply_affine(std::span<const double> a, const Vec3& x) {
  return {a[0] * x[0] + a[1] * x[1] + a[2] * x[2] + a[3],
          a[4] * x[0] + a[5] * x[1] + a[6] * x[2] + a[7],
          a[8] * x[0] + a[9] * x[1] + a[10] * x[2] + a[11]};
}

inline Affine34 make_affine(const Mat3& r, const Vec3& t = {0, 0, 0}) {
  return {r[0][0], r[0][1], r[0][2], t[0], r[1][0], r[1][1], r[1][2], t[1], r[2][0], r[2][1], r[2][2], t[2]};
}

}  // namespace dccf
