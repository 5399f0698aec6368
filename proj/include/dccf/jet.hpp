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

namespace dccf {

// Forward-mode dual number carrying N partial derivatives. Used to obtain exact
// per-pixel Jacobians of the templated color-space kernels; comparisons look at
// the value only, so branches follow the primal computation.
template <int N>
struct Jet {
  double a = 0.0;
  std::array<double, N> v{};

  Jet() = default;
  Jet(double value) : a(value) {}  // NOLINT(google-explicit-constructor)
  Jet(double value, int k) : a(value) { v[k] = 1.0; }

  Jet& operator+=(const Jet& o) {
    a += o.a;
    for (int i = 0; i < N; ++i) v[i] += o.v[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    a -= o.a;
    for (int i = 0; i < N; ++i) v[i] -= o.v[i];
    return *this;
  }
  Jet& operator*=(const Jet& o) {
    for (int i = 0; i < N; ++i) v[i] = v[i] * o.a + a * o.v[i];
    a *= o.a;
    return *this;
  }
  Jet& operator/=(const Jet& o) {
    const double inv = 1.0 / o.a;
    a *= inv;
    for (int i = 0; i < N; ++i) v[i] = (v[i] - a * o.v[i]) * inv;
    return *this;
  }
};

template <int N> Jet<N> operator-(Jet<N> x) {
  x.a = -x.a;
  for (auto& d : x.v) d = -d;
  return x;
}
template <int N> Jet<N> operator+(Jet<N> x, const Jet<N>& y) { return x += y; }
template <int N> Jet<N> operator-(Jet<N> x, const Jet<N>& y) { return x -= y; }
template <int N> Jet<N> operator*(Jet<N> x, const Jet<N>& y) { return x *= y; }
template <int N> Jet<N> operator/(Jet<N> x, const Jet<N>& y) { return x /= y; }
template <int N> Jet<N> operator+(Jet<N> x, double y) { x.a += y; return x; }
template <int N> Jet<N> operator+(double y, Jet<N> x) { x.a += y; return x; }
template <int N> Jet<N> operator-(Jet<N> x, double y) { x.a -= y; return x; }
template <int N> Jet<N> operator-(double y, const Jet<N>& x) { return -x + y; }
template <int N> Jet<N> operator*(Jet<N> x, double y) {
  x.a *= y;
  for (auto& d : x.v) d *= y;
  return x;
}
template <int N> Jet<N> operator*(double y, Jet<N> x) { return x * y; }
template <int N> Jet<N> operator/(Jet<N> x, double y) { return x * (1.0 / y); }
template <int N> Jet<N> operator/(double y, const Jet<N>& x) { return Jet<N>(y) / x; }

template <int N> bool operator<(const Jet<N>& x, const Jet<N>& y) { return x.a < y.a; }
template <int N> bool operator>(const Jet<N>& x, const Jet<N>& y) { return x.a > y.a; }
template <int N> bool operator<=(const Jet<N>& x, const Jet<N>& y) { return x.a <= y.a; }
template <int N> bool operator>=(const Jet<N>& x, const Jet<N>& y) { return x.a >= y.a; }
template <int N> bool operator<(const Jet<N>& x, double y) { return x.a < y; }
template <int N> bool operator>(const Jet<N>& x, double y) { return x.a > y; }
template <int N> bool operator<=(const Jet<N>& x, double y) { return x.a <= y; }
template <int N> bool operator>=(const Jet<N>& x, double y) { return x.a >= y; }

template <int N> Jet<N> cos(const Jet<N>& x) {
  Jet<N> r(std::cos(x.a));
  const double d = -std::sin(x.a);
  for (int i = 0; i < N; ++i) r.v[i] = d * x.v[i];
  return r;
}

template <int N> Jet<N> sin(const Jet<N>& x) {
  Jet<N> r(std::sin(x.a));
  const double d = std::cos(x.a);
  for (int i = 0; i < N; ++i) r.v[i] = d * x.v[i];
  return r;
}

inline double primal(double x) { return x; }
template <int N> double primal(const Jet<N>& x) { return x.a; }

}  // namespace dccf
