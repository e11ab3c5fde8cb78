/*
 * Copyright (c) 2026, the bmmpp2 authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bmmpp {

// Dense 2-vector and 2x2 matrix with the handful of closed-form operations
// this library needs.  Inverses, eigenvalues and matrix exponentials of 2x2
// blocks are computed from determinant/trace identities rather than general
// decompositions, so results are exact up to rounding.

struct Vec2 {
  double v[2]{0.0, 0.0};

  double &operator[](int i) { return v[i]; }
  double operator[](int i) const { return v[i]; }

  Vec2 operator+(const Vec2 &o) const { return {{v[0] + o.v[0], v[1] + o.v[1]}}; }
  Vec2 operator-(const Vec2 &o) const { return {{v[0] - o.v[0], v[1] - o.v[1]}}; }
  Vec2 operator*(double s) const { return {{v[0] * s, v[1] * s}}; }
  double sum() const { return v[0] + v[1]; }
  double dot(const Vec2 &o) const { return v[0] * o.v[0] + v[1] * o.v[1]; }
};

struct Mat2 {
  // Row-major: m[row][col].
  double m[2][2]{{0.0, 0.0}, {0.0, 0.0}};

  static Mat2 identity() { return {{{1.0, 0.0}, {0.0, 1.0}}}; }
  static Mat2 zero() { return {}; }
  static Mat2 diag(double d0, double d1) { return {{{d0, 0.0}, {0.0, d1}}}; }

  double &operator()(int r, int c) { return m[r][c]; }
  double operator()(int r, int c) const { return m[r][c]; }

  Mat2 operator+(const Mat2 &o) const {
    return {{{m[0][0] + o.m[0][0], m[0][1] + o.m[0][1]},
             {m[1][0] + o.m[1][0], m[1][1] + o.m[1][1]}}};
  }
  Mat2 operator-(const Mat2 &o) const {
    return {{{m[0][0] - o.m[0][0], m[0][1] - o.m[0][1]},
             {m[1][0] - o.m[1][0], m[1][1] - o.m[1][1]}}};
  }
  Mat2 operator*(double s) const {
    return {{{m[0][0] * s, m[0][1] * s}, {m[1][0] * s, m[1][1] * s}}};
  }
  Mat2 operator*(const Mat2 &o) const {
    return {{{m[0][0] * o.m[0][0] + m[0][1] * o.m[1][0],
              m[0][0] * o.m[0][1] + m[0][1] * o.m[1][1]},
             {m[1][0] * o.m[0][0] + m[1][1] * o.m[1][0],
              m[1][0] * o.m[0][1] + m[1][1] * o.m[1][1]}}};
  }

  double trace() const { return m[0][0] + m[1][1]; }
  double det() const { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

  Mat2 transpose() const {
    return {{{m[0][0], m[1][0]}, {m[0][1], m[1][1]}}};
  }

  double max_abs() const {
    return std::max(std::max(std::fabs(m[0][0]), std::fabs(m[0][1])),
                    std::max(std::fabs(m[1][0]), std::fabs(m[1][1])));
  }

  Mat2 inverse() const {
    const double d = det();
    if (d == 0.0) throw std::domain_error("Mat2::inverse: singular matrix");
    const double s = 1.0 / d;
    return {{{m[1][1] * s, -m[0][1] * s}, {-m[1][0] * s, m[0][0] * s}}};
  }

  // Swap both rows and columns (simultaneous state relabelling).
  Mat2 permuted() const {
    return {{{m[1][1], m[1][0]}, {m[0][1], m[0][0]}}};
  }

  Vec2 row_sums() const {
    return {{m[0][0] + m[0][1], m[1][0] + m[1][1]}};
  }
};

inline Vec2 operator*(const Vec2 &row, const Mat2 &a) {
  return {{row.v[0] * a.m[0][0] + row.v[1] * a.m[1][0],
           row.v[0] * a.m[0][1] + row.v[1] * a.m[1][1]}};
}

inline Vec2 operator*(const Mat2 &a, const Vec2 &col) {
  return {{a.m[0][0] * col.v[0] + a.m[0][1] * col.v[1],
           a.m[1][0] * col.v[0] + a.m[1][1] * col.v[1]}};
}

inline Vec2 ones2() { return {{1.0, 1.0}}; }

// Matrix power with nonnegative integer exponent.
inline Mat2 mat2_pow(Mat2 a, unsigned n) {
  Mat2 acc = Mat2::identity();
  while (n > 0) {
    if (n & 1u) acc = acc * a;
    a = a * a;
    n >>= 1u;
  }
  return acc;
}

// exp(A t) for a real 2x2 matrix whose eigenvalues are real (the only case
// arising here: subgenerators and generators have discriminant
// (a11-a22)^2 + 4 a12 a21 >= 0 when the off-diagonal product is >= 0).
inline Mat2 expm2(const Mat2 &a, double t) {
  const double tr = a.trace();
  const double disc = (a.m[0][0] - a.m[1][1]) * (a.m[0][0] - a.m[1][1]) +
                      4.0 * a.m[0][1] * a.m[1][0];
  if (disc < 0.0) throw std::domain_error("expm2: complex eigenvalues");
  const double s = std::sqrt(disc);
  const double l1 = 0.5 * (tr + s);
  const double l2 = 0.5 * (tr - s);
  const double scale = std::fabs(l1) + std::fabs(l2);
  if (s <= 1e-12 * (scale + 1.0)) {
    // Defective or near-defective: exp(At) = e^{lt}(I + t(A - lI)).
    const double l = 0.5 * tr;
    const double e = std::exp(l * t);
    Mat2 n = a - Mat2::identity() * l;
    return (Mat2::identity() + n * t) * e;
  }
  // exp(At) = e^{l1 t} (A - l2 I)/(l1-l2) + e^{l2 t} (A - l1 I)/(l2-l1).
  const double e1 = std::exp(l1 * t);
  const double e2 = std::exp(l2 * t);
  const Mat2 p1 = (a - Mat2::identity() * l2) * (1.0 / (l1 - l2));
  const Mat2 p2 = (a - Mat2::identity() * l1) * (1.0 / (l2 - l1));
  return p1 * e1 + p2 * e2;
}

// Left null vector of a 2x2 generator (zero row sums), normalized to a
// probability vector: pi Q = 0, pi e = 1.  Requires both off-diagonal
// rates positive (irreducible chain).
inline Vec2 stationary_of_generator(const Mat2 &q) {
  const double a = q.m[0][1];  // rate 1 -> 2
  const double b = q.m[1][0];  // rate 2 -> 1
  const double tot = a + b;
  if (!(a > 0.0) || !(b > 0.0) || !(tot > 0.0))
    throw std::domain_error("stationary_of_generator: reducible generator");
  return {{b / tot, a / tot}};
}

// Stationary probability vector of a 2x2 stochastic matrix.
inline Vec2 stationary_of_stochastic(const Mat2 &p) {
  const double a = p.m[0][1];  // prob 1 -> 2
  const double b = p.m[1][0];  // prob 2 -> 1
  const double tot = a + b;
  if (!(tot > 0.0))
    throw std::domain_error("stationary_of_stochastic: absorbing chain");
  return {{b / tot, a / tot}};
}

}  // namespace bmmpp
