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

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "bmmpp/descriptors.hpp"
#include "bmmpp/mat2.hpp"
#include "bmmpp/model.hpp"

namespace bmmpp {

// Canonical four-parameter form of a two-state MAP with gamma > 0:
//
//   G0c = [ -zeta1  (1-a) zeta1 ]      G1c = [ a zeta1        0       ]
//         [    0      -zeta2    ]            [ (1-b) zeta2  b zeta2   ]
//
// zeta1 <= zeta2 are the eigenvalues of -G0 and a, b are probabilities.
// The map {zeta1, zeta2, a, b} <-> {mu1, mu2, mu3, rhoT(1)} is one-to-one
// on the feasible region, which is what makes moment matching well posed.
struct CanonicalMap2 {
  double zeta1 = 0.0;
  double zeta2 = 0.0;
  double a = 0.0;
  double b = 0.0;

  Mat2 g0() const {
    return {{{-zeta1, (1.0 - a) * zeta1}, {0.0, -zeta2}}};
  }
  Mat2 g1() const {
    return {{{a * zeta1, 0.0}, {(1.0 - b) * zeta2, b * zeta2}}};
  }
};

// Inter-event moments of a general two-state MAP {G0, G1}; used to evaluate
// canonical forms (whose G1 is not diagonal) and to test representation
// equivalence.
struct Map2Moments {
  double mu1 = 0.0, mu2 = 0.0, mu3 = 0.0;
  double rhoT1 = 0.0;
  double gamma = 0.0;
};

inline Map2Moments map2_moments(const Mat2 &g0, const Mat2 &g1) {
  const Mat2 inv = (g0 * -1.0).inverse();
  const Mat2 pstar = inv * g1;
  const Vec2 phi = stationary_of_stochastic(pstar);
  Map2Moments mm;
  Vec2 v = phi * inv;
  mm.mu1 = v.sum();
  v = v * inv;
  mm.mu2 = 2.0 * v.sum();
  v = v * inv;
  mm.mu3 = 6.0 * v.sum();
  mm.gamma = pstar.trace() - 1.0;
  const double var = mm.mu2 - mm.mu1 * mm.mu1;
  mm.rhoT1 = (var > 0.0)
                 ? mm.gamma * (mm.mu2 - 2.0 * mm.mu1 * mm.mu1) / (2.0 * var)
                 : 0.0;
  return mm;
}

inline Map2Moments canonical_moments(const CanonicalMap2 &c) {
  return map2_moments(c.g0(), c.g1());
}

// MMPP_2 -> canonical form, by the similarity transform A G A^{-1} with
// A e = e.  The states are reordered internally so that x + y >= r + u,
// which makes the output invariant under state permutation of the input.
inline CanonicalMap2 mmpp_to_canonical(const MmppModel &mmpp) {
  BmmppModel as_b = normalize_state_order(mmpp.as_bmmpp());
  if (!as_b.irreducible())
    throw Error("mmpp_to_canonical", "reducible MMPP has no canonical form here");
  const double x = as_b.x(), y = as_b.y(), r = as_b.r(), u = as_b.u();
  const double s = std::sqrt((u - x) * (u - x) + 4.0 * r * y);
  const double den = x + 2.0 * y - u + s;
  if (std::fabs(den) <= 1e-14 * (std::fabs(x) + std::fabs(u) + 2.0 * y + s))
    throw Error("mmpp_to_canonical", "degenerate transform (zero denominator)");
  const double ratio = (x - 2.0 * r - u - s) / den;

  CanonicalMap2 c;
  c.zeta1 = -(x - y * ratio);
  c.zeta2 = -(u + y * ratio);
  if (!(c.zeta1 > 0.0) || !(c.zeta2 > 0.0))
    throw Error("mmpp_to_canonical", "nonpositive canonical rate");
  c.a = (-x - y) / c.zeta1;
  c.b = (-r - u) / c.zeta2;
  const double tol = 1e-9;
  if (c.a < -tol || c.a > 1.0 + tol || c.b < -tol || c.b > 1.0 + tol)
    throw Error("mmpp_to_canonical", "canonical probabilities outside [0,1]");
  c.a = std::min(1.0, std::max(0.0, c.a));
  c.b = std::min(1.0, std::max(0.0, c.b));
  return c;
}

// Canonical form -> MMPP_2.  Requires a zeta1 != b zeta2 (the two states'
// event rates); equality is a structural singularity of the inverse map.
inline MmppModel canonical_to_mmpp(const CanonicalMap2 &c) {
  const double z1 = c.zeta1, z2 = c.zeta2, a = c.a, b = c.b;
  const double den = a * z1 - b * z2;
  if (std::fabs(den) <= 1e-13 * (a * z1 + b * z2 + 1e-300))
    throw Error("canonical_to_mmpp",
                "degenerate input: a*zeta1 == b*zeta2 (balanced event rates)");
  Mat2 g0;
  g0(0, 0) = (z1 * z2 - a * z1 * z1 - a * z1 * z2 + a * b * z1 * z2) / den;
  g0(0, 1) = (-a * a * z1 * z1 + a * z1 * z1 + a * z1 * z2 - z1 * z2) / den;
  g0(1, 0) = (z1 - b * z2) * (z2 - b * z2) / den;
  g0(1, 1) = (-z1 * z2 + b * z2 * z2 + b * z1 * z2 - a * b * z1 * z2) / den;
  // Rounding can leave tiny negative silent rates; clamp them.
  for (int i = 0; i < 2; ++i) {
    const int j = 1 - i;
    if (g0(i, j) < 0.0 && g0(i, j) > -1e-10 * (z1 + z2)) g0(i, j) = 0.0;
  }
  if (!(g0(0, 0) < 0.0) || !(g0(1, 1) < 0.0) || g0(0, 1) < 0.0 || g0(1, 0) < 0.0)
    throw Error("canonical_to_mmpp", "canonical point maps outside the MMPP class");
  // The MMPP class requires G1 = -rowsum(G0) exactly; a*zeta1 and b*zeta2
  // equal the row sums up to rounding, so close the rows instead.
  const Vec2 rows = g0.row_sums();
  if (std::fabs(-rows[0] - a * z1) > 1e-8 * (z1 + z2) ||
      std::fabs(-rows[1] - b * z2) > 1e-8 * (z1 + z2))
    throw Error("canonical_to_mmpp", "inconsistent event rates after transform");
  MmppModel m;
  m.g0 = g0;
  m.g1 = Vec2{{-rows[0], -rows[1]}};
  return m;
}

enum class CanonicalKind {
  Regular,     // gamma > 0, interior point
  RenewalPh,   // gamma = 0: order-2 renewal point (b = 0)
  Poisson,     // exponential moments: unique Poisson point
};

struct CanonicalInversion {
  std::optional<CanonicalMap2> value;
  CanonicalKind kind = CanonicalKind::Regular;
  // First violated feasibility constraint when value is empty.
  std::string violation;
};

namespace detail {

// Newton polish of the canonical parameters against the four target moments.
// The closed-form inversion is exact up to conditioning; a few damped Newton
// steps push the residual to rounding level.
inline void polish_canonical(CanonicalMap2 &c, double mu1, double mu2,
                             double mu3, double rhoT1) {
  const double rho_scale = std::max(std::fabs(rhoT1), 1e-3);
  auto residual = [&](const CanonicalMap2 &p, double out[4]) -> double {
    Map2Moments mm = canonical_moments(p);
    out[0] = (mm.mu1 - mu1) / mu1;
    out[1] = (mm.mu2 - mu2) / mu2;
    out[2] = (mm.mu3 - mu3) / mu3;
    out[3] = (mm.rhoT1 - rhoT1) / rho_scale;
    double n = 0.0;
    for (int i = 0; i < 4; ++i) n += out[i] * out[i];
    return n;
  };
  double f[4];
  double best = residual(c, f);
  for (int iter = 0; iter < 25 && best > 1e-28; ++iter) {
    // Finite-difference Jacobian in (zeta1, zeta2, a, b).
    double par[4] = {c.zeta1, c.zeta2, c.a, c.b};
    double jac[4][4];
    for (int j = 0; j < 4; ++j) {
      const double h = 1e-7 * (std::fabs(par[j]) + 1e-7);
      CanonicalMap2 cp = c;
      double *slot = (j == 0) ? &cp.zeta1 : (j == 1) ? &cp.zeta2
                     : (j == 2) ? &cp.a : &cp.b;
      *slot += h;
      double fp[4];
      try {
        residual(cp, fp);
      } catch (const std::exception &) {
        for (int i = 0; i < 4; ++i) fp[i] = f[i];
      }
      for (int i = 0; i < 4; ++i) jac[i][j] = (fp[i] - f[i]) / h;
    }
    // Solve J d = -f by Gaussian elimination with partial pivoting.
    double aug[4][5];
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) aug[i][j] = jac[i][j];
      aug[i][4] = -f[i];
    }
    bool singular = false;
    for (int col = 0; col < 4; ++col) {
      int piv = col;
      for (int row = col + 1; row < 4; ++row)
        if (std::fabs(aug[row][col]) > std::fabs(aug[piv][col])) piv = row;
      if (std::fabs(aug[piv][col]) < 1e-300) { singular = true; break; }
      if (piv != col)
        for (int j = col; j < 5; ++j) std::swap(aug[piv][j], aug[col][j]);
      for (int row = 0; row < 4; ++row) {
        if (row == col) continue;
        const double fac = aug[row][col] / aug[col][col];
        for (int j = col; j < 5; ++j) aug[row][j] -= fac * aug[col][j];
      }
    }
    if (singular) break;
    double step[4];
    for (int i = 0; i < 4; ++i) step[i] = aug[i][4] / aug[i][i];
    // Damped update, keeping the point inside the feasible box.
    double damp = 1.0;
    bool improved = false;
    for (int half = 0; half < 8 && !improved; ++half, damp *= 0.5) {
      CanonicalMap2 cand = c;
      cand.zeta1 = par[0] + damp * step[0];
      cand.zeta2 = par[1] + damp * step[1];
      cand.a = std::min(1.0, std::max(1e-14, par[2] + damp * step[2]));
      cand.b = std::min(1.0, std::max(0.0, par[3] + damp * step[3]));
      if (!(cand.zeta1 > 0.0) || !(cand.zeta2 > 0.0)) continue;
      double fc[4];
      double n;
      try {
        n = residual(cand, fc);
      } catch (const std::exception &) {
        continue;
      }
      if (n < best) {
        c = cand;
        best = n;
        for (int i = 0; i < 4; ++i) f[i] = fc[i];
        improved = true;
      }
    }
    if (!improved) break;
  }
}

}  // namespace detail

// Inter-event moments of the MMPP with silent rates (x, y, r, u); event
// rates close the rows.  Throws when the parameters leave the class.
inline Map2Moments mmpp_inter_event_moments(double x, double y, double r, double u) {
  if (!(y > 0.0) || !(r > 0.0) || !(-x - y >= 0.0) || !(-r - u >= 0.0))
    throw Error("mmpp_moments", "parameters outside the MMPP class");
  const Mat2 g0{{{x, y}, {r, u}}};
  const Mat2 g1 = Mat2::diag(-x - y, -r - u);
  return map2_moments(g0, g1);
}

namespace detail {

// Newton refinement of the silent rates (x, y, r, u) against the four
// target inter-event moments.  Used after the closed-form reconstruction:
// near the class boundary the canonical algebra loses a few digits, and the
// acceptance tolerances on recovered matrices are tight.
inline void polish_mmpp(Mat2 &g0, double mu1, double mu2, double mu3,
                        double rhoT1) {
  const double rho_scale = std::max(std::fabs(rhoT1), 1e-3);
  double par[4] = {g0(0, 0), g0(0, 1), g0(1, 0), g0(1, 1)};
  auto residual = [&](const double p[4], double out[4]) -> double {
    Map2Moments mm = mmpp_inter_event_moments(p[0], p[1], p[2], p[3]);
    out[0] = (mm.mu1 - mu1) / mu1;
    out[1] = (mm.mu2 - mu2) / mu2;
    out[2] = (mm.mu3 - mu3) / mu3;
    out[3] = (mm.rhoT1 - rhoT1) / rho_scale;
    double n = 0.0;
    for (int i = 0; i < 4; ++i) n += out[i] * out[i];
    return n;
  };
  double f[4];
  double best;
  try {
    best = residual(par, f);
  } catch (const std::exception &) {
    return;
  }
  for (int iter = 0; iter < 30 && best > 1e-28; ++iter) {
    double jac[4][4];
    for (int j = 0; j < 4; ++j) {
      double pp[4] = {par[0], par[1], par[2], par[3]};
      const double h = 1e-7 * (std::fabs(par[j]) + 1e-9);
      pp[j] += h;
      double fp[4];
      try {
        residual(pp, fp);
      } catch (const std::exception &) {
        for (int i = 0; i < 4; ++i) fp[i] = f[i];
      }
      for (int i = 0; i < 4; ++i) jac[i][j] = (fp[i] - f[i]) / h;
    }
    double aug[4][5];
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) aug[i][j] = jac[i][j];
      aug[i][4] = -f[i];
    }
    bool singular = false;
    for (int col = 0; col < 4; ++col) {
      int piv = col;
      for (int row = col + 1; row < 4; ++row)
        if (std::fabs(aug[row][col]) > std::fabs(aug[piv][col])) piv = row;
      if (std::fabs(aug[piv][col]) < 1e-300) { singular = true; break; }
      if (piv != col)
        for (int j = col; j < 5; ++j) std::swap(aug[piv][j], aug[col][j]);
      for (int row = 0; row < 4; ++row) {
        if (row == col) continue;
        const double fac = aug[row][col] / aug[col][col];
        for (int j = col; j < 5; ++j) aug[row][j] -= fac * aug[col][j];
      }
    }
    if (singular) break;
    double step[4];
    for (int i = 0; i < 4; ++i) step[i] = aug[i][4] / aug[i][i];
    double damp = 1.0;
    bool improved = false;
    for (int half = 0; half < 10 && !improved; ++half, damp *= 0.5) {
      double cand[4];
      for (int i = 0; i < 4; ++i) cand[i] = par[i] + damp * step[i];
      double fc[4], n;
      try {
        n = residual(cand, fc);
      } catch (const std::exception &) {
        continue;
      }
      if (n < best) {
        for (int i = 0; i < 4; ++i) { par[i] = cand[i]; f[i] = fc[i]; }
        best = n;
        improved = true;
      }
    }
    if (!improved) break;
  }
  g0 = Mat2{{{par[0], par[1]}, {par[2], par[3]}}};
}

}  // namespace detail

// Inverts {mu1, mu2, mu3, rhoT(1)} -> {zeta1, zeta2, a, b}.
//
// The marginal inter-event distribution determines (zeta1, zeta2) and the
// mixture weight of its two exponential atoms in closed form; rhoT(1) fixes
// gamma = a*b, and the weight equation reduces to a quadratic in a of which
// exactly one root lies in the feasible set.  A short Newton polish removes
// the conditioning error of the algebra.  Infeasible inputs return the first
// violated constraint instead of a value.
inline CanonicalInversion try_moments_to_canonical(double mu1, double mu2,
                                                   double mu3, double rhoT1) {
  CanonicalInversion out;
  if (!(mu1 > 0.0)) { out.violation = "mu1 <= 0"; return out; }
  const double var = mu2 - mu1 * mu1;
  if (!(var > 0.0)) { out.violation = "mu2 <= mu1^2 (no variance)"; return out; }
  if (rhoT1 < 0.0) { out.violation = "rhoT1 < 0 (outside the class)"; return out; }
  const double over = mu2 - 2.0 * mu1 * mu1;  // positive iff cv > 1

  const double exp_tol = 1e-12;
  const bool exp_m2 = std::fabs(over) <= exp_tol * mu1 * mu1;
  const bool exp_m3 = std::fabs(mu3 - 6.0 * mu1 * mu1 * mu1) <=
                      exp_tol * 6.0 * mu1 * mu1 * mu1;
  if (exp_m2 && exp_m3 && rhoT1 <= exp_tol) {
    // Exponential moments: the Poisson point.  Representation: state 1 emits
    // at rate 1/mu1 and restarts there after every event.
    CanonicalMap2 c;
    c.zeta1 = c.zeta2 = 1.0 / mu1;
    c.a = 1.0;
    c.b = 0.0;
    out.value = c;
    out.kind = CanonicalKind::Poisson;
    return out;
  }
  if (over < 0.0) { out.violation = "mu2 < 2 mu1^2 (cv < 1)"; return out; }
  if (exp_m2) { out.violation = "cv == 1 with non-exponential mu3"; return out; }

  const double gamma = rhoT1 * 2.0 * var / over;
  if (gamma >= 1.0 - 1e-12) { out.violation = "gamma >= 1"; return out; }

  // Two-atom moment problem for the marginal: M_r = c1 th1^r + (1-c1) th2^r
  // with M1 = mu1, M2 = mu2/2, M3 = mu3/6.
  const double m1 = mu1, m2 = mu2 / 2.0, m3 = mu3 / 6.0;
  const double den = m2 - m1 * m1;  // = over/2 > 0 here
  const double pcoef = (m3 - m1 * m2) / den;
  const double qcoef = (m1 * m3 - m2 * m2) / den;
  const double disc = pcoef * pcoef - 4.0 * qcoef;
  if (disc < 0.0) { out.violation = "complex marginal poles (mu3 too small)"; return out; }
  if (!(qcoef > 0.0)) { out.violation = "nonpositive marginal pole (mu3 too large)"; return out; }
  const double sq = std::sqrt(disc);
  const double th_big = 0.5 * (pcoef + sq);
  const double th_small = qcoef / th_big;  // stable smaller root
  if (!(th_small > 0.0)) { out.violation = "nonpositive marginal pole"; return out; }
  const double zeta1 = 1.0 / th_big;   // smaller rate
  const double zeta2 = 1.0 / th_small; // larger rate
  const double c1 = (th_big > th_small)
                        ? (m1 - th_small) / (th_big - th_small)
                        : 1.0;

  if (gamma <= 1e-14) {
    // Renewal case: b = 0, phi = (1, 0), weight equation is linear in a.
    CanonicalMap2 c;
    c.zeta1 = zeta1;
    c.zeta2 = zeta2;
    c.b = 0.0;
    c.a = (zeta2 - c1 * (zeta2 - zeta1)) / zeta1;
    if (c.a < -1e-9 || c.a > 1.0 + 1e-9) {
      out.violation = "renewal point has a outside [0,1]";
      return out;
    }
    c.a = std::min(1.0, std::max(0.0, c.a));
    out.value = c;
    out.kind = CanonicalKind::RenewalPh;
    return out;
  }

  // gamma > 0: solve zeta1 a^2 - (zeta2 + gamma zeta1 - kappa) a
  //            + gamma zeta2 = 0 with kappa = c1 (1-gamma)(zeta2-zeta1).
  const double kappa = c1 * (1.0 - gamma) * (zeta2 - zeta1);
  const double bq = zeta2 + gamma * zeta1 - kappa;
  const double cq = gamma * zeta2;
  double disc_a = bq * bq - 4.0 * zeta1 * cq;
  if (disc_a < 0.0 && disc_a > -1e-9 * (bq * bq + 4.0 * zeta1 * cq)) disc_a = 0.0;
  if (disc_a < 0.0) { out.violation = "no real solution for a"; return out; }
  const double sqa = std::sqrt(disc_a);
  // Stable root pair: product a+ a- = cq/zeta1.
  const double root_big = (bq + sqa) / (2.0 * zeta1);
  const double root_small = (root_big != 0.0) ? cq / (zeta1 * root_big) : 0.0;
  const double tol = 1e-9;
  auto feasible = [&](double a) {
    if (a < gamma - tol || a > 1.0 + tol) return false;
    const double b = gamma / a;
    return b >= -tol && b <= 1.0 + tol;
  };
  double a_pick;
  if (feasible(root_small)) a_pick = root_small;
  else if (feasible(root_big)) a_pick = root_big;
  else { out.violation = "a outside [gamma, 1]"; return out; }

  CanonicalMap2 c;
  c.zeta1 = zeta1;
  c.zeta2 = zeta2;
  c.a = std::min(1.0, std::max(gamma, a_pick));
  c.b = std::min(1.0, gamma / c.a);
  detail::polish_canonical(c, mu1, mu2, mu3, rhoT1);
  out.value = c;
  out.kind = CanonicalKind::Regular;
  return out;
}

inline CanonicalMap2 moments_to_canonical(double mu1, double mu2, double mu3,
                                          double rhoT1) {
  CanonicalInversion inv = try_moments_to_canonical(mu1, mu2, mu3, rhoT1);
  if (!inv.value)
    throw Error("moments_to_canonical", "infeasible moments: " + inv.violation);
  return *inv.value;
}

// Closed-form batch split: given D0 and target (beta1, eta) of a
// BMMPP_2(2), recover D_1 = diag(w, q).  D_2 then closes the rows.
struct BatchSplit {
  double w = 0.0;
  double q = 0.0;
};

inline BatchSplit solve_batch_split(const Mat2 &d0, double beta1, double eta) {
  const double x = d0(0, 0), y = d0(0, 1), r = d0(1, 0), u = d0(1, 1);
  if (!(y > 0.0) || !(r > 0.0))
    throw Error("solve_batch_split", "requires irreducible D0 (y, r > 0)");
  const double dd = r + u - x - y;  // delta1 - delta2
  const double scale = std::fabs(x) + std::fabs(u) + y + r;
  if (std::fabs(dd) <= 1e-12 * scale)
    throw Error("solve_batch_split", "balanced-rates singularity (x+y == r+u)");
  const double A = r * x + 2.0 * r * y + y * u;
  const double B = x * u - r * y;
  const double q = (A * (B * eta - (y - u) * (beta1 - 2.0)) + B * (2.0 * r + 2.0 * y)) /
                   (y * dd);
  const double w = (A * ((beta1 - 2.0) * (r - x) - B * eta) - B * (2.0 * r + 2.0 * y)) /
                   (r * dd);
  BatchSplit out{w, q};
  const double clamp_tol = 1e-9;
  if (out.w < 0.0 && out.w > -clamp_tol) out.w = 0.0;
  if (out.q < 0.0 && out.q > -clamp_tol) out.q = 0.0;
  const double budget1 = -x - y;
  const double budget2 = -r - u;
  if (out.w < 0.0 || out.q < 0.0 || out.w > budget1 + clamp_tol ||
      out.q > budget2 + clamp_tol)
    throw Error("solve_batch_split",
                "infeasible target moments: split (w, q) = (" +
                    detail::fmt(out.w) + ", " + detail::fmt(out.q) +
                    ") outside row budgets");
  out.w = std::min(out.w, budget1);
  out.q = std::min(out.q, budget2);
  return out;
}

// Full reconstruction of a BMMPP_2(K) from its characterizing moment set:
// D0 from the four inter-event moments, then one closed-form batch split per
// sub-process target pair, with D_K closing the rows.
inline BmmppModel moments_to_model(const MomentSet &ms, int K) {
  if (K < 1) throw Error("moments_to_model", "K must be >= 1");
  if (ms.K() != K)
    throw Error("moments_to_model",
                "moment set describes K = " + std::to_string(ms.K()) +
                    ", requested K = " + std::to_string(K));

  CanonicalInversion inv = try_moments_to_canonical(ms.mu1, ms.mu2, ms.mu3, ms.rhoT1);
  if (!inv.value)
    throw Error("moments_to_model[canonical]", "infeasible moments: " + inv.violation);
  MmppModel mmpp;
  try {
    mmpp = canonical_to_mmpp(*inv.value);
  } catch (const Error &e) {
    throw Error("moments_to_model[mmpp]", e.what());
  }
  BmmppModel base = normalize_state_order(mmpp.as_bmmpp());
  if (inv.kind == CanonicalKind::Regular) {
    Mat2 g0 = base.d0;
    detail::polish_mmpp(g0, ms.mu1, ms.mu2, ms.mu3, ms.rhoT1);
    base = normalize_state_order(MmppModel{g0, Vec2{{-g0.row_sums()[0], -g0.row_sums()[1]}}}.as_bmmpp());
  }

  const double delta1 = -base.x() - base.y();
  const double delta2 = -base.r() - base.u();
  BmmppModel model;
  model.d0 = base.d0;
  model.dk.assign(static_cast<std::size_t>(K), Vec2{{0.0, 0.0}});
  if (K == 1) {
    model.dk[0] = Vec2{{delta1, delta2}};
    return clamp_closure(model);
  }
  double used1 = 0.0, used2 = 0.0;
  for (int i = 1; i <= K - 1; ++i) {
    BatchSplit split;
    try {
      split = solve_batch_split(model.d0, ms.beta1_sub[static_cast<std::size_t>(i - 1)],
                                ms.eta_sub[static_cast<std::size_t>(i - 1)]);
    } catch (const Error &e) {
      throw Error("moments_to_model[split k=" + std::to_string(i) + "]", e.what());
    }
    model.dk[static_cast<std::size_t>(i - 1)] = Vec2{{split.w, split.q}};
    used1 += split.w;
    used2 += split.q;
  }
  model.dk[static_cast<std::size_t>(K - 1)] =
      Vec2{{delta1 - used1, delta2 - used2}};
  model = clamp_closure(model);
  ValidationReport rep = validate(model);
  if (!rep.ok())
    throw Error("moments_to_model[closure]",
                "reconstructed model invalid:\n" + rep.to_string());
  return model;
}

}  // namespace bmmpp
