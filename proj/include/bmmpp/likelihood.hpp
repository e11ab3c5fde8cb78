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
#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "bmmpp/descriptors.hpp"
#include "bmmpp/fit.hpp"
#include "bmmpp/mat2.hpp"
#include "bmmpp/model.hpp"
#include "bmmpp/trace.hpp"

namespace bmmpp {

struct LikelihoodValue {
  double loglik = 0.0;
  std::size_t n = 0;
  std::vector<double> log_scale;  // per-event scaling factors, log domain
};

// log of  phi * prod_i exp(D0 t_i) D_{b_i} * e, evaluated left to right with
// per-event normalization so 1e6-event traces do not underflow.
inline LikelihoodValue loglik(const BmmppModel &model, const Trace &trace) {
  require_valid(model, "loglik");
  validate_trace(trace, model.K());
  const Vec2 phi = stationary_vectors(model).phi;

  LikelihoodValue out;
  out.n = trace.size();
  out.log_scale.reserve(trace.size());
  Vec2 alpha = phi;
  double total = 0.0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    alpha = alpha * expm2(model.d0, trace.t[i]);
    const Vec2 d = model.dk[static_cast<std::size_t>(trace.b[i]) - 1];
    alpha[0] *= d[0];
    alpha[1] *= d[1];
    const double s = alpha.sum();
    if (!(s > 0.0)) {
      out.loglik = -std::numeric_limits<double>::infinity();
      return out;
    }
    alpha[0] /= s;
    alpha[1] /= s;
    const double ls = std::log(s);
    out.log_scale.push_back(ls);
    total += ls;
  }
  out.loglik = total;
  return out;
}

namespace detail {

// Minimal dense 4x4 used only for the Van Loan block construction.
struct Mat4 {
  std::array<double, 16> a{};
  double &operator()(int i, int j) { return a[static_cast<std::size_t>(4 * i + j)]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(4 * i + j)]; }
};

inline Mat4 mat4_mul(const Mat4 &x, const Mat4 &y) {
  Mat4 z;
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k) {
      const double v = x(i, k);
      if (v == 0.0) continue;
      for (int j = 0; j < 4; ++j) z(i, j) += v * y(k, j);
    }
  return z;
}

// Scaling-and-squaring Taylor matrix exponential; entries here are bounded
// rate blocks, so 18 terms at norm <= 1/2 reach full double precision.
inline Mat4 expm4(Mat4 m) {
  double norm = 0.0;
  for (int i = 0; i < 4; ++i) {
    double row = 0.0;
    for (int j = 0; j < 4; ++j) row += std::fabs(m(i, j));
    norm = std::max(norm, row);
  }
  int squarings = 0;
  while (norm > 0.5 && squarings < 60) {
    norm *= 0.5;
    ++squarings;
  }
  const double scale = std::ldexp(1.0, -squarings);
  for (auto &v : m.a) v *= scale;

  Mat4 result;
  for (int i = 0; i < 4; ++i) result(i, i) = 1.0;
  Mat4 term = result;
  for (int k = 1; k <= 18; ++k) {
    term = mat4_mul(term, m);
    const double c = 1.0 / k;
    for (auto &v : term.a) v *= c;
    for (std::size_t i = 0; i < 16; ++i) result.a[i] += term.a[i];
  }
  for (int s = 0; s < squarings; ++s) result = mat4_mul(result, result);
  return result;
}

// Van Loan block augmentation: the upper-right 2x2 block of
// exp([[D0, E],[0, D0]] t) equals  int_0^t exp(D0 s) E exp(D0 (t-s)) ds.
inline Mat2 convolution_integral(const Mat2 &d0, const Mat2 &e, double t) {
  Mat4 block;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      block(i, j) = d0(i, j) * t;
      block(i, j + 2) = e(i, j) * t;
      block(i + 2, j + 2) = d0(i, j) * t;
    }
  const Mat4 full = expm4(block);
  Mat2 out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out(i, j) = full(i, j + 2);
  return out;
}

inline Mat2 unit_matrix(int i, int j) {
  Mat2 e;
  e(i, j) = 1.0;
  return e;
}

}  // namespace detail

struct EmOptions {
  int max_iter = 500;
  double tol = 1e-7;          // stop on |delta loglik| below this
  double monotone_slack = 1e-8;
};

// EM for the hidden two-state chain with marked transitions.  The E-step
// computes expected sojourn times, silent-switch counts and per-size event
// counts by forward-backward over the interval propagators exp(D0 t_i),
// with the interval integrals evaluated by the Van Loan construction.  The
// M-step is the complete-data MLE:
//   y = E[N12]/E[Z1],  w_k = E[M1k]/E[Z1]   (state 2 symmetric),
// with x, u closing the rows.  The initial phase distribution is treated as
// a free parameter so the likelihood ascent is exact.
inline FitResult em_fit(const Trace &trace, int K, const BmmppModel &init,
                        const EmOptions &opt = {}) {
  const auto t_start = std::chrono::steady_clock::now();
  // The starting point only needs the right shape and sign pattern: the
  // E-step uses exp(D0 t) and the D_k marks, nothing else, and the first
  // M-step restores the row-sum closure.  (Published starting points for
  // EM on this family routinely violate the closure.)
  if (!(init.d0(0, 0) < 0.0) || !(init.d0(1, 1) < 0.0) || init.d0(0, 1) < 0.0 ||
      init.d0(1, 0) < 0.0 || init.K() < 1)
    throw Error("em_fit", "init D0 must have negative diagonal, nonnegative off-diagonal");
  for (const Vec2 &d : init.dk)
    if (d[0] < 0.0 || d[1] < 0.0)
      throw Error("em_fit", "init D_k entries must be nonnegative");
  validate_trace(trace, K);
  if (init.K() != K)
    throw Error("em_fit", "init model has K = " + std::to_string(init.K()) +
                              ", trace needs K = " + std::to_string(K));
  const std::size_t n = trace.size();

  BmmppModel model = init;
  Vec2 alpha0;
  try {
    alpha0 = stationary_vectors(model).phi;
  } catch (const Error &) {
    alpha0 = Vec2{{0.5, 0.5}};
  }

  FitResult res;
  res.method = "em";
  double prev_ll = -std::numeric_limits<double>::infinity();

  std::vector<Mat2> props(n);
  std::vector<Vec2> fwd(n + 1);   // normalized forward row vectors
  std::vector<Vec2> bwd(n + 1);   // normalized backward column vectors

  for (int iter = 0; iter < opt.max_iter; ++iter) {
    // Forward-backward with per-event scaling.
    for (std::size_t i = 0; i < n; ++i) props[i] = expm2(model.d0, trace.t[i]);
    fwd[0] = alpha0;
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      Vec2 a = fwd[i] * props[i];
      const Vec2 d = model.dk[static_cast<std::size_t>(trace.b[i]) - 1];
      a[0] *= d[0];
      a[1] *= d[1];
      const double s = a.sum();
      if (!(s > 0.0))
        throw Error("em_fit", "zero-likelihood event at index " + std::to_string(i) +
                                  " (missing batch rate in both states)");
      ll += std::log(s);
      fwd[i + 1] = Vec2{{a[0] / s, a[1] / s}};
    }
    bwd[n] = ones2();
    for (std::size_t i = n; i-- > 0;) {
      const Vec2 d = model.dk[static_cast<std::size_t>(trace.b[i]) - 1];
      Vec2 db{{d[0] * bwd[i + 1][0], d[1] * bwd[i + 1][1]}};
      Vec2 v = props[i] * db;
      const double s = v.sum();
      if (!(s > 0.0)) throw Error("em_fit", "backward underflow");
      bwd[i] = Vec2{{v[0] / s, v[1] / s}};
    }

    res.em_loglik_path.push_back(ll);
    if (ll < prev_ll - opt.monotone_slack)
      throw Error("em_fit",
                  "non-monotone EM step at iteration " + std::to_string(iter) +
                      " (" + detail::fmt(prev_ll) + " -> " + detail::fmt(ll) +
                      "); implementation bug guard");
    const bool done = (iter > 0 && std::fabs(ll - prev_ll) < opt.tol);
    prev_ll = ll;
    if (done) break;

    // E-step accumulators.
    double sojourn[2] = {0.0, 0.0};
    double switches[2] = {0.0, 0.0};  // 1->2 and 2->1 silent counts
    std::vector<double> events[2];
    events[0].assign(static_cast<std::size_t>(K), 0.0);
    events[1].assign(static_cast<std::size_t>(K), 0.0);

    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 d = model.dk[static_cast<std::size_t>(trace.b[i]) - 1];
      const Vec2 db{{d[0] * bwd[i + 1][0], d[1] * bwd[i + 1][1]}};
      const double denom = (fwd[i] * props[i]).dot(db);
      if (!(denom > 0.0)) throw Error("em_fit", "degenerate posterior");

      // Sojourn times and silent switches within the interval.
      for (int a = 0; a < 2; ++a) {
        const Mat2 integral =
            detail::convolution_integral(model.d0, detail::unit_matrix(a, a), trace.t[i]);
        sojourn[a] += (fwd[i] * integral).dot(db) / denom;
      }
      const double rate12 = model.d0(0, 1);
      const double rate21 = model.d0(1, 0);
      if (rate12 > 0.0) {
        const Mat2 integral =
            detail::convolution_integral(model.d0, detail::unit_matrix(0, 1), trace.t[i]);
        switches[0] += rate12 * (fwd[i] * integral).dot(db) / denom;
      }
      if (rate21 > 0.0) {
        const Mat2 integral =
            detail::convolution_integral(model.d0, detail::unit_matrix(1, 0), trace.t[i]);
        switches[1] += rate21 * (fwd[i] * integral).dot(db) / denom;
      }

      // The event itself: diagonal mark, no state change.
      const Vec2 pre = fwd[i] * props[i];
      for (int a = 0; a < 2; ++a) {
        const double post = pre[a] * d[a] * bwd[i + 1][a] / denom;
        events[a][static_cast<std::size_t>(trace.b[i]) - 1] += post;
      }
    }

    // M-step.
    BmmppModel next;
    next.dk.assign(static_cast<std::size_t>(K), Vec2{{0.0, 0.0}});
    double out_rate[2];
    for (int a = 0; a < 2; ++a) {
      if (!(sojourn[a] > 0.0))
        throw Error("em_fit", "zero expected sojourn in state " + std::to_string(a + 1));
      double total = switches[a] / sojourn[a];
      for (int k = 0; k < K; ++k) {
        const double wk = events[a][static_cast<std::size_t>(k)] / sojourn[a];
        next.dk[static_cast<std::size_t>(k)][a] = wk;
        total += wk;
      }
      out_rate[a] = total;
    }
    next.d0 = Mat2{{{-out_rate[0], switches[0] / sojourn[0]},
                    {switches[1] / sojourn[1], -out_rate[1]}}};
    model = next;

    // Posterior over the initial phase.
    Vec2 a0{{alpha0[0] * bwd[0][0], alpha0[1] * bwd[0][1]}};
    const double s0 = a0.sum();
    if (s0 > 0.0) alpha0 = Vec2{{a0[0] / s0, a0[1] / s0}};
  }

  require_valid(model, "em_fit");
  res.model = model;
  StageDiagnostics diag;
  diag.stage = 0;
  diag.objective = -prev_ll;
  diag.iterations = static_cast<int>(res.em_loglik_path.size());
  diag.converged =
      res.em_loglik_path.size() >= 2 &&
      std::fabs(res.em_loglik_path.back() -
                res.em_loglik_path[res.em_loglik_path.size() - 2]) < opt.tol;
  diag.starts = 1;
  res.stages.push_back(diag);
  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return res;
}

}  // namespace bmmpp
