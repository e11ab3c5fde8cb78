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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "bmmpp/canonical.hpp"
#include "bmmpp/descriptors.hpp"
#include "bmmpp/model.hpp"
#include "bmmpp/nelder_mead.hpp"
#include "bmmpp/rng.hpp"
#include "bmmpp/trace.hpp"

namespace bmmpp {

// Empirical counterpart of the characterizing moment set.  For each batch
// index k = 1..K-1 the batch sample is collapsed to support {1, 2}:
// b*_j = 1 if b_j = k, else 2; beta1_bar^{(k)} and eta_bar^{(k)} are then
// plain sample means of b* and t * b*.
struct EmpiricalMoments {
  double mu1 = 0.0, mu2 = 0.0, mu3 = 0.0;
  double rhoT1 = 0.0;
  double cv = 0.0;
  std::size_t n = 0;
  int K = 1;
  std::vector<double> beta1_sub;
  std::vector<double> eta_sub;
};

inline EmpiricalMoments empirical_moments(const Trace &trace, int K) {
  validate_trace(trace, K);
  if (trace.size() < 4)
    throw Error("empirical_moments", "need at least 4 events");
  EmpiricalMoments em;
  em.n = trace.size();
  em.K = K;
  em.mu1 = sample_moment(trace.t, 1);
  em.mu2 = sample_moment(trace.t, 2);
  em.mu3 = sample_moment(trace.t, 3);
  const double var = em.mu2 - em.mu1 * em.mu1;
  if (!(var > 0.0))
    throw Error("empirical_moments", "constant inter-event times: autocorrelation undefined");
  em.cv = std::sqrt(var) / em.mu1;
  em.rhoT1 = sample_autocorr(trace.t, 1);
  const double inv_n = 1.0 / static_cast<double>(em.n);
  for (int k = 1; k <= K - 1; ++k) {
    double bsum = 0.0, tbsum = 0.0;
    for (std::size_t j = 0; j < trace.size(); ++j) {
      const double bstar = (trace.b[j] == k) ? 1.0 : 2.0;
      bsum += bstar;
      tbsum += trace.t[j] * bstar;
    }
    em.beta1_sub.push_back(bsum * inv_n);
    em.eta_sub.push_back(tbsum * inv_n);
  }
  return em;
}

// Empirical analogue of describe(): the full descriptor table computed from
// a trace, for side-by-side comparison with a fitted model.
inline DescriptorReport empirical_report(const Trace &trace, int K, int max_lag = 3) {
  validate_trace(trace, K);
  const std::size_t n = trace.size();
  DescriptorReport rep;
  rep.mu1 = sample_moment(trace.t, 1);
  rep.mu2 = sample_moment(trace.t, 2);
  rep.mu3 = sample_moment(trace.t, 3);
  rep.mu4 = sample_moment(trace.t, 4);
  detail::fill_shape_stats(rep);
  for (int l = 1; l <= max_lag && static_cast<std::size_t>(l) < n; ++l)
    rep.rhoT[l] = sample_autocorr(trace.t, l);

  std::vector<double> b(n), tb(n);
  for (std::size_t i = 0; i < n; ++i) {
    b[i] = static_cast<double>(trace.b[i]);
    tb[i] = trace.t[i] * b[i];
  }
  rep.beta[1] = sample_mean(b);
  rep.beta[2] = sample_moment(b, 2);
  rep.eta = sample_mean(tb);
  const double var_t = rep.mu2 - rep.mu1 * rep.mu1;
  const double var_b = rep.beta[2] - rep.beta[1] * rep.beta[1];
  rep.covTB = rep.eta - rep.mu1 * rep.beta[1];
  rep.corrTB = (var_t > 0.0 && var_b > 0.0)
                   ? rep.covTB / std::sqrt(var_t * var_b)
                   : 0.0;
  if (var_b > 0.0)
    for (int l = 1; l <= max_lag && static_cast<std::size_t>(l) < n; ++l)
      rep.rhoB[l] = sample_autocorr(b, l);
  rep.pmfB.assign(static_cast<std::size_t>(K), 0.0);
  for (int v : trace.b) rep.pmfB[static_cast<std::size_t>(v) - 1] += 1.0 / double(n);
  for (int k = 1; k <= K - 1; ++k) {
    double bs = 0.0, tbs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double bstar = (trace.b[i] == k) ? 1.0 : 2.0;
      bs += bstar;
      tbs += trace.t[i] * bstar;
    }
    rep.beta1_sub.push_back(bs / double(n));
    rep.eta_sub.push_back(tbs / double(n));
  }
  return rep;
}

struct FitConfig {
  double tau = 0.001;
  int multistart = 100;
  RngSpec rng{};
  enum class Variant { General, IidBatch };
  Variant variant = Variant::General;
  // Exit-rate search box is (lambda_lo_scale/mu1_bar, lambda_hi_scale/mu1_bar].
  double lambda_lo_scale = 1e-4;
  double lambda_hi_scale = 50.0;
  // Reject search points whose event-chain eigenvalue exceeds this: beyond
  // it the model stops mixing on any observable horizon and the lag-1
  // autocorrelation can be faked arbitrarily well from infeasible targets.
  double gamma_cap = 0.999;
  // Also start one solve from the closed-form moment inversion when that
  // point is feasible; the multistart random points are unaffected.
  bool seed_with_closed_form = true;
  NelderMeadOptions nm{};
};

struct StageDiagnostics {
  int stage = 0;          // 0 for D0, then k = 1..K-1
  double objective = 0.0; // delta_k at the winner
  int starts = 0;
  int best_start = -1;    // -1 marks the closed-form seed
  int iterations = 0;     // NM iterations of the winning start
  bool converged = false;
};

struct FitResult {
  BmmppModel model;
  std::vector<StageDiagnostics> stages;
  double wall_seconds = 0.0;
  std::vector<double> em_loglik_path;  // filled by the EM route only
  std::string method = "moments";
};

namespace detail {

// delta_0: squared rho gap plus tau-weighted relative moment gaps.
// Degenerate evaluations carry a large finite penalty so the multistart
// search walks away from them instead of aborting.
inline double objective_d0(double x, double y, double r, double u,
                           const EmpiricalMoments &em, double tau,
                           double gamma_cap) {
  Map2Moments mm;
  try {
    mm = mmpp_inter_event_moments(x, y, r, u);
  } catch (const std::exception &) {
    return 1e6;
  }
  if (!std::isfinite(mm.mu1) || !std::isfinite(mm.rhoT1)) return 1e6;
  if (mm.gamma > gamma_cap) return 1e6 * (1.0 + mm.gamma - gamma_cap);
  auto rel = [](double v, double ref) { return (v - ref) / ref; };
  const double d_rho = mm.rhoT1 - em.rhoT1;
  return d_rho * d_rho +
         tau * (rel(mm.mu1, em.mu1) * rel(mm.mu1, em.mu1) +
                rel(mm.mu2, em.mu2) * rel(mm.mu2, em.mu2) +
                rel(mm.mu3, em.mu3) * rel(mm.mu3, em.mu3));
}

// Search parameterization for (P0): (lambda1, lambda2, py, pr) in a box,
// with x = -lambda1, y = py lambda1, u = -lambda2, r = pr lambda2.  All of
// the problem's constraints (x, u <= 0, y, r >= 0, x + y <= 0, r + u <= 0)
// hold by construction.
struct D0Params {
  double lambda1, lambda2, py, pr;
  double x() const { return -lambda1; }
  double y() const { return py * lambda1; }
  double r() const { return pr * lambda2; }
  double u() const { return -lambda2; }
};

inline bool lex_less(const std::vector<double> &a, const std::vector<double> &b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

}  // namespace detail

struct FitD0Result {
  Mat2 d0;
  StageDiagnostics diag;
};

// Stage 0 of the sequential algorithm: estimate the silent-rate matrix by
// multistart box-constrained minimization of delta_0.
inline FitD0Result fit_d0(const EmpiricalMoments &em, const FitConfig &cfg) {
  if (!(cfg.tau > 0.0)) throw Error("fit_d0", "tau must be positive");
  if (cfg.multistart < 1) throw Error("fit_d0", "multistart must be >= 1");

  const double lam_lo = cfg.lambda_lo_scale / em.mu1;
  const double lam_hi = cfg.lambda_hi_scale / em.mu1;
  const double p_eps = 1e-9;
  const std::vector<double> lo{lam_lo, lam_lo, p_eps, p_eps};
  const std::vector<double> hi{lam_hi, lam_hi, 1.0 - p_eps, 1.0 - p_eps};

  auto objective = [&](const std::vector<double> &p) {
    const detail::D0Params d{p[0], p[1], p[2], p[3]};
    return detail::objective_d0(d.x(), d.y(), d.r(), d.u(), em, cfg.tau,
                                cfg.gamma_cap);
  };

  CounterRng rng(cfg.rng);
  std::vector<std::vector<double>> starts;
  starts.reserve(static_cast<std::size_t>(cfg.multistart) + 1);
  for (int s = 0; s < cfg.multistart; ++s)
    starts.push_back({rng.next_uniform(lo[0], hi[0]), rng.next_uniform(lo[1], hi[1]),
                      rng.next_uniform(lo[2], hi[2]), rng.next_uniform(lo[3], hi[3])});
  int closed_form_index = -2;
  if (cfg.seed_with_closed_form) {
    const CanonicalInversion inv =
        try_moments_to_canonical(em.mu1, em.mu2, em.mu3, em.rhoT1);
    if (inv.value && inv.kind == CanonicalKind::Regular) {
      try {
        const BmmppModel seed =
            normalize_state_order(canonical_to_mmpp(*inv.value).as_bmmpp());
        const double l1 = -seed.x(), l2 = -seed.u();
        starts.push_back({std::clamp(l1, lo[0], hi[0]), std::clamp(l2, lo[1], hi[1]),
                          std::clamp(seed.y() / l1, lo[2], hi[2]),
                          std::clamp(seed.r() / l2, lo[3], hi[3])});
        closed_form_index = static_cast<int>(starts.size()) - 1;
      } catch (const Error &) {
        // Seed infeasible; random starts carry the search.
      }
    }
  }

  NelderMeadResult best;
  best.value = std::numeric_limits<double>::infinity();
  std::vector<double> best_key;
  int best_start = -3;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    const NelderMeadResult r = nelder_mead_box(objective, starts[s], lo, hi, cfg.nm);
    // Normalized parameter vector for deterministic tie-breaking.
    const detail::D0Params d{r.x[0], r.x[1], r.x[2], r.x[3]};
    std::vector<double> key{d.x(), d.y(), d.r(), d.u()};
    if (d.x() + d.y() < d.r() + d.u()) key = {d.u(), d.r(), d.y(), d.x()};
    if (r.value < best.value - 1e-15 ||
        (std::fabs(r.value - best.value) <= 1e-15 && detail::lex_less(key, best_key))) {
      best = r;
      best_key = key;
      best_start = (static_cast<int>(s) == closed_form_index) ? -1 : static_cast<int>(s);
    }
  }
  if (!std::isfinite(best.value) || best.value >= 1e6)
    throw Error("fit_d0", "all starts failed to reach a feasible point");

  FitD0Result out;
  out.d0 = Mat2{{{best_key[0], best_key[1]}, {best_key[2], best_key[3]}}};
  out.diag = StageDiagnostics{0, best.value, static_cast<int>(starts.size()),
                              best_start, best.iterations, true};
  return out;
}

struct FitStageResult {
  double w = 0.0;
  double q = 0.0;
  StageDiagnostics diag;
};

// Stage k: estimate (w_k, q_k) of D_k over the remaining row budgets.
// beta1^{(k)} and eta^{(k)} of the stage's sub-process are linear in
// (w_k, q_k), which makes delta_k a quadratic on the box; the multistart
// simplex search still runs as the primary route, with the closed-form
// split as one more candidate.
inline FitStageResult fit_stage_k(const Mat2 &d0hat, double budget1, double budget2,
                                  double beta1_bar, double eta_bar,
                                  const FitConfig &cfg, int k) {
  if (budget1 < -1e-9 || budget2 < -1e-9)
    throw Error("fit_stage_k", "empty feasible box at stage " + std::to_string(k));
  budget1 = std::max(budget1, 0.0);
  budget2 = std::max(budget2, 0.0);

  // Stationary structure of the fitted D0.
  const BmmppModel base(d0hat, {Vec2{{-d0hat.row_sums()[0], -d0hat.row_sums()[1]}}});
  const StationaryVectors sv = stationary_vectors(base);
  const Mat2 inv = (d0hat * -1.0).inverse();
  const Vec2 v1 = sv.phi * inv;         // phi (-D0)^{-1}
  const Vec2 v2 = v1 * inv;             // phi (-D0)^{-2}
  const Vec2 dtot = base.event_rates(); // row closures
  const double eta_base = 2.0 * (v2[0] * dtot[0] + v2[1] * dtot[1]);

  auto beta_of = [&](double w, double q) { return 2.0 - (v1[0] * w + v1[1] * q); };
  auto eta_of = [&](double w, double q) { return eta_base - (v2[0] * w + v2[1] * q); };
  auto delta_k = [&](double w, double q) {
    const double db = (beta_of(w, q) - beta1_bar) / beta1_bar;
    const double de = (eta_of(w, q) - eta_bar) / eta_bar;
    return cfg.tau * (db * db + de * de);
  };

  CounterRng rng(CounterRng::substream(cfg.rng, static_cast<std::uint64_t>(k)));

  double best_w = 0.0, best_q = 0.0;
  double best_val = std::numeric_limits<double>::infinity();
  int best_start = -3, best_iter = 0;
  auto consider = [&](double w, double q, double val, int start, int iters) {
    if (val < best_val - 1e-18 ||
        (std::fabs(val - best_val) <= 1e-18 &&
         detail::lex_less({w, q}, {best_w, best_q}))) {
      best_w = w;
      best_q = q;
      best_val = val;
      best_start = start;
      best_iter = iters;
    }
  };

  if (cfg.variant == FitConfig::Variant::IidBatch) {
    // Constrained to w delta2 = q delta1, i.e. (w, q) = s (delta1, delta2):
    // the one-parameter family whose batch-size draws are independent of
    // the phase, so corr(T,B) and rho_B vanish by construction.
    const double s_max = std::min(budget1 / std::max(dtot[0], 1e-300),
                                  budget2 / std::max(dtot[1], 1e-300));
    auto f1 = [&](const std::vector<double> &p) {
      return delta_k(p[0] * dtot[0], p[0] * dtot[1]);
    };
    for (int s = 0; s < cfg.multistart; ++s) {
      const NelderMeadResult r = nelder_mead_box(
          f1, {rng.next_uniform(0.0, s_max)}, {0.0}, {s_max}, cfg.nm);
      consider(r.x[0] * dtot[0], r.x[0] * dtot[1], r.value, s, r.iterations);
    }
    if (cfg.seed_with_closed_form) {
      // Closed-form candidate: the 1-D quadratic minimizer, clamped.
      const double gb = -(v1[0] * dtot[0] + v1[1] * dtot[1]);  // d beta / d s
      const double ge = -(v2[0] * dtot[0] + v2[1] * dtot[1]);  // d eta / d s
      const double b0 = 2.0, e0 = eta_base;
      const double num = -((b0 - beta1_bar) * gb / (beta1_bar * beta1_bar) +
                           (e0 - eta_bar) * ge / (eta_bar * eta_bar));
      const double den =
          gb * gb / (beta1_bar * beta1_bar) + ge * ge / (eta_bar * eta_bar);
      if (den > 0.0) {
        const double s_opt = std::clamp(num / den, 0.0, s_max);
        consider(s_opt * dtot[0], s_opt * dtot[1],
                 delta_k(s_opt * dtot[0], s_opt * dtot[1]), -1, 0);
      }
    }
  } else {
    auto f2 = [&](const std::vector<double> &p) { return delta_k(p[0], p[1]); };
    const std::vector<double> lo{0.0, 0.0};
    const std::vector<double> hi{budget1, budget2};
    for (int s = 0; s < cfg.multistart; ++s) {
      const NelderMeadResult r = nelder_mead_box(
          f2, {rng.next_uniform(0.0, budget1), rng.next_uniform(0.0, budget2)},
          lo, hi, cfg.nm);
      consider(r.x[0], r.x[1], r.value, s, r.iterations);
    }
    if (cfg.seed_with_closed_form) {
      try {
        const BatchSplit split = solve_batch_split(d0hat, beta1_bar, eta_bar);
        const double w = std::clamp(split.w, 0.0, budget1);
        const double q = std::clamp(split.q, 0.0, budget2);
        consider(w, q, delta_k(w, q), -1, 0);
      } catch (const Error &) {
        // Target outside the feasible cone; optimizer candidates stand.
      }
    }
  }

  FitStageResult out;
  out.w = best_w;
  out.q = best_q;
  out.diag = StageDiagnostics{k, best_val, cfg.multistart, best_start, best_iter, true};
  return out;
}

// The full sequential moment-matching fit: (P0) for D0, then (Pk) for each
// batch size k = 1..K-1, with D_K closing the rows.
inline FitResult fit(const Trace &trace, int K, const FitConfig &cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  if (K < 1) throw Error("fit", "K must be >= 1");
  const EmpiricalMoments em = empirical_moments(trace, K);

  FitResult res;
  res.method = (cfg.variant == FitConfig::Variant::IidBatch) ? "moments-iid" : "moments";
  FitD0Result stage0;
  try {
    stage0 = fit_d0(em, cfg);
  } catch (const Error &e) {
    throw Error("fit[stage 0]", e.what());
  }
  res.stages.push_back(stage0.diag);

  const Vec2 closures{{-stage0.d0.row_sums()[0], -stage0.d0.row_sums()[1]}};
  BmmppModel model;
  model.d0 = stage0.d0;
  model.dk.assign(static_cast<std::size_t>(K), Vec2{{0.0, 0.0}});
  double used1 = 0.0, used2 = 0.0;
  for (int k = 1; k <= K - 1; ++k) {
    FitStageResult st;
    try {
      st = fit_stage_k(stage0.d0, closures[0] - used1, closures[1] - used2,
                       em.beta1_sub[static_cast<std::size_t>(k - 1)],
                       em.eta_sub[static_cast<std::size_t>(k - 1)], cfg, k);
    } catch (const Error &e) {
      throw Error("fit[stage " + std::to_string(k) + "]", e.what());
    }
    model.dk[static_cast<std::size_t>(k - 1)] = Vec2{{st.w, st.q}};
    used1 += st.w;
    used2 += st.q;
    res.stages.push_back(st.diag);
  }
  model.dk[static_cast<std::size_t>(K - 1)] =
      Vec2{{closures[0] - used1, closures[1] - used2}};
  model = clamp_closure(model, 1e-9);
  require_valid(model, "fit");

  res.model = model;
  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace bmmpp
