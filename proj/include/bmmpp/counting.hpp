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
#include <vector>

#include "bmmpp/descriptors.hpp"
#include "bmmpp/mat2.hpp"
#include "bmmpp/model.hpp"

namespace bmmpp {

// Distribution of the number of events in (0, t], starting from the
// stationary phase unless overridden.  probs[n] = p(n, t) for n = 0..N;
// truncation_mass bounds everything not captured (Poisson tail of the
// uniformization plus counts beyond N).
struct CountDistribution {
  double t = 0.0;
  std::vector<double> probs;
  double truncation_mass = 0.0;

  double mean() const {
    double m = 0.0;
    for (std::size_t n = 0; n < probs.size(); ++n) m += double(n) * probs[n];
    return m;
  }
};

struct CountOptions {
  std::optional<int> n_max;      // override the automatic mean + 10 sd cap
  std::optional<Vec2> start;     // override the stationary start vector
  long max_terms = 400000000;    // uniformization work budget (J * N)
  int n_max_cap = 500000;
};

// Palm function: E[N(t)] = t / mu1.
inline double palm_mean(const BmmppModel &model, double t) {
  return t / time_moment(model, 1);
}

// Stationary variance of N(t); the matrix-exponential term is evaluated in
// closed form for the 2x2 generator.
inline double count_variance(const BmmppModel &model, double t) {
  require_valid(model, "count_variance");
  if (!model.irreducible())
    throw Error("count_variance", "reducible model has no stationary count law");
  const Vec2 pi = stationary_of_generator(model.generator());
  const Vec2 d = model.event_rates();
  const double lam = pi[0] * d[0] + pi[1] * d[1];  // = 1/mu1
  const double en = lam * t;

  const Mat2 q = model.generator();
  // e pi + Q and its inverse.
  Mat2 m;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) m(i, j) = pi[j] + q(i, j);
  Mat2 minv;
  try {
    minv = m.inverse();
  } catch (const std::exception &) {
    throw Error("count_variance", "singular (e pi + Q)");
  }
  const Vec2 pid{{pi[0] * d[0], pi[1] * d[1]}};
  const Vec2 de{{d[0], d[1]}};  // D e for diagonal D

  const double term2 = 2.0 * (pid * minv).dot(de) * t;
  const Mat2 eqt = expm2(q, t);
  const Mat2 i_minus = Mat2::identity() - eqt;
  const Vec2 left = (pid * i_minus) * (minv * minv);
  const double term3 = 2.0 * left.dot(de);
  return (1.0 + 2.0 * lam) * en - term2 - term3;
}

namespace detail {

// Shared uniformization sweep.  Row measures W[n] hold start * (sum over
// paths with n events in j uniformized steps); Poisson weights are
// accumulated in place.  K1 moves the count up by one, so overflow past
// n_max funnels into a scalar bucket.
struct UniformizationPlan {
  double theta = 0.0;
  long j_max = 0;
  std::vector<double> log_pois;  // log Poisson(theta t) pmf for j = 0..j_max
};

inline UniformizationPlan plan_uniformization(double theta_t, double eps, long cap) {
  UniformizationPlan plan;
  double cum = 0.0;
  long j = 0;
  std::vector<double> lp;
  for (;; ++j) {
    const double l = -theta_t + double(j) * std::log(theta_t) - std::lgamma(double(j) + 1.0);
    lp.push_back(l);
    cum += std::exp(l);
    if (cum >= 1.0 - eps / 2.0) break;
    if (j > cap)
      throw Error("count_distribution",
                  "eps too small for the horizon (term budget exceeded)");
  }
  plan.j_max = j;
  plan.log_pois = std::move(lp);
  return plan;
}

}  // namespace detail

inline CountDistribution count_distribution(const BmmppModel &model, double t,
                                            double eps,
                                            const CountOptions &opt = {}) {
  require_valid(model, "count_distribution");
  if (!(t > 0.0)) throw Error("count_distribution", "horizon must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw Error("count_distribution", "eps must be in (0,1)");
  const Vec2 d = model.event_rates();
  if (d[0] + d[1] <= 0.0)
    throw Error("count_distribution", "zero event rate");

  // The uniformization rate must dominate the total exit rates |(D0)_ii|
  // (= sojourn rates), not just the phase-generator diagonal, or the
  // silent kernel I + D0/theta goes negative.
  const Mat2 q = model.generator();
  const double theta =
      1.01 * std::max(std::fabs(model.d0(0, 0)), std::fabs(model.d0(1, 1)));
  const Mat2 k0 = Mat2::identity() + model.d0 * (1.0 / theta);
  const Mat2 k1 = Mat2::diag(d[0] / theta, d[1] / theta);

  Vec2 start;
  if (opt.start) {
    start = *opt.start;
  } else {
    if (!model.irreducible())
      throw Error("count_distribution",
                  "reducible model: provide an explicit start vector");
    start = stationary_of_generator(q);
  }

  int n_max;
  if (opt.n_max) {
    n_max = *opt.n_max;
  } else {
    const double mean = model.irreducible() ? palm_mean(model, t)
                                            : theta * t;
    double sd = std::sqrt(std::max(model.irreducible() ? count_variance(model, t) : mean,
                                   mean));
    n_max = static_cast<int>(std::ceil(mean + 10.0 * sd)) + 8;
  }

  for (int attempt = 0; attempt < 4; ++attempt) {
    n_max = std::min(n_max, opt.n_max_cap);
    const detail::UniformizationPlan plan =
        detail::plan_uniformization(theta * t, eps, opt.max_terms / (n_max + 1));
    if (plan.j_max * static_cast<long>(n_max + 1) > opt.max_terms)
      throw Error("count_distribution",
                  "eps too small for the horizon (term budget exceeded)");

    std::vector<Vec2> w(static_cast<std::size_t>(n_max) + 1, Vec2{{0.0, 0.0}});
    w[0] = start;
    std::vector<double> acc(static_cast<std::size_t>(n_max) + 1, 0.0);
    double overflow = 0.0, acc_overflow = 0.0;

    {
      const double p0 = std::exp(plan.log_pois[0]);
      acc[0] += p0 * w[0].sum();
    }
    for (long j = 1; j <= plan.j_max; ++j) {
      overflow += (w[static_cast<std::size_t>(n_max)] * k1).sum();
      for (int n = n_max; n >= 1; --n)
        w[static_cast<std::size_t>(n)] =
            w[static_cast<std::size_t>(n)] * k0 + w[static_cast<std::size_t>(n - 1)] * k1;
      w[0] = w[0] * k0;
      const double pj = std::exp(plan.log_pois[static_cast<std::size_t>(j)]);
      if (pj > 0.0) {
        for (int n = 0; n <= n_max; ++n)
          acc[static_cast<std::size_t>(n)] += pj * w[static_cast<std::size_t>(n)].sum();
        acc_overflow += pj * overflow;
      }
    }

    CountDistribution out;
    out.t = t;
    out.probs = std::move(acc);
    double total = 0.0;
    for (double p : out.probs) total += p;
    out.truncation_mass = std::max(0.0, 1.0 - total);
    if (out.truncation_mass < eps || n_max >= opt.n_max_cap) {
      if (out.truncation_mass >= eps)
        throw Error("count_distribution",
                    "count support exceeds the n_max cap at the requested eps");
      return out;
    }
    n_max *= 2;  // support wider than the mean + 10 sd guess; widen and redo
  }
  throw Error("count_distribution", "failed to capture 1 - eps of the count mass");
}

// Matrix form P(n, t) for n = 0..n_max, used by consistency checks on small
// cases (the (i,j) entry conditions on the starting phase i).
inline std::vector<Mat2> count_matrices(const BmmppModel &model, double t,
                                        double eps, int n_max) {
  require_valid(model, "count_matrices");
  const Vec2 d = model.event_rates();
  const double theta =
      1.01 * std::max(std::fabs(model.d0(0, 0)), std::fabs(model.d0(1, 1)));
  const Mat2 k0 = Mat2::identity() + model.d0 * (1.0 / theta);
  const Mat2 k1 = Mat2::diag(d[0] / theta, d[1] / theta);
  const detail::UniformizationPlan plan =
      detail::plan_uniformization(theta * t, eps, 100000000L);

  std::vector<Mat2> w(static_cast<std::size_t>(n_max) + 1, Mat2::zero());
  w[0] = Mat2::identity();
  std::vector<Mat2> acc(static_cast<std::size_t>(n_max) + 1, Mat2::zero());
  for (long j = 0; j <= plan.j_max; ++j) {
    if (j > 0) {
      for (int n = n_max; n >= 1; --n)
        w[static_cast<std::size_t>(n)] =
            w[static_cast<std::size_t>(n)] * k0 + w[static_cast<std::size_t>(n - 1)] * k1;
      w[0] = w[0] * k0;
    }
    const double pj = std::exp(plan.log_pois[static_cast<std::size_t>(j)]);
    if (pj > 0.0)
      for (int n = 0; n <= n_max; ++n)
        acc[static_cast<std::size_t>(n)] = acc[static_cast<std::size_t>(n)] +
                                           w[static_cast<std::size_t>(n)] * pj;
  }
  return acc;
}

// Counts of size-k events only: N(t, k) is the counting process of the
// MMPP {G0 = D0 + sum_{j != k} D_j, G1 = D_k}.
inline CountDistribution count_distribution_size_k(const BmmppModel &model,
                                                   double t, int k, double eps,
                                                   const CountOptions &opt = {}) {
  require_valid(model, "count_distribution_size_k");
  if (k < 1 || k > model.K())
    throw Error("count_distribution_size_k", "batch size out of range");
  const Vec2 d = model.event_rates();
  const Vec2 dk = model.dk[static_cast<std::size_t>(k) - 1];
  Mat2 g0 = model.d0;
  g0(0, 0) += d[0] - dk[0];
  g0(1, 1) += d[1] - dk[1];
  const BmmppModel counted(g0, {dk});
  if (dk[0] + dk[1] <= 0.0)
    throw Error("count_distribution_size_k",
                "batch size " + std::to_string(k) + " has zero rate");
  return count_distribution(counted, t, eps, opt);
}

}  // namespace bmmpp
