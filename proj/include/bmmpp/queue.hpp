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
#include <cmath>
#include <vector>

#include "bmmpp/descriptors.hpp"
#include "bmmpp/mat2.hpp"
#include "bmmpp/model.hpp"
#include "bmmpp/rng.hpp"

namespace bmmpp {

// Single-server queue fed by the batch process, exponential services.
struct QueueSpec {
  double service_rate = 1.0;   // mu*, reciprocal mean service time
  double g_tol = 1e-13;        // fixed-point tolerance for G
  int g_max_iter = 200000;
  double tail_eps = 1e-9;      // reported tail cut
  int max_levels = 200000;
  double a_series_tol = 1e-14; // A-series completeness target
  int a_series_cap = 200000;
};

struct TrafficIntensity {
  double batch = 0.0;     // event (batch) arrival rate over service rate
  double customer = 0.0;  // customer arrival rate over service rate
};

// The batch-level intensity uses lambda* = 1/mu1 (events per unit time);
// the customer-level one multiplies by the mean batch size and is the
// actual stability gate.
inline TrafficIntensity traffic_intensity(const BmmppModel &model,
                                          const QueueSpec &spec) {
  require_valid(model, "traffic_intensity");
  if (!(spec.service_rate > 0.0))
    throw Error("traffic_intensity", "service rate must be positive");
  const StationaryVectors sv = stationary_vectors(model);
  const double lam = 1.0 / time_moment(model, 1, sv);
  const double beta1 = batch_moment(model, 1, sv);
  return TrafficIntensity{lam / spec.service_rate, lam * beta1 / spec.service_rate};
}

// Stationary queue length seen just after departures.
struct QueueLengthDist {
  std::vector<double> z;  // z[i] = P(queue length = i at a departure)
  double tail_mass = 0.0;

  double mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) m += double(i) * z[i];
    return m;
  }
  // P(queue length > i).
  double tail(std::size_t i) const {
    double t = tail_mass;
    for (std::size_t j = i + 1; j < z.size(); ++j) t += z[j];
    return t;
  }
};

namespace detail {

inline double mat_diff(const Mat2 &a, const Mat2 &b) {
  return (a - b).max_abs();
}

}  // namespace detail

// Matrix-analytic solution of the departure-epoch queue length.
//
// Service-averaged arrival blocks A_n = int_0^inf mu* e^{-mu* s} P_c(n, s) ds
// (P_c counts customers, batches contributing their size) satisfy the closed
// recursion A_0 = mu*(mu* I - D0)^{-1},
// A_n = (sum_{k=1..min(n,K)} A_{n-k} D_k)(mu* I - D0)^{-1}.  The embedded
// chain at departures is then M/G/1-type with boundary blocks
// B_j = sum_k (-D0)^{-1} D_k A_{j+1-k}; its stationary law follows from the
// G matrix fixed point and the standard level recursion.
inline QueueLengthDist queue_length_at_departures(const BmmppModel &model,
                                                  const QueueSpec &spec) {
  require_valid(model, "queue_length_at_departures");
  const TrafficIntensity rho = traffic_intensity(model, spec);
  if (!(rho.customer < 1.0))
    throw Error("queue_length_at_departures",
                "unstable system: customer-level intensity " +
                    detail::fmt(rho.customer) + " >= 1");
  const double mu = spec.service_rate;
  const int K = model.K();

  // A-series until the row sums reach 1 (they sum to mu*(mu* I - Q)^{-1},
  // which is stochastic).
  const Mat2 winv = (Mat2::identity() * mu - model.d0).inverse();
  std::vector<Mat2> A{winv * mu};
  Vec2 covered = A[0].row_sums();
  while (std::max(1.0 - covered[0], 1.0 - covered[1]) > spec.a_series_tol) {
    const int n = static_cast<int>(A.size());
    Mat2 sum = Mat2::zero();
    for (int k = 1; k <= std::min(n, K); ++k)
      sum = sum + A[static_cast<std::size_t>(n - k)] * model.dmat(k);
    const Mat2 an = sum * winv;
    A.push_back(an);
    covered = covered + an.row_sums();
    if (static_cast<int>(A.size()) > spec.a_series_cap)
      throw Error("queue_length_at_departures", "A-series did not close");
  }
  const int n_a = static_cast<int>(A.size()) - 1;

  // G fixed point by functional iteration from zero (monotone to the
  // minimal solution).
  Mat2 g = Mat2::zero();
  int iter = 0;
  for (; iter < spec.g_max_iter; ++iter) {
    Mat2 s = A[static_cast<std::size_t>(n_a)];
    for (int n = n_a - 1; n >= 0; --n) s = A[static_cast<std::size_t>(n)] + s * g;
    if (detail::mat_diff(s, g) < spec.g_tol) {
      g = s;
      break;
    }
    g = s;
  }
  if (iter >= spec.g_max_iter)
    throw Error("queue_length_at_departures", "G iteration did not converge");
  const Vec2 grows = g.row_sums();
  if (std::fabs(grows[0] - 1.0) > 1e-8 || std::fabs(grows[1] - 1.0) > 1e-8)
    throw Error("queue_length_at_departures",
                "G is not stochastic at convergence (row sums " +
                    detail::fmt(grows[0]) + ", " + detail::fmt(grows[1]) + ")");

  // Boundary blocks B_j, j = 0..n_a+K-1.
  const Mat2 d0inv_neg = (model.d0 * -1.0).inverse();
  const int n_b = n_a + K;
  std::vector<Mat2> B(static_cast<std::size_t>(n_b) + 1, Mat2::zero());
  for (int j = 0; j <= n_b; ++j) {
    Mat2 sum = Mat2::zero();
    for (int k = 1; k <= std::min(j + 1, K); ++k) {
      const int idx = j + 1 - k;
      if (idx <= n_a)
        sum = sum + (d0inv_neg * model.dmat(k)) * A[static_cast<std::size_t>(idx)];
    }
    B[static_cast<std::size_t>(j)] = sum;
  }

  // Tail-summed blocks via the backward recursion S_n = X_n + S_{n+1} G.
  std::vector<Mat2> Abar(static_cast<std::size_t>(n_a) + 1, Mat2::zero());
  Abar[static_cast<std::size_t>(n_a)] = A[static_cast<std::size_t>(n_a)];
  for (int n = n_a - 1; n >= 1; --n)
    Abar[static_cast<std::size_t>(n)] =
        A[static_cast<std::size_t>(n)] + Abar[static_cast<std::size_t>(n + 1)] * g;
  std::vector<Mat2> Bbar(static_cast<std::size_t>(n_b) + 1, Mat2::zero());
  Bbar[static_cast<std::size_t>(n_b)] = B[static_cast<std::size_t>(n_b)];
  for (int n = n_b - 1; n >= 0; --n)
    Bbar[static_cast<std::size_t>(n)] =
        B[static_cast<std::size_t>(n)] + Bbar[static_cast<std::size_t>(n + 1)] * g;

  // Level 0 vector: stationary for the censored chain at level 0.
  const Vec2 brows = Bbar[0].row_sums();
  if (std::fabs(brows[0] - 1.0) > 1e-7 || std::fabs(brows[1] - 1.0) > 1e-7)
    throw Error("queue_length_at_departures",
                "censored boundary kernel is not stochastic");
  Vec2 x0 = stationary_of_stochastic(Bbar[0]);

  const Mat2 r_inv = (Mat2::identity() - Abar[1]).inverse();
  std::vector<Vec2> levels{x0};
  double total = x0.sum();
  double level_mass = total;
  int stagnant = 0;
  for (int j = 1; j <= spec.max_levels; ++j) {
    Vec2 acc = (static_cast<std::size_t>(j) <= static_cast<std::size_t>(n_b))
                   ? x0 * Bbar[static_cast<std::size_t>(j)]
                   : Vec2{{0.0, 0.0}};
    for (int i = 1; i < j; ++i) {
      const int idx = j - i + 1;
      if (idx <= n_a)
        acc = acc + levels[static_cast<std::size_t>(i)] * Abar[static_cast<std::size_t>(idx)];
    }
    const Vec2 xj = acc * r_inv;
    levels.push_back(xj);
    level_mass = xj.sum();
    total += level_mass;
    if (level_mass < 1e-16 * total) {
      if (++stagnant >= 3) break;
    } else {
      stagnant = 0;
    }
  }

  QueueLengthDist out;
  out.z.resize(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) out.z[i] = levels[i].sum() / total;
  // Trim the reported vector at the tail cut.
  double cum = 0.0;
  std::size_t keep = out.z.size();
  for (std::size_t i = 0; i < out.z.size(); ++i) {
    cum += out.z[i];
    if (cum >= 1.0 - spec.tail_eps) {
      keep = i + 1;
      break;
    }
  }
  double kept = 0.0;
  for (std::size_t i = 0; i < keep; ++i) kept += out.z[i];
  out.z.resize(keep);
  out.tail_mass = std::max(0.0, 1.0 - kept);
  return out;
}

// Event-driven oracle: simulates the queue and returns the post-departure
// queue lengths, one entry per departure.
inline std::vector<int> simulate_queue_lengths(const BmmppModel &model,
                                               const QueueSpec &spec,
                                               std::size_t n_departures,
                                               const RngSpec &rng_spec,
                                               std::size_t warmup = 10000) {
  require_valid(model, "simulate_queue");
  const TrafficIntensity rho = traffic_intensity(model, spec);
  if (!(rho.customer < 1.0))
    throw Error("simulate_queue", "unstable system");
  const int K = model.K();
  std::vector<double> weights[2];
  for (int s = 0; s < 2; ++s) {
    weights[s].resize(static_cast<std::size_t>(K) + 1);
    weights[s][0] = (s == 0) ? model.y() : model.r();
    for (int k = 1; k <= K; ++k)
      weights[s][static_cast<std::size_t>(k)] = model.dk[static_cast<std::size_t>(k - 1)][s];
  }
  const double rate[2] = {-model.x(), -model.u()};

  CounterRng arrivals(rng_spec);
  CounterRng services(CounterRng::substream(rng_spec, 0xabcdef));
  const Vec2 pi = stationary_of_generator(model.generator());
  int phase = arrivals.next_u01() < pi[0] ? 0 : 1;

  std::vector<int> lengths;
  lengths.reserve(n_departures);
  double now = 0.0;
  double next_arrival = 0.0;
  int pending_batch = 0;

  auto advance_arrival = [&]() {
    // Time and size of the next batch arrival from the phase process.
    for (;;) {
      next_arrival += arrivals.next_exp(rate[phase]);
      const int outcome = arrivals.next_discrete(weights[phase], K + 1);
      if (outcome == 0) {
        phase = 1 - phase;
      } else {
        pending_batch = outcome;
        return;
      }
    }
  };
  advance_arrival();

  long queue = 0;
  double service_end = std::numeric_limits<double>::infinity();
  std::size_t departures = 0;
  while (departures < warmup + n_departures) {
    if (next_arrival < service_end) {
      now = next_arrival;
      queue += pending_batch;
      if (!std::isfinite(service_end))
        service_end = now + services.next_exp(spec.service_rate);
      advance_arrival();
    } else {
      now = service_end;
      --queue;
      ++departures;
      if (departures > warmup)
        lengths.push_back(static_cast<int>(queue));
      service_end = (queue > 0) ? now + services.next_exp(spec.service_rate)
                                : std::numeric_limits<double>::infinity();
    }
  }
  return lengths;
}

// Histogram form of the oracle.
inline QueueLengthDist simulate_queue(const BmmppModel &model, const QueueSpec &spec,
                                      std::size_t n_departures, const RngSpec &rng_spec,
                                      std::size_t warmup = 10000) {
  const std::vector<int> lengths =
      simulate_queue_lengths(model, spec, n_departures, rng_spec, warmup);
  int mx = 0;
  for (int v : lengths) mx = std::max(mx, v);
  QueueLengthDist out;
  out.z.assign(static_cast<std::size_t>(mx) + 1, 0.0);
  const double w = 1.0 / static_cast<double>(lengths.size());
  for (int v : lengths) out.z[static_cast<std::size_t>(v)] += w;
  out.tail_mass = 0.0;
  return out;
}

}  // namespace bmmpp
