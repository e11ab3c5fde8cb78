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

#include <string>
#include <vector>

#include "bmmpp/descriptors.hpp"
#include "bmmpp/model.hpp"
#include "bmmpp/rng.hpp"
#include "bmmpp/trace.hpp"
#include "bmmpp/trace_io.hpp"

namespace bmmpp {

// Initial phase for simulation.  Phi (stationary at event epochs) makes
// finite-trace empirical moments unbiased for the stationary descriptors;
// Pi and fixed states are for transient studies.
enum class SimInit { StationaryPhi, StationaryPi, State1, State2 };

namespace detail {

inline int draw_initial_state(const BmmppModel &model, SimInit init, CounterRng &rng) {
  switch (init) {
    case SimInit::State1: return 0;
    case SimInit::State2: return 1;
    case SimInit::StationaryPi: {
      const Vec2 pi = stationary_of_generator(model.generator());
      return rng.next_u01() < pi[0] ? 0 : 1;
    }
    case SimInit::StationaryPhi:
    default: {
      const Vec2 phi = stationary_vectors(model).phi;
      return rng.next_u01() < phi[0] ? 0 : 1;
    }
  }
}

}  // namespace detail

// Continuous-time simulation of the marked point process: hold Exp(lambda_i)
// in state i, then either switch silently or emit a batch and stay, with
// probabilities proportional to the rates in row i.
inline Trace simulate_trace(const BmmppModel &model, std::size_t n,
                            const RngSpec &rng_spec,
                            SimInit init = SimInit::StationaryPhi) {
  require_valid(model, "simulate_trace");
  if (n < 1) throw Error("simulate_trace", "event count must be >= 1");
  const Vec2 d = model.event_rates();
  if (d[0] + d[1] <= 0.0)
    throw Error("simulate_trace", "zero total event rate: inter-event times are infinite");

  const int K = model.K();
  // Outcome weights per state: [silent switch, batch 1, ..., batch K].
  std::vector<double> weights[2];
  for (int s = 0; s < 2; ++s) {
    weights[s].resize(static_cast<std::size_t>(K) + 1);
    weights[s][0] = (s == 0) ? model.y() : model.r();
    for (int k = 1; k <= K; ++k)
      weights[s][static_cast<std::size_t>(k)] = model.dk[static_cast<std::size_t>(k - 1)][s];
  }
  const double rate[2] = {-model.x(), -model.u()};

  CounterRng rng(rng_spec);
  int state = detail::draw_initial_state(model, init, rng);

  Trace trace;
  trace.t.reserve(n);
  trace.b.reserve(n);
  trace.origin = "simulated seed=" + std::to_string(rng_spec.seed) +
                 " stream=" + std::to_string(rng_spec.stream);
  double since_last = 0.0;
  while (trace.t.size() < n) {
    since_last += rng.next_exp(rate[state]);
    const int outcome = rng.next_discrete(weights[state], K + 1);
    if (outcome == 0) {
      state = 1 - state;
    } else {
      trace.t.push_back(since_last);
      trace.b.push_back(outcome);
      since_last = 0.0;
    }
  }
  return trace;
}

// Bounds for random model generation.  Total exit rates are drawn uniformly
// in [rate_lo, rate_hi]; the silent fraction and each state's total event
// fraction are kept at least min_fraction away from 0 so every sample is
// irreducible with gamma > 0.  min_rate_separation keeps the two states'
// event rates apart: at equal event rates the inter-event times are
// exponential whatever the phase, the moment map degenerates (a zeta1 =
// b zeta2) and the model is not identifiable from moments.
struct ModelBounds {
  double rate_lo = 0.5;
  double rate_hi = 20.0;
  double min_fraction = 0.02;
  double min_rate_separation = 0.02;
};

// Synthetic packet stream for exercising the ingest pipeline when no real
// capture is at hand.  Gap regimes (active/calm) persist geometrically,
// i.i.d. per-packet jitter adds the short-scale variability seen in real
// captures, and a per-packet dead time stands in for the transmission
// delay: it keeps 1 ms bins at four packets or fewer, like real Ethernet
// traces.  Sizes are bimodal around the small/large split; timestamps sit
// on a microsecond grid.
inline RawPacketTrace make_standin_packets(std::size_t n, std::uint64_t seed) {
  const double rate_active = 1000.0, rate_calm = 45.0;
  const double stay_active = 1.0 - 1.0 / 120.0, stay_calm = 1.0 - 1.0 / 40.0;
  const double jitter_lo = 0.3, jitter_hi = 2.05, p_lo = 0.6;
  const double jitter_mean = p_lo * jitter_lo + (1.0 - p_lo) * jitter_hi;
  const double dead_time = 2.501e-4;

  CounterRng rng(RngSpec{seed, 6});
  RawPacketTrace raw;
  raw.origin = "standin seed=" + std::to_string(seed);
  raw.timestamps.reserve(n);
  raw.sizes.reserve(n);
  double t = 0.0;
  int regime = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double jitter =
        (rng.next_u01() < p_lo ? jitter_lo : jitter_hi) / jitter_mean;
    t += dead_time +
         jitter * rng.next_exp(regime == 0 ? rate_active : rate_calm);
    raw.timestamps.push_back(std::round(t * 1e6) / 1e6);
    const bool small = rng.next_u01() < 0.6;
    raw.sizes.push_back(small ? 64 + static_cast<int>(rng.next_u01() * 30)
                              : 200 + static_cast<int>(rng.next_u01() * 1300));
    if (rng.next_u01() > (regime == 0 ? stay_active : stay_calm)) regime = 1 - regime;
  }
  return raw;
}

// Draws rate rows uniformly and rescales them onto the row-sum constraint.
inline BmmppModel sample_random_model(int K, const RngSpec &rng_spec,
                                      const ModelBounds &bounds = {}) {
  if (K < 1) throw Error("sample_random_model", "K must be >= 1");
  if (!(bounds.rate_lo > 0.0) || !(bounds.rate_hi >= bounds.rate_lo))
    throw Error("sample_random_model", "invalid rate bounds");
  CounterRng rng(rng_spec);
  const int max_attempts = 100;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    BmmppModel model;
    model.dk.assign(static_cast<std::size_t>(K), Vec2{{0.0, 0.0}});
    bool ok = true;
    double off_diag[2];
    for (int s = 0; s < 2; ++s) {
      const double lambda = rng.next_uniform(bounds.rate_lo, bounds.rate_hi);
      const double silent_frac =
          rng.next_uniform(bounds.min_fraction, 1.0 - bounds.min_fraction);
      std::vector<double> raw(static_cast<std::size_t>(K));
      double raw_sum = 0.0;
      for (double &g : raw) {
        g = rng.next_u01();
        raw_sum += g;
      }
      if (raw_sum <= 0.0) { ok = false; break; }
      const double event_total = lambda * (1.0 - silent_frac);
      for (int k = 0; k < K; ++k)
        model.dk[static_cast<std::size_t>(k)][s] =
            event_total * raw[static_cast<std::size_t>(k)] / raw_sum;
      model.d0(s, s) = -lambda;
      off_diag[s] = lambda * silent_frac;
    }
    if (!ok) continue;
    model.d0(0, 1) = off_diag[0];
    model.d0(1, 0) = off_diag[1];
    const Vec2 ev = model.event_rates();
    const double lam_max = std::max(-model.d0(0, 0), -model.d0(1, 1));
    if (std::fabs(ev[0] - ev[1]) < bounds.min_rate_separation * lam_max) continue;
    if (validate(model).ok() && model.irreducible()) return model;
  }
  throw Error("sample_random_model", "failed to draw a valid model");
}

}  // namespace bmmpp
