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

// Acceptance suite.  Each test covers one exit criterion and prints one
// PASS/FAIL line; run the binary directly (or ctest -V) to see them.

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <vector>

#include "bmmpp/canonical.hpp"
#include "bmmpp/counting.hpp"
#include "bmmpp/descriptors.hpp"
#include "bmmpp/fit.hpp"
#include "bmmpp/likelihood.hpp"
#include "bmmpp/model.hpp"
#include "bmmpp/queue.hpp"
#include "bmmpp/simulate.hpp"
#include "bmmpp/trace_io.hpp"

namespace {

using namespace bmmpp;

BmmppModel reference_k2() {
  return BmmppModel(Mat2{{{-5.0, 2.0}, {5.0, -10.0}}},
                    {Vec2{{1.0, 2.0}}, Vec2{{2.0, 3.0}}});
}

BmmppModel reference_k4() {
  return BmmppModel(Mat2{{{-0.58, 0.09}, {1.91, -14.20}}},
                    {Vec2{{0.08, 11.47}}, Vec2{{0.15, 0.10}},
                     Vec2{{0.25, 0.60}}, Vec2{{0.01, 0.12}}});
}

void report(int criterion, const char *label) {
  std::printf("[criterion %2d] %s - %s\n", criterion,
              ::testing::Test::HasFailure() ? "FAIL" : "PASS", label);
  std::fflush(stdout);
}

double rel(double got, double want) {
  return std::fabs(got - want) / std::fabs(want);
}

// Per-block estimates of every stationary descriptor, for batch-mean
// standard errors on simulated traces.
struct BlockStats {
  std::vector<double> mu1, mu2, mu3, rhoT1, beta1, beta2, eta, rhoB1, corrTB;
  std::vector<std::vector<double>> pmf;
};

BlockStats block_descriptors(const Trace &tr, int K, std::size_t blocks) {
  BlockStats bs;
  bs.pmf.resize(static_cast<std::size_t>(K));
  const std::size_t len = tr.size() / blocks;
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t lo = b * len;
    double m1 = 0, m2 = 0, m3 = 0, b1 = 0, b2 = 0, e = 0;
    std::vector<double> pk(static_cast<std::size_t>(K), 0.0);
    for (std::size_t i = lo; i < lo + len; ++i) {
      const double t = tr.t[i];
      const double bb = tr.b[i];
      m1 += t;
      m2 += t * t;
      m3 += t * t * t;
      b1 += bb;
      b2 += bb * bb;
      e += t * bb;
      pk[static_cast<std::size_t>(tr.b[i] - 1)] += 1.0;
    }
    const double inv = 1.0 / double(len);
    bs.mu1.push_back(m1 * inv);
    bs.mu2.push_back(m2 * inv);
    bs.mu3.push_back(m3 * inv);
    bs.beta1.push_back(b1 * inv);
    bs.beta2.push_back(b2 * inv);
    bs.eta.push_back(e * inv);
    for (int k = 0; k < K; ++k)
      bs.pmf[static_cast<std::size_t>(k)].push_back(pk[static_cast<std::size_t>(k)] * inv);
    // Lag-1 autocorrelations and joint correlation within the block.
    const double mean = m1 * inv;
    const double bmean = b1 * inv;
    double num = 0, den = 0, bnum = 0, bden = 0, tb_cov = 0;
    for (std::size_t i = lo; i < lo + len; ++i) {
      den += (tr.t[i] - mean) * (tr.t[i] - mean);
      bden += (tr.b[i] - bmean) * (tr.b[i] - bmean);
      tb_cov += (tr.t[i] - mean) * (tr.b[i] - bmean);
      if (i + 1 < lo + len) {
        num += (tr.t[i] - mean) * (tr.t[i + 1] - mean);
        bnum += (tr.b[i] - bmean) * (tr.b[i + 1] - bmean);
      }
    }
    bs.rhoT1.push_back(num / den);
    if (bden > 0.0) {
      bs.rhoB1.push_back(bnum / bden);
      bs.corrTB.push_back(tb_cov / std::sqrt(den * bden));
    }
  }
  return bs;
}

struct MeanSe {
  double mean = 0.0, se = 0.0;
};

MeanSe mean_se(const std::vector<double> &v) {
  MeanSe out;
  for (double x : v) out.mean += x;
  out.mean /= double(v.size());
  double var = 0.0;
  for (double x : v) var += (x - out.mean) * (x - out.mean);
  var /= double(v.size() - 1);
  out.se = std::sqrt(var / double(v.size()));
  return out;
}

// ---------------------------------------------------------------------------

TEST(Acceptance, Criterion01_DescriptorExactness) {
  const BmmppModel m2 = reference_k2();
  const MomentSet ms2 = moment_set(m2);
  EXPECT_LT(rel(ms2.mu1, 0.28), 5e-3);
  EXPECT_LT(rel(ms2.mu2, 0.16), 5e-3);
  EXPECT_LT(rel(ms2.mu3, 0.138), 5e-3);
  EXPECT_LT(rel(ms2.rhoT1, 7.35e-3), 5e-3);
  EXPECT_LT(rel(ms2.beta1_sub[0], 1.64), 5e-3);
  EXPECT_LT(rel(ms2.eta_sub[0], 0.46), 5e-3);

  // Two-decimal reference column; one unit in the last displayed digit
  // (two of the cells are truncations of 1.7397 and 1.5363).
  const BmmppModel m4 = reference_k4();
  const MomentSet ms4 = moment_set(m4);
  EXPECT_NEAR(ms4.mu1, 0.98, 1e-2);
  EXPECT_NEAR(ms4.mu2, 3.34, 1e-2);
  EXPECT_NEAR(ms4.mu3, 17.65, 1e-2);
  EXPECT_NEAR(ms4.rhoT1, 0.22, 1e-2);
  const double beta_ref[3] = {1.42, 1.86, 1.73};
  const double eta_ref[3] = {1.67, 1.71, 1.53};
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(ms4.beta1_sub[static_cast<std::size_t>(i)], beta_ref[i], 1e-2);
    EXPECT_NEAR(ms4.eta_sub[static_cast<std::size_t>(i)], eta_ref[i], 1e-2);
  }

  // Runtime: full characterizing set, well under a millisecond per model.
  const auto t0 = std::chrono::steady_clock::now();
  double sink = 0.0;
  const int reps = 1000;
  for (int i = 0; i < reps; ++i) {
    sink += moment_set(m2).mu1 + moment_set(m4).mu3;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_GT(sink, 0.0);
  const double per_model = secs / (2.0 * reps);
  EXPECT_LT(per_model, 1e-3);
  report(1, "analytic descriptors match the reference models; < 1 ms each");
}

TEST(Acceptance, Criterion02_MonteCarloAgreement) {
  const std::size_t n = 1000000, blocks = 100;
  int comparisons = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const int K = 1 + static_cast<int>(seed % 4);
    const BmmppModel m = sample_random_model(K, RngSpec{seed, 900});
    const Trace tr = simulate_trace(m, n, RngSpec{seed, 901});
    const BlockStats bs = block_descriptors(tr, K, blocks);
    const StationaryVectors sv = stationary_vectors(m);

    auto check = [&](const std::vector<double> &est, double truth, const char *what) {
      const MeanSe ms = mean_se(est);
      EXPECT_NEAR(ms.mean, truth, 4.0 * ms.se + 1e-10)
          << what << " seed " << seed << " (se " << ms.se << ")";
      ++comparisons;
    };
    check(bs.mu1, time_moment(m, 1, sv), "mu1");
    check(bs.mu2, time_moment(m, 2, sv), "mu2");
    check(bs.mu3, time_moment(m, 3, sv), "mu3");
    check(bs.rhoT1, rho_T(m, 1, sv), "rhoT1");
    check(bs.beta1, batch_moment(m, 1, sv), "beta1");
    check(bs.beta2, batch_moment(m, 2, sv), "beta2");
    check(bs.eta, eta(m, sv), "eta");
    if (K >= 2 && !bs.rhoB1.empty()) {
      check(bs.rhoB1, rho_B(m, 1, sv), "rhoB1");
      check(bs.corrTB, cov_corr_TB(m, sv).corr, "corrTB");
    }
    const std::vector<double> pmf = batch_pmf(m, sv);
    for (int k = 0; k < K; ++k)
      check(bs.pmf[static_cast<std::size_t>(k)], pmf[static_cast<std::size_t>(k)], "pmf");
  }
  EXPECT_GE(comparisons, 20 * 7);
  report(2, "20 random models: every descriptor within 4 SE of 1e6-event traces");
}

TEST(Acceptance, Criterion03_CharacterizationRoundTrip) {
  double worst_moment = 0.0, worst_matrix = 0.0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    const int K = 2 + static_cast<int>(seed % 3);
    const BmmppModel m =
        normalize_state_order(sample_random_model(K, RngSpec{seed, 910}));
    const MomentSet ms = moment_set(m);
    const BmmppModel rec = moments_to_model(ms, K);
    const MomentSet back = moment_set(rec);

    worst_moment = std::max(worst_moment, rel(back.mu1, ms.mu1));
    worst_moment = std::max(worst_moment, rel(back.mu2, ms.mu2));
    worst_moment = std::max(worst_moment, rel(back.mu3, ms.mu3));
    worst_moment = std::max(worst_moment, std::fabs(back.rhoT1 - ms.rhoT1) /
                                              std::max(std::fabs(ms.rhoT1), 1e-3));
    for (int i = 0; i < K - 1; ++i) {
      worst_moment = std::max(
          worst_moment, rel(back.beta1_sub[static_cast<std::size_t>(i)],
                            ms.beta1_sub[static_cast<std::size_t>(i)]));
      worst_moment = std::max(worst_moment,
                              rel(back.eta_sub[static_cast<std::size_t>(i)],
                                  ms.eta_sub[static_cast<std::size_t>(i)]));
    }

    // Matrix recovery up to state permutation.
    auto matrix_gap = [&](const BmmppModel &a, const BmmppModel &b) {
      double g = 0.0;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) g = std::max(g, std::fabs(a.d0(i, j) - b.d0(i, j)));
      for (int k = 1; k <= K; ++k) {
        g = std::max(g, std::fabs(a.w(k) - b.w(k)));
        g = std::max(g, std::fabs(a.q(k) - b.q(k)));
      }
      return g;
    };
    const double gap =
        std::min(matrix_gap(m, rec), matrix_gap(permute_states(m), rec));
    worst_matrix = std::max(worst_matrix, gap);
  }
  EXPECT_LT(worst_moment, 1e-8);
  EXPECT_LT(worst_matrix, 1e-6);
  std::printf("    round trip: worst moment %.2e, worst matrix %.2e\n", worst_moment,
              worst_matrix);
  report(3, "1000 random models (K in 2..4): moment identity 1e-8, matrices 1e-6");
}

TEST(Acceptance, Criterion04_CanonicalTransforms) {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    const BmmppModel m = sample_random_model(1, RngSpec{seed, 920});
    const MmppModel mm{m.d0, m.event_rates()};
    const Map2Moments before = map2_moments(mm.g0, Mat2::diag(mm.g1[0], mm.g1[1]));
    const MmppModel back = canonical_to_mmpp(mmpp_to_canonical(mm));
    const Map2Moments after = map2_moments(back.g0, Mat2::diag(back.g1[0], back.g1[1]));
    worst = std::max(worst, rel(after.mu1, before.mu1));
    worst = std::max(worst, rel(after.mu2, before.mu2));
    worst = std::max(worst, rel(after.mu3, before.mu3));
    worst = std::max(worst, std::fabs(after.rhoT1 - before.rhoT1));
  }
  EXPECT_LT(worst, 1e-10);
  std::printf("    canonical round trip: worst moment deviation %.2e\n", worst);
  report(4, "1000 MMPP2 canonical round trips preserve the four moments to 1e-10");
}

TEST(Acceptance, Criterion05_FittingStudy) {
  // Small-sample regime, K = 2.
  {
    const Trace tr = simulate_trace(reference_k2(), 300, RngSpec{20, 0});
    const EmpiricalMoments em = empirical_moments(tr, 2);
    FitConfig cfg;
    cfg.rng = RngSpec{20, 1000};
    const FitResult res = fit(tr, 2, cfg);
    const MomentSet f = moment_set(res.model);
    EXPECT_LT(rel(f.mu1, em.mu1), 0.01);
    EXPECT_LT(rel(f.mu2, em.mu2), 0.01);
    EXPECT_LT(rel(f.mu3, em.mu3), 0.01);
    EXPECT_LT(rel(f.rhoT1, em.rhoT1), 0.01);
    EXPECT_LT(rel(f.beta1_sub[0], em.beta1_sub[0]), 0.01);
    EXPECT_LT(rel(f.eta_sub[0], em.eta_sub[0]), 0.01);
    EXPECT_LT(res.wall_seconds, 120.0);
  }
  // n = 1000, K = 4 regime.
  {
    const Trace tr = simulate_trace(reference_k4(), 1000, RngSpec{3, 0});
    const EmpiricalMoments em = empirical_moments(tr, 4);
    FitConfig cfg;
    cfg.rng = RngSpec{3, 1000};
    const FitResult res = fit(tr, 4, cfg);
    const MomentSet f = moment_set(res.model);
    EXPECT_LT(rel(f.mu1, em.mu1), 0.02);
    EXPECT_LT(rel(f.mu2, em.mu2), 0.02);
    EXPECT_LT(rel(f.mu3, em.mu3), 0.02);
    EXPECT_LT(rel(f.rhoT1, em.rhoT1), 0.02);
    for (int i = 0; i < 3; ++i) {
      EXPECT_LT(rel(f.beta1_sub[static_cast<std::size_t>(i)],
                    em.beta1_sub[static_cast<std::size_t>(i)]), 0.02);
      EXPECT_LT(rel(f.eta_sub[static_cast<std::size_t>(i)],
                    em.eta_sub[static_cast<std::size_t>(i)]), 0.02);
    }
    EXPECT_LT(res.wall_seconds, 120.0);
  }
  report(5, "seeded fits reproduce empirical moments (1% at n=300 K=2; 2% at n=1000 K=4)");
}

TEST(Acceptance, Criterion06_TauInsensitivity) {
  const Trace tr = simulate_trace(reference_k2(), 300, RngSpec{20, 0});
  FitConfig lo_cfg;
  lo_cfg.rng = RngSpec{20, 1000};
  lo_cfg.tau = 0.001;
  FitConfig hi_cfg = lo_cfg;
  hi_cfg.tau = 100.0;
  const FitResult lo = fit(tr, 2, lo_cfg);
  const FitResult hi = fit(tr, 2, hi_cfg);
  const MomentSet a = moment_set(lo.model);
  const MomentSet b = moment_set(hi.model);
  EXPECT_LT(rel(b.mu1, a.mu1), 0.02);
  EXPECT_LT(rel(b.mu2, a.mu2), 0.02);
  EXPECT_LT(rel(b.mu3, a.mu3), 0.02);
  EXPECT_LT(rel(b.rhoT1, a.rhoT1), 0.02);
  EXPECT_LT(rel(b.beta1_sub[0], a.beta1_sub[0]), 0.02);
  EXPECT_LT(rel(b.eta_sub[0], a.eta_sub[0]), 0.02);
  // Documented rather than asserted: with closed-form seeding both solves
  // converge immediately, so wall time barely depends on tau here.
  std::printf("    wall seconds: tau=0.001 -> %.3f, tau=100 -> %.3f\n",
              lo.wall_seconds, hi.wall_seconds);
  report(6, "fits at tau=0.001 and tau=100 agree within 2%; times documented above");
}

TEST(Acceptance, Criterion07_EmComparison) {
  const Trace tr = simulate_trace(reference_k2(), 300, RngSpec{20, 0});
  const EmpiricalMoments em = empirical_moments(tr, 2);
  FitConfig cfg;
  cfg.rng = RngSpec{20, 1000};
  const FitResult seq = fit(tr, 2, cfg);
  const double ll_seq = loglik(seq.model, tr).loglik;

  const BmmppModel close_start(Mat2{{{-10.0, 3.0}, {5.0, -15.0}}},
                               {Vec2{{4.0, 4.0}}, Vec2{{3.0, 6.0}}});
  const FitResult em_close = em_fit(tr, 2, close_start);
  const double ll_em = loglik(em_close.model, tr).loglik;
  EXPECT_LT(std::fabs(ll_em - ll_seq), 1.0)
      << "ll_em " << ll_em << " vs ll_seq " << ll_seq;

  const BmmppModel far_start(Mat2{{{-25.0, 10.0}, {13.0, -27.0}}},
                             {Vec2{{9.0, 6.0}}, Vec2{{5.0, 4.0}}});
  const FitResult em_far = em_fit(tr, 2, far_start);
  const double rho_far = rho_T(em_far.model, 1);
  const double rho_seq = rho_T(seq.model, 1);
  // The distant-start EM lands on a solution whose lag-1 autocorrelation is
  // far from the empirical value; the sequential fit is not start-sensitive.
  EXPECT_GT(std::fabs(rho_far - em.rhoT1) / em.rhoT1, 0.5)
      << "rho_far " << rho_far << " vs empirical " << em.rhoT1;
  EXPECT_LT(std::fabs(rho_seq - em.rhoT1) / em.rhoT1, 0.1);
  std::printf("    loglik: sequential %.2f, EM(close) %.2f; rhoT1: empirical %.3e, "
              "EM(far) %.3e, sequential %.3e\n",
              ll_seq, ll_em, em.rhoT1, rho_far, rho_seq);
  report(7, "EM within 1 loglik unit of the sequential fit; distant start distorts rhoT1");
}

TEST(Acceptance, Criterion08_IidBatchNullCorrelations) {
  // Constructed subclass models.
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const BmmppModel base = sample_random_model(4, RngSpec{seed, 930});
    const MmppModel mmpp{base.d0, base.event_rates()};
    CounterRng rng(RngSpec{seed, 931});
    std::vector<double> pmf(4);
    double total = 0.0;
    for (double &p : pmf) {
      p = 0.05 + rng.next_u01();
      total += p;
    }
    for (double &p : pmf) p /= total;
    const BmmppModel iid = make_iid_batch(mmpp, pmf);
    EXPECT_LT(std::fabs(cov_corr_TB(iid).corr), 1e-10);
    EXPECT_LT(std::fabs(rho_B(iid, 1)), 1e-10);
  }
  // Constrained fits.
  for (std::uint64_t seed : {5ull, 9ull}) {
    const Trace tr = simulate_trace(reference_k4(), 2000, RngSpec{seed, 0});
    FitConfig cfg;
    cfg.rng = RngSpec{seed, 932};
    cfg.variant = FitConfig::Variant::IidBatch;
    cfg.multistart = 40;
    const FitResult res = fit(tr, 4, cfg);
    EXPECT_LT(std::fabs(cov_corr_TB(res.model).corr), 1e-10);
    EXPECT_LT(std::fabs(rho_B(res.model, 1)), 1e-10);
  }
  report(8, "iid-batch constructions and fits have corr(T,B) = rho_B(1) = 0");
}

TEST(Acceptance, Criterion09_Counting) {
  // Exact Poisson reduction.
  const double lambda = 3.0, t = 2.5;
  const BmmppModel poisson(Mat2{{{-lambda - 1.0, 1.0}, {1.0, -lambda - 1.0}}},
                           {Vec2{{lambda, lambda}}});
  const CountDistribution pd = count_distribution(poisson, t, 1e-12);
  double worst = 0.0;
  for (int n = 0; n < 40; ++n)
    worst = std::max(worst,
                     std::fabs(pd.probs[static_cast<std::size_t>(n)] -
                               std::exp(-lambda * t + n * std::log(lambda * t) -
                                        std::lgamma(n + 1.0))));
  EXPECT_LT(worst, 1e-10);
  EXPECT_NEAR(palm_mean(poisson, t), lambda * t, 1e-10);
  EXPECT_NEAR(count_variance(poisson, t), lambda * t, 1e-9);

  // Monte-Carlo check of mean and variance over 1e4 stationary replications.
  const BmmppModel m = reference_k2();
  const double horizon = 2.0;
  const std::size_t reps = 10000;
  const Vec2 pi = stationary_of_generator(m.generator());
  CounterRng rng(RngSpec{2026, 940});
  std::vector<double> weights[2] = {{m.y(), m.w(1), m.w(2)}, {m.r(), m.q(1), m.q(2)}};
  const double rate[2] = {-m.x(), -m.u()};
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    int state = rng.next_u01() < pi[0] ? 0 : 1;
    double clock = 0.0;
    long count = 0;
    for (;;) {
      clock += rng.next_exp(rate[state]);
      if (clock > horizon) break;
      const int o = rng.next_discrete(weights[state], 3);
      if (o == 0) state = 1 - state;
      else ++count;
    }
    sum += double(count);
    sum2 += double(count) * double(count);
  }
  const double mc_mean = sum / double(reps);
  const double mc_var = sum2 / double(reps) - mc_mean * mc_mean;
  const double se_mean = std::sqrt(mc_var / double(reps));
  const double se_var = mc_var * std::sqrt(2.0 / double(reps - 1));
  EXPECT_NEAR(mc_mean, palm_mean(m, horizon), 4.0 * se_mean);
  EXPECT_NEAR(mc_var, count_variance(m, horizon), 4.0 * se_var);

  // Truncation masses stay below the configured budget.
  for (double eps : {1e-6, 1e-8, 1e-10}) {
    for (double h : {0.5, 2.0, 10.0}) {
      const CountDistribution d = count_distribution(m, h, eps);
      EXPECT_LT(d.truncation_mass, eps);
      const CountDistribution dk = count_distribution_size_k(m, h, 2, eps);
      EXPECT_LT(dk.truncation_mass, eps);
    }
  }
  report(9, "Poisson reduction exact; mean/variance within 4 SE of 1e4 runs; "
            "truncation under budget");
}

TEST(Acceptance, Criterion10_Queue) {
  // M/M/1 reduction.
  const BmmppModel poisson(Mat2{{{-2.0, 1.0}, {1.0, -2.0}}}, {Vec2{{1.0, 1.0}}});
  QueueSpec mm1;
  mm1.service_rate = 2.0;
  mm1.tail_eps = 1e-12;
  const QueueLengthDist geo = queue_length_at_departures(poisson, mm1);
  double worst = 0.0;
  for (std::size_t i = 0; i < std::min<std::size_t>(geo.z.size(), 30); ++i)
    worst = std::max(worst, std::fabs(geo.z[i] - 0.5 * std::pow(0.5, double(i))));
  EXPECT_LT(worst, 1e-8);

  // Analytic vs simulated at three intensities on the reference model.
  const BmmppModel m = reference_k2();
  const double lam_c = 1.64 / 0.28;
  std::vector<QueueLengthDist> dists;
  for (double rho : {0.3, 0.5, 0.7}) {
    QueueSpec spec;
    spec.service_rate = lam_c / rho;
    const QueueLengthDist z = queue_length_at_departures(m, spec);
    const std::vector<int> sim = simulate_queue_lengths(
        m, spec, 1000000, RngSpec{static_cast<std::uint64_t>(rho * 100), 950});
    const std::size_t blocks = 50, len = sim.size() / blocks;
    for (std::size_t level = 0; level < z.z.size(); ++level) {
      if (z.z[level] < 1e-4) break;
      std::vector<double> means(blocks, 0.0);
      for (std::size_t b = 0; b < blocks; ++b) {
        for (std::size_t i = 0; i < len; ++i)
          means[b] += (sim[b * len + i] == static_cast<int>(level)) ? 1.0 : 0.0;
        means[b] /= double(len);
      }
      const MeanSe ms = mean_se(means);
      EXPECT_NEAR(ms.mean, z.z[level], 4.0 * ms.se + 1e-6)
          << "rho " << rho << " level " << level;
    }
    dists.push_back(z);
  }
  // Heavier load dominates pointwise in the tail.
  for (std::size_t i = 0; i < 15; ++i)
    EXPECT_GE(dists[2].tail(i) + 1e-12, dists[0].tail(i));
  report(10, "M/M/1 exact to 1e-8; matrix-analytic matches 1e6-departure oracle at "
             "rho 0.3/0.5/0.7; tails ordered");
}

// The public packet capture is used when available (point BMMPP_BELLCORE at
// it); otherwise a synthetic stand-in exercises the same pipeline
// end to end and the table checks are skipped.
TEST(Acceptance, Criterion11_PacketDataReproduction) {
  const char *env = std::getenv("BMMPP_BELLCORE");
  std::string path = env ? env : "";
  if (path.empty()) {
    std::ifstream probe("BC-pAug89.TL");
    if (probe.good()) path = "BC-pAug89.TL";
  }

  if (!path.empty()) {
    const RawPacketTrace raw = read_packet_file(path);
    const Trace f1 = aggregate_format1(raw, 1e-3, 4);
    const TraceSummary s1 = trace_summary(f1);
    EXPECT_NEAR(s1.mean, 0.0036, 5e-5);
    EXPECT_NEAR(s1.cv, 1.6553, 5e-5);
    EXPECT_NEAR(s1.max, 0.3420, 5e-5);

    FitConfig cfg;
    cfg.rng = RngSpec{1, 0};
    const FitResult res = fit(f1, 4, cfg);
    const DescriptorReport est = describe(res.model);
    const DescriptorReport emp = empirical_report(f1, 4);
    EXPECT_LT(rel(est.mu1, emp.mu1), 0.02);
    EXPECT_LT(rel(est.mu2, emp.mu2), 0.02);
    EXPECT_LT(rel(est.mu3, emp.mu3), 0.02);
    EXPECT_LT(rel(est.rhoT.at(1), emp.rhoT.at(1)), 0.02);
    EXPECT_LT(rel(est.cv, emp.cv), 0.02);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_LT(rel(est.beta1_sub[i], emp.beta1_sub[i]), 0.02);
      EXPECT_LT(rel(est.eta_sub[i], emp.eta_sub[i]), 0.02);
    }
    // The lag-2/3 autocorrelations are underestimated by the model class;
    // reproduce the fitted values loosely rather than the empirical ones.
    EXPECT_LT(rel(est.rhoT.at(2), emp.rhoT.at(2)), 0.5);
    report(11, "real packet capture: summary statistics and fitted table reproduced");
    return;
  }

  // Synthetic stand-in: same pipeline, structural checks only.
  const RawPacketTrace raw = make_standin_packets(200000, 1);
  AggregateReport rep1, rep2;
  const Trace f1 = aggregate_format1(raw, 1e-3, 4, &rep1);
  const Trace f2 = aggregate_format2(raw, 100, 1e-6, &rep2);
  long packets = 0;
  for (int b : f1.b) packets += b;
  EXPECT_EQ(packets, static_cast<long>(raw.timestamps.size()));
  EXPECT_EQ(f2.size(), raw.timestamps.size());
  EXPECT_GE(f1.max_batch(), 2);
  EXPECT_LE(f1.max_batch(), 4);

  const TraceSummary s1 = trace_summary(f1);
  EXPECT_GT(s1.cv, 1.0);
  EXPECT_GE(s1.min, 1e-3 - 1e-12);

  FitConfig cfg;
  cfg.rng = RngSpec{1, 960};
  const FitResult fit1 = fit(f1, f1.max_batch(), cfg);
  const FitResult fit2 = fit(f2, 2, cfg);
  EXPECT_TRUE(validate(fit1.model).ok());
  EXPECT_TRUE(validate(fit2.model).ok());
  // Structural sanity bounds only: the binned stand-in is not exactly in
  // the model class (the real-capture branch above carries the strict
  // tolerances of the criterion).
  const EmpiricalMoments em1 = empirical_moments(f1, f1.max_batch());
  const MomentSet fs1 = moment_set(fit1.model);
  EXPECT_LT(rel(fs1.mu1, em1.mu1), 0.05);
  for (std::size_t i = 0; i < fs1.beta1_sub.size(); ++i)
    EXPECT_LT(rel(fs1.beta1_sub[i], em1.beta1_sub[i]), 0.12);

  // Downstream analyses run on the fitted models.
  const CountDistribution cd = count_distribution_size_k(fit2.model, 0.05, 2, 1e-8);
  EXPECT_LT(cd.truncation_mass, 1e-8);
  QueueSpec spec;
  spec.service_rate = batch_moment(fit1.model, 1) / time_moment(fit1.model, 1) / 0.5;
  const QueueLengthDist z = queue_length_at_departures(fit1.model, spec);
  EXPECT_GT(z.z.size(), 2u);
  std::printf("    SKIPPED real-data table checks (capture not present); synthetic "
              "stand-in pipeline exercised\n");
  report(11, "packet pipeline: ingest -> fit -> counting/queue on the stand-in");
}

}  // namespace
