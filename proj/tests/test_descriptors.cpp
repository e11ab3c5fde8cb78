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

#include <gtest/gtest.h>

#include <cmath>

#include "bmmpp/descriptors.hpp"
#include "bmmpp/model.hpp"
#include "bmmpp/simulate.hpp"
#include "bmmpp/trace.hpp"

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

// Unit-rate Poisson process written as a symmetric two-state model.
BmmppModel poisson_equivalent() {
  return BmmppModel(Mat2{{{-2.0, 1.0}, {1.0, -2.0}}}, {Vec2{{1.0, 1.0}}});
}

TEST(StationaryVectors, ReferenceModelClosedForm) {
  // Hand-solved 2x2 systems: pi (Q = [-2 2; 5 -5]) = (5/7, 2/7);
  // phi = pi D / (pi D e) with D = diag(3, 5) gives (0.6, 0.4);
  // gamma = trace(P*) - 1 with P* = (-D0)^{-1} D.
  const StationaryVectors sv = stationary_vectors(reference_k2());
  EXPECT_NEAR(sv.pi[0], 5.0 / 7.0, 1e-14);
  EXPECT_NEAR(sv.pi[1], 2.0 / 7.0, 1e-14);
  EXPECT_NEAR(sv.phi[0], 0.6, 1e-14);
  EXPECT_NEAR(sv.phi[1], 0.4, 1e-14);
  EXPECT_NEAR(sv.gamma, 0.375, 1e-14);
}

TEST(StationaryVectors, SymmetricModel) {
  const StationaryVectors sv = stationary_vectors(poisson_equivalent());
  EXPECT_NEAR(sv.pi[0], 0.5, 1e-14);
  EXPECT_NEAR(sv.phi[0], 0.5, 1e-14);
  EXPECT_NEAR(sv.gamma, 1.0 / 3.0, 1e-14);
}

TEST(StationaryVectors, PhiIsStationaryForPstar) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const BmmppModel m = sample_random_model(2, RngSpec{seed, 7});
    const StationaryVectors sv = stationary_vectors(m);
    const Vec2 lhs = sv.phi * sv.pstar;
    EXPECT_NEAR(lhs[0], sv.phi[0], 1e-12);
    EXPECT_NEAR(lhs[1], sv.phi[1], 1e-12);
    const Vec2 rows = sv.pstar.row_sums();
    EXPECT_NEAR(rows[0], 1.0, 1e-12);
    EXPECT_NEAR(rows[1], 1.0, 1e-12);
    EXPECT_GE(sv.gamma, 0.0);
    EXPECT_LT(sv.gamma, 1.0);
  }
}

TEST(TimeMoments, ReferenceModelMatchesKnownValues) {
  const BmmppModel m = reference_k2();
  EXPECT_NEAR(time_moment(m, 1), 0.28, 1e-12);
  EXPECT_NEAR(time_moment(m, 2), 0.16, 1e-12);
  EXPECT_NEAR(time_moment(m, 3), 0.138, 1e-12);
}

TEST(TimeMoments, UnitExponential) {
  const BmmppModel m = poisson_equivalent();
  EXPECT_NEAR(time_moment(m, 1), 1.0, 1e-12);
  EXPECT_NEAR(time_moment(m, 2), 2.0, 1e-12);
  EXPECT_NEAR(time_moment(m, 3), 6.0, 1e-12);
}

TEST(TimeMoments, K4ReferenceModel) {
  const BmmppModel m = reference_k4();
  EXPECT_NEAR(time_moment(m, 1), 0.98, 5e-3);
  EXPECT_NEAR(time_moment(m, 2), 3.34, 5e-2);
  EXPECT_NEAR(time_moment(m, 3), 17.65, 5e-1);
}

TEST(RhoT, ReferenceLag1) {
  EXPECT_NEAR(rho_T(reference_k2(), 1), 7.35e-3, 5e-6);
}

TEST(RhoT, PoissonHasZeroAutocorrelation) {
  for (int l = 1; l <= 5; ++l)
    EXPECT_NEAR(rho_T(poisson_equivalent(), l), 0.0, 1e-14);
}

TEST(RhoT, GeometricDecayRatioIsGamma) {
  const BmmppModel m = reference_k4();
  const StationaryVectors sv = stationary_vectors(m);
  for (int l = 1; l <= 4; ++l)
    EXPECT_NEAR(rho_T(m, l + 1) / rho_T(m, l), sv.gamma, 1e-12);
}

TEST(BatchPmf, ReferenceModel) {
  const std::vector<double> pmf = batch_pmf(reference_k2());
  ASSERT_EQ(pmf.size(), 2u);
  EXPECT_NEAR(pmf[0], 0.36, 1e-12);
  EXPECT_NEAR(pmf[1], 0.64, 1e-12);
}

TEST(BatchPmf, SingleBatchModel) {
  const std::vector<double> pmf = batch_pmf(poisson_equivalent());
  ASSERT_EQ(pmf.size(), 1u);
  EXPECT_NEAR(pmf[0], 1.0, 1e-12);
}

TEST(BatchPmf, SumsToOneAndMatchesBeta1) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const BmmppModel m = sample_random_model(4, RngSpec{seed, 3});
    const std::vector<double> pmf = batch_pmf(m);
    double total = 0.0, mean = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) {
      EXPECT_GE(pmf[k], 0.0);
      total += pmf[k];
      mean += static_cast<double>(k + 1) * pmf[k];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_NEAR(mean, batch_moment(m, 1), 1e-12);
  }
}

TEST(BatchMoments, ReferenceModel) {
  const BmmppModel m = reference_k2();
  EXPECT_NEAR(batch_moment(m, 1), 1.64, 1e-12);
  EXPECT_NEAR(batch_moment(m, 2), 2.92, 1e-12);
}

TEST(Eta, ReferenceModel) {
  EXPECT_NEAR(eta(reference_k2()), 0.46, 1e-12);
}

TEST(CovCorr, ReferenceModel) {
  // cov = eta - mu1 beta1 = 0.46 - 0.28 * 1.64 = 8e-4;
  // corr = cov / (sd_T sd_B) with sd_T = sqrt(0.0816), sd_B = 0.48.
  const CovCorr cc = cov_corr_TB(reference_k2());
  EXPECT_NEAR(cc.cov, 8.0e-4, 1e-12);
  EXPECT_NEAR(cc.corr, 8.0e-4 / (std::sqrt(0.0816) * 0.48), 1e-12);
}

TEST(RhoB, ReferenceModelClosedForm) {
  // Evaluated by hand from the display:
  // phi(-D0)^{-1} D1* (-D0)^{-1} D1* e = 2.69, beta1^2 = 2.6896,
  // var(B) = 0.2304  =>  rho_B(1) = 0.0004 / 0.2304.
  EXPECT_NEAR(rho_B(reference_k2(), 1), 0.0004 / 0.2304, 1e-12);
}

TEST(RhoB, ConstantBatchSizeIsAnError) {
  EXPECT_THROW(rho_B(poisson_equivalent(), 1), Error);
}

TEST(ConstantBatch, K1Identities) {
  const BmmppModel m = poisson_equivalent();
  EXPECT_NEAR(batch_moment(m, 1), 1.0, 1e-14);
  EXPECT_NEAR(batch_moment(m, 2), 1.0, 1e-14);
  EXPECT_NEAR(eta(m), time_moment(m, 1), 1e-14);
  EXPECT_NEAR(cov_corr_TB(m).cov, 0.0, 1e-14);
}

TEST(MomentSet, ReferenceModelCharacterizingSet) {
  const MomentSet ms = moment_set(reference_k2());
  EXPECT_NEAR(ms.mu1, 0.28, 1e-12);
  EXPECT_NEAR(ms.mu2, 0.16, 1e-12);
  EXPECT_NEAR(ms.mu3, 0.138, 1e-12);
  EXPECT_NEAR(ms.rhoT1, 7.35e-3, 5e-6);
  ASSERT_EQ(ms.beta1_sub.size(), 1u);
  EXPECT_NEAR(ms.beta1_sub[0], 1.64, 1e-12);
  EXPECT_NEAR(ms.eta_sub[0], 0.46, 1e-12);
}

TEST(MomentSet, K1HasNoBatchPairs) {
  const MomentSet ms = moment_set(poisson_equivalent());
  EXPECT_TRUE(ms.beta1_sub.empty());
  EXPECT_TRUE(ms.eta_sub.empty());
}

TEST(MomentSet, K4ReferenceSubProcessPairs) {
  // Two-decimal reference values; tolerance is one unit in the last digit
  // because a couple of them are truncated rather than rounded (exact values
  // beta1^(3) = 1.7397, eta^(3) = 1.5363, both confirmed by hand from
  // phi (-D0)^{-1} and phi (-D0)^{-2}).
  const MomentSet ms = moment_set(reference_k4());
  ASSERT_EQ(ms.beta1_sub.size(), 3u);
  EXPECT_NEAR(ms.rhoT1, 0.22, 1e-2);
  EXPECT_NEAR(ms.beta1_sub[0], 1.42, 1e-2);
  EXPECT_NEAR(ms.beta1_sub[1], 1.86, 1e-2);
  EXPECT_NEAR(ms.beta1_sub[2], 1.73, 1e-2);
  EXPECT_NEAR(ms.eta_sub[0], 1.67, 1e-2);
  EXPECT_NEAR(ms.eta_sub[1], 1.71, 1e-2);
  EXPECT_NEAR(ms.eta_sub[2], 1.53, 1e-2);
}

TEST(Describe, ShapeStatisticsForExponential) {
  const DescriptorReport rep = describe(poisson_equivalent());
  EXPECT_NEAR(rep.cv, 1.0, 1e-12);
  EXPECT_NEAR(rep.skewness, 2.0, 1e-12);
  EXPECT_NEAR(rep.kurtosis, 9.0, 1e-12);
}

TEST(Describe, EmbeddedMmppPreservesTimeDescriptors) {
  const BmmppModel m = reference_k4();
  const BmmppModel e = embedded_mmpp(m).as_bmmpp();
  EXPECT_NEAR(time_moment(m, 1), time_moment(e, 1), 1e-12);
  EXPECT_NEAR(time_moment(m, 2), time_moment(e, 2), 1e-12);
  EXPECT_NEAR(time_moment(m, 3), time_moment(e, 3), 1e-12);
  EXPECT_NEAR(rho_T(m, 1), rho_T(e, 1), 1e-12);
  EXPECT_NEAR(rho_T(m, 3), rho_T(e, 3), 1e-12);
}

TEST(Describe, StatePermutationInvariance) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const BmmppModel m = sample_random_model(3, RngSpec{seed, 11});
    const BmmppModel p = permute_states(m);
    EXPECT_NEAR(time_moment(m, 1), time_moment(p, 1), 1e-12);
    EXPECT_NEAR(time_moment(m, 2), time_moment(p, 2), 1e-12);
    EXPECT_NEAR(rho_T(m, 1), rho_T(p, 1), 1e-12);
    EXPECT_NEAR(batch_moment(m, 1), batch_moment(p, 1), 1e-12);
    EXPECT_NEAR(eta(m), eta(p), 1e-12);
  }
}

TEST(Describe, RhoTNonnegativeAcrossRandomModels) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const BmmppModel m = sample_random_model(2, RngSpec{seed, 5});
    for (int l = 1; l <= 3; ++l) EXPECT_GE(rho_T(m, l), -1e-15);
  }
}

// Monte-Carlo cross-check of every analytic descriptor on one model; the
// full randomized sweep lives in the acceptance suite.
TEST(MonteCarlo, ReferenceModelDescriptors) {
  const BmmppModel m = reference_k2();
  const std::size_t n = 400000;
  const Trace trace = simulate_trace(m, n, RngSpec{2024, 1});

  std::vector<double> bd(trace.b.begin(), trace.b.end());
  std::vector<double> tb(n);
  for (std::size_t i = 0; i < n; ++i) tb[i] = trace.t[i] * bd[i];

  // Batch-mean standard errors over 100 blocks.
  auto block_se = [](const std::vector<double> &v) {
    const std::size_t blocks = 100;
    const std::size_t len = v.size() / blocks;
    std::vector<double> means(blocks, 0.0);
    for (std::size_t b = 0; b < blocks; ++b) {
      for (std::size_t i = 0; i < len; ++i) means[b] += v[b * len + i];
      means[b] /= static_cast<double>(len);
    }
    const double mean = sample_mean(means);
    double var = 0.0;
    for (double x : means) var += (x - mean) * (x - mean);
    var /= static_cast<double>(blocks - 1);
    return std::sqrt(var / static_cast<double>(blocks));
  };

  EXPECT_NEAR(sample_mean(trace.t), 0.28, 4.0 * block_se(trace.t));
  std::vector<double> t2(n), t3(n);
  for (std::size_t i = 0; i < n; ++i) {
    t2[i] = trace.t[i] * trace.t[i];
    t3[i] = t2[i] * trace.t[i];
  }
  EXPECT_NEAR(sample_mean(t2), 0.16, 4.0 * block_se(t2));
  EXPECT_NEAR(sample_mean(t3), 0.138, 4.0 * block_se(t3));
  EXPECT_NEAR(sample_mean(bd), 1.64, 4.0 * block_se(bd));
  EXPECT_NEAR(sample_mean(tb), 0.46, 4.0 * block_se(tb));

  // Lag-1 autocorrelation: compare against a generous 4/sqrt(n) band.
  EXPECT_NEAR(sample_autocorr(trace.t, 1), 7.35e-3, 4.0 / std::sqrt(double(n)));

  // Empirical batch pmf.
  double count1 = 0.0;
  for (int b : trace.b) count1 += (b == 1);
  EXPECT_NEAR(count1 / double(n), 0.36, 4.0 * std::sqrt(0.36 * 0.64 / double(n)));
}

}  // namespace
