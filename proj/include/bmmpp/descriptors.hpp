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
#include <map>
#include <vector>

#include "bmmpp/mat2.hpp"
#include "bmmpp/model.hpp"

namespace bmmpp {

// Stationary structure of the event-embedded chain.
//
//   pi:    stationary vector of the phase generator Q
//   pstar: P* = (-D0)^{-1} D, the phase chain observed at event epochs
//   phi:   stationary vector of P*; the inter-event time is then
//          phase-type with representation (phi, D0)
//   gamma: the sub-unit eigenvalue of P*, which drives the geometric decay
//          of the inter-event autocorrelations.  P* is stochastic, so the
//          other eigenvalue is 1 and gamma = trace(P*) - 1.
struct StationaryVectors {
  Vec2 pi;
  Vec2 phi;
  Mat2 pstar;
  double gamma = 0.0;
};

inline StationaryVectors stationary_vectors(const BmmppModel &model) {
  require_valid(model, "stationary_vectors");
  if (!model.irreducible())
    throw Error("stationary_vectors", "reducible model has no stationary version");
  const Vec2 d = model.event_rates();
  if (d[0] + d[1] <= 0.0)
    throw Error("stationary_vectors", "zero event rate (D e = 0)");

  StationaryVectors sv;
  sv.pi = stationary_of_generator(model.generator());
  const Mat2 neg_d0_inv = (model.d0 * -1.0).inverse();
  sv.pstar = neg_d0_inv * Mat2::diag(d[0], d[1]);
  const Vec2 pid{{sv.pi[0] * d[0], sv.pi[1] * d[1]}};
  const double rate = pid.sum();
  sv.phi = Vec2{{pid[0] / rate, pid[1] / rate}};
  sv.gamma = sv.pstar.trace() - 1.0;
  return sv;
}

namespace detail {

// phi (-D0)^{-r} applied iteratively; returns the row vector after r solves.
inline Vec2 phi_d0_inv_pow(const StationaryVectors &sv, const Mat2 &d0, int r) {
  const Mat2 inv = (d0 * -1.0).inverse();
  Vec2 v = sv.phi;
  for (int i = 0; i < r; ++i) v = v * inv;
  return v;
}

inline double factorial(int r) {
  double f = 1.0;
  for (int i = 2; i <= r; ++i) f *= i;
  return f;
}

}  // namespace detail

// mu_r = r! phi (-D0)^{-r} e.
inline double time_moment(const BmmppModel &model, int r,
                          const StationaryVectors &sv) {
  if (r < 1) throw Error("time_moments", "moment order must be >= 1");
  return detail::factorial(r) * detail::phi_d0_inv_pow(sv, model.d0, r).sum();
}

inline double time_moment(const BmmppModel &model, int r) {
  return time_moment(model, r, stationary_vectors(model));
}

// rho_T(l) = gamma^l (mu2 - 2 mu1^2) / (2 (mu2 - mu1^2)).
inline double rho_T(const BmmppModel &model, int l, const StationaryVectors &sv) {
  if (l < 1) throw Error("rho_T", "lag must be >= 1");
  const double mu1 = time_moment(model, 1, sv);
  const double mu2 = time_moment(model, 2, sv);
  const double var = mu2 - mu1 * mu1;
  if (!(var > 0.0)) throw Error("rho_T", "degenerate inter-event variance");
  return std::pow(sv.gamma, l) * (mu2 - 2.0 * mu1 * mu1) / (2.0 * var);
}

inline double rho_T(const BmmppModel &model, int l) {
  return rho_T(model, l, stationary_vectors(model));
}

// P(B = k) = phi (-D0)^{-1} D_k e, k = 1..K.
inline std::vector<double> batch_pmf(const BmmppModel &model,
                                     const StationaryVectors &sv) {
  const Vec2 v = detail::phi_d0_inv_pow(sv, model.d0, 1);
  std::vector<double> pmf(static_cast<std::size_t>(model.K()));
  for (int k = 1; k <= model.K(); ++k) {
    const Vec2 d = model.dk[static_cast<std::size_t>(k) - 1];
    pmf[static_cast<std::size_t>(k) - 1] = v[0] * d[0] + v[1] * d[1];
  }
  return pmf;
}

inline std::vector<double> batch_pmf(const BmmppModel &model) {
  return batch_pmf(model, stationary_vectors(model));
}

// beta_r = phi (-D0)^{-1} D_r^* e with D_r^* = sum_k k^r D_k.
inline double batch_moment(const BmmppModel &model, int r,
                           const StationaryVectors &sv) {
  if (r < 1) throw Error("batch_moments", "moment order must be >= 1");
  const Vec2 v = detail::phi_d0_inv_pow(sv, model.d0, 1);
  const Vec2 d = model.batch_weighted_rates(r);
  return v[0] * d[0] + v[1] * d[1];
}

inline double batch_moment(const BmmppModel &model, int r) {
  return batch_moment(model, r, stationary_vectors(model));
}

// rho_B(l) = (phi (-D0)^{-1} D1* [P*]^{l-1} (-D0)^{-1} D1* e - beta1^2) / var(B).
inline double rho_B(const BmmppModel &model, int l, const StationaryVectors &sv) {
  if (l < 1) throw Error("rho_B", "lag must be >= 1");
  const double beta1 = batch_moment(model, 1, sv);
  const double beta2 = batch_moment(model, 2, sv);
  const double var = beta2 - beta1 * beta1;
  if (!(var > 0.0)) throw Error("rho_B", "zero batch-size variance");
  const Mat2 inv = (model.d0 * -1.0).inverse();
  const Vec2 d1 = model.batch_weighted_rates(1);
  const Mat2 d1m = Mat2::diag(d1[0], d1[1]);
  const Vec2 left = (sv.phi * inv) * d1m;
  const Vec2 right = inv * (d1m * ones2());
  const Vec2 mid = mat2_pow(sv.pstar, static_cast<unsigned>(l - 1)) * right;
  return (left.dot(mid) - beta1 * beta1) / var;
}

inline double rho_B(const BmmppModel &model, int l) {
  return rho_B(model, l, stationary_vectors(model));
}

// eta = E[T B] = phi (-D0)^{-2} D_1^* e.
inline double eta(const BmmppModel &model, const StationaryVectors &sv) {
  const Vec2 v = detail::phi_d0_inv_pow(sv, model.d0, 2);
  const Vec2 d = model.batch_weighted_rates(1);
  return v[0] * d[0] + v[1] * d[1];
}

inline double eta(const BmmppModel &model) {
  return eta(model, stationary_vectors(model));
}

struct CovCorr {
  double cov = 0.0;
  double corr = 0.0;
};

inline CovCorr cov_corr_TB(const BmmppModel &model, const StationaryVectors &sv) {
  const double mu1 = time_moment(model, 1, sv);
  const double mu2 = time_moment(model, 2, sv);
  const double beta1 = batch_moment(model, 1, sv);
  const double beta2 = batch_moment(model, 2, sv);
  const double cov = eta(model, sv) - mu1 * beta1;
  const double st = std::sqrt(mu2 - mu1 * mu1);
  const double sb = std::sqrt(std::max(0.0, beta2 - beta1 * beta1));
  CovCorr out;
  out.cov = cov;
  out.corr = (sb > 0.0) ? cov / (st * sb) : 0.0;
  return out;
}

inline CovCorr cov_corr_TB(const BmmppModel &model) {
  return cov_corr_TB(model, stationary_vectors(model));
}

// The 2(K+1) moments that characterize a BMMPP_2(K): the first three
// inter-event moments and lag-1 autocorrelation, plus for each batch index
// i = 1..K-1 the pair (beta1, eta) of the sub-process {D0, D_i, sum_{k!=i} D_k}.
struct MomentSet {
  double mu1 = 0.0;
  double mu2 = 0.0;
  double mu3 = 0.0;
  double rhoT1 = 0.0;
  std::vector<double> beta1_sub;  // beta1^{(i)}, i = 1..K-1
  std::vector<double> eta_sub;    // eta^{(i)},   i = 1..K-1

  int K() const { return static_cast<int>(beta1_sub.size()) + 1; }
};

inline MomentSet moment_set(const BmmppModel &model) {
  const StationaryVectors sv = stationary_vectors(model);
  MomentSet ms;
  ms.mu1 = time_moment(model, 1, sv);
  ms.mu2 = time_moment(model, 2, sv);
  ms.mu3 = time_moment(model, 3, sv);
  ms.rhoT1 = rho_T(model, 1, sv);
  for (int i = 1; i <= model.K() - 1; ++i) {
    const BmmppModel sub = sub_bmmpp2(model, i);
    // Sub-processes share D0, hence stationary structure, with the parent.
    ms.beta1_sub.push_back(batch_moment(sub, 1, sv));
    ms.eta_sub.push_back(eta(sub, sv));
  }
  return ms;
}

// Full descriptor table for reporting: moments, shape statistics,
// autocorrelations, batch pmf and joint descriptors.
struct DescriptorReport {
  double mu1 = 0.0, mu2 = 0.0, mu3 = 0.0, mu4 = 0.0;
  double cv = 0.0, skewness = 0.0, kurtosis = 0.0;
  std::map<int, double> rhoT;   // lag -> coefficient
  std::map<int, double> beta;   // order -> E[B^r]
  std::map<int, double> rhoB;   // lag -> coefficient
  double eta = 0.0;
  double covTB = 0.0, corrTB = 0.0;
  std::vector<double> pmfB;     // P(B = k), k = 1..K
  std::vector<double> beta1_sub, eta_sub;
};

namespace detail {
inline void fill_shape_stats(DescriptorReport &rep) {
  const double var = rep.mu2 - rep.mu1 * rep.mu1;
  const double sd = std::sqrt(std::max(0.0, var));
  rep.cv = sd / rep.mu1;
  const double m3c = rep.mu3 - 3.0 * rep.mu1 * rep.mu2 + 2.0 * rep.mu1 * rep.mu1 * rep.mu1;
  const double m4c = rep.mu4 - 4.0 * rep.mu1 * rep.mu3 +
                     6.0 * rep.mu1 * rep.mu1 * rep.mu2 -
                     3.0 * rep.mu1 * rep.mu1 * rep.mu1 * rep.mu1;
  rep.skewness = (sd > 0.0) ? m3c / (sd * sd * sd) : 0.0;
  rep.kurtosis = (var > 0.0) ? m4c / (var * var) : 0.0;
}
}  // namespace detail

inline DescriptorReport describe(const BmmppModel &model, int max_lag = 3) {
  const StationaryVectors sv = stationary_vectors(model);
  DescriptorReport rep;
  rep.mu1 = time_moment(model, 1, sv);
  rep.mu2 = time_moment(model, 2, sv);
  rep.mu3 = time_moment(model, 3, sv);
  rep.mu4 = time_moment(model, 4, sv);
  detail::fill_shape_stats(rep);
  for (int l = 1; l <= max_lag; ++l) rep.rhoT[l] = rho_T(model, l, sv);
  rep.beta[1] = batch_moment(model, 1, sv);
  rep.beta[2] = batch_moment(model, 2, sv);
  const double varB = rep.beta[2] - rep.beta[1] * rep.beta[1];
  if (varB > 0.0)
    for (int l = 1; l <= max_lag; ++l) rep.rhoB[l] = rho_B(model, l, sv);
  rep.eta = eta(model, sv);
  const CovCorr cc = cov_corr_TB(model, sv);
  rep.covTB = cc.cov;
  rep.corrTB = cc.corr;
  rep.pmfB = batch_pmf(model, sv);
  const MomentSet ms = moment_set(model);
  rep.beta1_sub = ms.beta1_sub;
  rep.eta_sub = ms.eta_sub;
  return rep;
}

}  // namespace bmmpp
