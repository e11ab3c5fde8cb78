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
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bmmpp/mat2.hpp"

namespace bmmpp {

// Error with a machine-readable stage tag, used uniformly across modules.
class Error : public std::runtime_error {
 public:
  Error(std::string stage, const std::string &message)
      : std::runtime_error(message), stage_(std::move(stage)) {}
  const std::string &stage() const { return stage_; }

 private:
  std::string stage_;
};

// Absolute tolerance for generator row sums and probability sums; all rates
// handled here are O(1)-O(1e2).
inline constexpr double kValidationTol = 1e-12;

// Two-state batch Markov modulated Poisson process with maximum batch size K.
//
// d0 holds the silent-transition rates
//     [ x  y ]
//     [ r  u ]
// and dk[k-1] = diag(w_k, q_k) holds the rates of events of batch size k,
// for k = 1..K.  The last matrix closes the rows: sum_k d(k) has zero row
// sums, so the sum is the generator of the underlying phase process.
struct BmmppModel {
  Mat2 d0;
  std::vector<Vec2> dk;  // dk[k-1] = diagonal of D_k, k = 1..K

  BmmppModel() = default;
  BmmppModel(const Mat2 &d0_, std::vector<Vec2> dk_)
      : d0(d0_), dk(std::move(dk_)) {}

  int K() const { return static_cast<int>(dk.size()); }

  double x() const { return d0(0, 0); }
  double y() const { return d0(0, 1); }
  double r() const { return d0(1, 0); }
  double u() const { return d0(1, 1); }
  double w(int k) const { return dk.at(static_cast<std::size_t>(k) - 1)[0]; }
  double q(int k) const { return dk.at(static_cast<std::size_t>(k) - 1)[1]; }

  Mat2 dmat(int k) const {
    const Vec2 &d = dk.at(static_cast<std::size_t>(k) - 1);
    return Mat2::diag(d[0], d[1]);
  }

  // D = sum_{k>=1} D_k (total event-rate matrix, diagonal).
  Vec2 event_rates() const {
    Vec2 d{{0.0, 0.0}};
    for (const Vec2 &m : dk) {
      d[0] += m[0];
      d[1] += m[1];
    }
    return d;
  }

  // D_r^* = sum_k k^r D_k, as a diagonal.
  Vec2 batch_weighted_rates(int r) const {
    Vec2 d{{0.0, 0.0}};
    for (int k = 1; k <= K(); ++k) {
      const double kr = std::pow(static_cast<double>(k), r);
      d[0] += kr * dk[static_cast<std::size_t>(k) - 1][0];
      d[1] += kr * dk[static_cast<std::size_t>(k) - 1][1];
    }
    return d;
  }

  // Generator of the phase process, Q = D0 + D1 + ... + DK.
  Mat2 generator() const {
    const Vec2 d = event_rates();
    Mat2 q = d0;
    q(0, 0) += d[0];
    q(1, 1) += d[1];
    return q;
  }

  bool irreducible() const { return y() > 0.0 && r() > 0.0; }
};

// Two-state MMPP: silent rates g0, event rates on the diagonal of g1.
struct MmppModel {
  Mat2 g0;
  Vec2 g1;  // diagonal of G_1

  BmmppModel as_bmmpp() const { return BmmppModel(g0, {g1}); }
};

// Probability parameterization: exponential sojourn rates and per-event
// transition probabilities.  p11k[k-1] = p_{11,k}, etc.
struct ProbParams {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double p120 = 0.0;
  double p210 = 0.0;
  std::vector<double> p11k;
  std::vector<double> p22k;
};

struct Violation {
  std::string invariant;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<std::string> warnings;

  bool ok() const { return violations.empty(); }

  std::string to_string() const {
    std::ostringstream os;
    for (const auto &v : violations) os << v.invariant << ": " << v.detail << "\n";
    for (const auto &w : warnings) os << "warning: " << w << "\n";
    return os.str();
  }
};

namespace detail {
inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}
}  // namespace detail

// Checks every structural invariant of the representation.  Returns an empty
// report iff the model is a valid BMMPP_2(K).  Reducibility (y = 0 or r = 0)
// and a zero total event rate are reported as warnings, not violations:
// such models can still be simulated but have no stationary descriptors.
inline ValidationReport validate(const BmmppModel &model) {
  ValidationReport rep;
  if (model.K() < 1) {
    rep.violations.push_back({"K >= 1", "model has no event matrices"});
    return rep;
  }
  if (!(model.x() < 0.0))
    rep.violations.push_back({"x < 0", "d0(0,0) = " + detail::fmt(model.x())});
  if (!(model.u() < 0.0))
    rep.violations.push_back({"u < 0", "d0(1,1) = " + detail::fmt(model.u())});
  if (model.y() < 0.0)
    rep.violations.push_back({"y >= 0", "d0(0,1) = " + detail::fmt(model.y())});
  if (model.r() < 0.0)
    rep.violations.push_back({"r >= 0", "d0(1,0) = " + detail::fmt(model.r())});
  for (int k = 1; k <= model.K(); ++k) {
    if (model.w(k) < 0.0)
      rep.violations.push_back(
          {"w_k >= 0", "w_" + std::to_string(k) + " = " + detail::fmt(model.w(k))});
    if (model.q(k) < 0.0)
      rep.violations.push_back(
          {"q_k >= 0", "q_" + std::to_string(k) + " = " + detail::fmt(model.q(k))});
  }
  // Row sums: absolute tolerance for O(1)-O(1e2) rates, with a relative
  // term so that packet-scale rates (1e4/s) are not rejected for closure
  // error below double precision.
  const double scale = std::max(std::fabs(model.x()), std::fabs(model.u()));
  const double row_tol = kValidationTol + 1e-15 * scale;
  const Vec2 row = model.generator().row_sums();
  if (std::fabs(row[0]) > row_tol)
    rep.violations.push_back(
        {"row sum of sum_k D_k = 0", "row 1 sum = " + detail::fmt(row[0])});
  if (std::fabs(row[1]) > row_tol)
    rep.violations.push_back(
        {"row sum of sum_k D_k = 0", "row 2 sum = " + detail::fmt(row[1])});
  if (!model.irreducible())
    rep.warnings.push_back("reducible phase process (y = 0 or r = 0); "
                           "stationary descriptors are undefined");
  const Vec2 d = model.event_rates();
  if (d[0] + d[1] <= 0.0) rep.warnings.push_back("event rate zero in both states");
  return rep;
}

inline void require_valid(const BmmppModel &model, const char *stage) {
  ValidationReport rep = validate(model);
  if (!rep.ok()) throw Error(stage, "invalid model:\n" + rep.to_string());
}

// Clamps the tiny negative closure entries (> -tol) that the row-sum
// constraint produces in floating point; larger negatives are left for
// validate() to report.
inline BmmppModel clamp_closure(BmmppModel model, double tol = 1e-12) {
  for (Vec2 &d : model.dk) {
    for (int i = 0; i < 2; ++i)
      if (d[i] < 0.0 && d[i] > -tol) d[i] = 0.0;
  }
  return model;
}

// Builds the rate-matrix representation from the probability one:
// x = -lambda1, y = lambda1 p120, w_k = lambda1 p11k, and symmetrically for
// the second state.
inline BmmppModel from_prob_params(const ProbParams &p) {
  if (p.p11k.size() != p.p22k.size())
    throw Error("from_prob_params", "p11k and p22k must have the same length");
  if (!(p.lambda1 > 0.0) || !(p.lambda2 > 0.0))
    throw Error("from_prob_params", "sojourn rates must be positive");
  auto check_probs = [](double p0, const std::vector<double> &pk, const char *who) {
    double total = p0;
    if (p0 < 0.0 || p0 > 1.0)
      throw Error("from_prob_params", std::string(who) + ": switch probability outside [0,1]");
    for (double v : pk) {
      if (v < 0.0 || v > 1.0)
        throw Error("from_prob_params", std::string(who) + ": batch probability outside [0,1]");
      total += v;
    }
    if (std::fabs(total - 1.0) > kValidationTol)
      throw Error("from_prob_params",
                  std::string(who) + ": probabilities sum to " + detail::fmt(total));
  };
  check_probs(p.p120, p.p11k, "state 1");
  check_probs(p.p210, p.p22k, "state 2");

  BmmppModel model;
  model.d0 = Mat2{{{-p.lambda1, p.lambda1 * p.p120},
                   {p.lambda2 * p.p210, -p.lambda2}}};
  model.dk.resize(p.p11k.size());
  for (std::size_t k = 0; k < p.p11k.size(); ++k)
    model.dk[k] = Vec2{{p.lambda1 * p.p11k[k], p.lambda2 * p.p22k[k]}};
  return model;
}

// The MMPP obtained by forgetting batch sizes: G0 = D0, G1 = D1 + ... + DK.
// It has exactly the same inter-event time behaviour as the source model.
inline MmppModel embedded_mmpp(const BmmppModel &model) {
  require_valid(model, "embedded_mmpp");
  return MmppModel{model.d0, model.event_rates()};
}

// The BMMPP_2(2) that isolates batch size i: {D0, D_i, sum_{k != i} D_k}.
inline BmmppModel sub_bmmpp2(const BmmppModel &model, int i) {
  require_valid(model, "sub_bmmpp2");
  if (i < 1 || i > model.K())
    throw Error("sub_bmmpp2", "batch index " + std::to_string(i) +
                                  " out of range 1.." + std::to_string(model.K()));
  const Vec2 total = model.event_rates();
  const Vec2 di = model.dk[static_cast<std::size_t>(i) - 1];
  return BmmppModel(model.d0, {di, Vec2{{total[0] - di[0], total[1] - di[1]}}});
}

// Swap the two states (simultaneous row/column permutation of every matrix).
inline BmmppModel permute_states(const BmmppModel &model) {
  BmmppModel out;
  out.d0 = model.d0.permuted();
  out.dk.resize(model.dk.size());
  for (std::size_t k = 0; k < model.dk.size(); ++k)
    out.dk[k] = Vec2{{model.dk[k][1], model.dk[k][0]}};
  return out;
}

// Reorders the states so that x + y >= r + u, the convention assumed by the
// canonical-form machinery.  Ties keep the input order; idempotent.
inline BmmppModel normalize_state_order(const BmmppModel &model) {
  require_valid(model, "normalize_state_order");
  if (model.x() + model.y() >= model.r() + model.u()) return model;
  return permute_states(model);
}

// MMPP with i.i.d. batch sizes: D_k = p_k * G1.  Such a model always has
// corr(T,B) = 0 and rho_B(l) = 0.
inline BmmppModel make_iid_batch(const MmppModel &mmpp, const std::vector<double> &pmf) {
  if (pmf.empty()) throw Error("make_iid_batch", "empty batch-size pmf");
  double total = 0.0;
  for (double p : pmf) {
    if (p < 0.0) throw Error("make_iid_batch", "negative pmf entry");
    total += p;
  }
  if (std::fabs(total - 1.0) > kValidationTol)
    throw Error("make_iid_batch", "pmf sums to " + detail::fmt(total));
  BmmppModel model;
  model.d0 = mmpp.g0;
  model.dk.resize(pmf.size());
  for (std::size_t k = 0; k < pmf.size(); ++k)
    model.dk[k] = Vec2{{pmf[k] * mmpp.g1[0], pmf[k] * mmpp.g1[1]}};
  return model;
}

}  // namespace bmmpp
