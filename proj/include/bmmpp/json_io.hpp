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

#include <fstream>
#include <string>

#include <json.hpp>

#include "bmmpp/descriptors.hpp"
#include "bmmpp/fit.hpp"
#include "bmmpp/model.hpp"

namespace bmmpp {

using json = nlohmann::json;

// Model file schema:
//   {"K": 2, "D0": [[x, y], [r, u]], "Dk": [[w1, q1], [w2, q2]]}
// with matrices row-major and rates in events per unit time.
inline json model_to_json(const BmmppModel &model) {
  json j;
  j["K"] = model.K();
  j["D0"] = {{model.d0(0, 0), model.d0(0, 1)}, {model.d0(1, 0), model.d0(1, 1)}};
  json dk = json::array();
  for (const Vec2 &d : model.dk) dk.push_back({d[0], d[1]});
  j["Dk"] = dk;
  return j;
}

inline BmmppModel model_from_json(const json &j) {
  if (!j.contains("K") || !j.contains("D0") || !j.contains("Dk"))
    throw Error("model_json", "model file needs fields K, D0, Dk");
  BmmppModel model;
  const auto &d0 = j.at("D0");
  if (d0.size() != 2 || d0[0].size() != 2 || d0[1].size() != 2)
    throw Error("model_json", "D0 must be a 2x2 matrix");
  for (int i = 0; i < 2; ++i)
    for (int c = 0; c < 2; ++c) model.d0(i, c) = d0[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
  const int K = j.at("K").get<int>();
  const auto &dk = j.at("Dk");
  if (static_cast<int>(dk.size()) != K)
    throw Error("model_json", "Dk must list K diagonal pairs");
  for (const auto &pair : dk) {
    if (pair.size() != 2) throw Error("model_json", "each Dk entry is a [w, q] pair");
    model.dk.push_back(Vec2{{pair[0].get<double>(), pair[1].get<double>()}});
  }
  return model;
}

inline BmmppModel load_model(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw Error("model_json", "cannot open " + path);
  json j;
  is >> j;
  return model_from_json(j);
}

inline void save_model(const std::string &path, const BmmppModel &model) {
  std::ofstream os(path);
  if (!os) throw Error("model_json", "cannot open " + path + " for writing");
  os << model_to_json(model).dump(2) << "\n";
}

inline json report_to_json(const DescriptorReport &rep) {
  json j;
  j["mu1"] = rep.mu1;
  j["mu2"] = rep.mu2;
  j["mu3"] = rep.mu3;
  j["mu4"] = rep.mu4;
  j["cv"] = rep.cv;
  j["skewness"] = rep.skewness;
  j["kurtosis"] = rep.kurtosis;
  for (const auto &[lag, v] : rep.rhoT) j["rhoT"][std::to_string(lag)] = v;
  for (const auto &[r, v] : rep.beta) j["beta"][std::to_string(r)] = v;
  for (const auto &[lag, v] : rep.rhoB) j["rhoB"][std::to_string(lag)] = v;
  j["eta"] = rep.eta;
  j["covTB"] = rep.covTB;
  j["corrTB"] = rep.corrTB;
  j["pmfB"] = rep.pmfB;
  j["beta1_sub"] = rep.beta1_sub;
  j["eta_sub"] = rep.eta_sub;
  return j;
}

// Flat CSV row (with header) for table-reproduction scripts.
inline std::string report_csv_header(const DescriptorReport &rep) {
  std::string h = "mu1,mu2,mu3,mu4,cv,skewness,kurtosis";
  for (const auto &[lag, v] : rep.rhoT) h += ",rhoT" + std::to_string(lag);
  h += ",beta1,beta2";
  for (const auto &[lag, v] : rep.rhoB) h += ",rhoB" + std::to_string(lag);
  h += ",eta,covTB,corrTB";
  for (std::size_t k = 1; k <= rep.pmfB.size(); ++k) h += ",pB" + std::to_string(k);
  for (std::size_t i = 1; i <= rep.beta1_sub.size(); ++i) {
    h += ",beta1_sub" + std::to_string(i);
    h += ",eta_sub" + std::to_string(i);
  }
  return h;
}

inline std::string report_csv_row(const DescriptorReport &rep) {
  char buf[40];
  std::string row;
  auto add = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    if (!row.empty()) row += ',';
    row += buf;
  };
  add(rep.mu1);
  add(rep.mu2);
  add(rep.mu3);
  add(rep.mu4);
  add(rep.cv);
  add(rep.skewness);
  add(rep.kurtosis);
  for (const auto &[lag, v] : rep.rhoT) add(v);
  add(rep.beta.at(1));
  add(rep.beta.at(2));
  for (const auto &[lag, v] : rep.rhoB) add(v);
  add(rep.eta);
  add(rep.covTB);
  add(rep.corrTB);
  for (double v : rep.pmfB) add(v);
  for (std::size_t i = 0; i < rep.beta1_sub.size(); ++i) {
    add(rep.beta1_sub[i]);
    add(rep.eta_sub[i]);
  }
  return row;
}

// Two-column comparison in the descriptor-table layout: one row per
// descriptor, empirical next to estimated.
inline std::string comparison_csv(const DescriptorReport &emp,
                                  const DescriptorReport &est) {
  std::string out = "descriptor,empirical,estimated\n";
  char buf[96];
  auto row = [&](const std::string &name, double a, double b) {
    std::snprintf(buf, sizeof(buf), "%s,%.10g,%.10g\n", name.c_str(), a, b);
    out += buf;
  };
  row("mu1", emp.mu1, est.mu1);
  row("mu2", emp.mu2, est.mu2);
  row("mu3", emp.mu3, est.mu3);
  row("rhoT1", emp.rhoT.count(1) ? emp.rhoT.at(1) : 0.0,
      est.rhoT.count(1) ? est.rhoT.at(1) : 0.0);
  for (std::size_t i = 0; i < emp.beta1_sub.size() && i < est.beta1_sub.size(); ++i) {
    row("beta1_sub" + std::to_string(i + 1), emp.beta1_sub[i], est.beta1_sub[i]);
    row("eta_sub" + std::to_string(i + 1), emp.eta_sub[i], est.eta_sub[i]);
  }
  row("cv", emp.cv, est.cv);
  row("skewness", emp.skewness, est.skewness);
  row("kurtosis", emp.kurtosis, est.kurtosis);
  row("beta1", emp.beta.at(1), est.beta.at(1));
  row("beta2", emp.beta.at(2), est.beta.at(2));
  row("corrTB", emp.corrTB, est.corrTB);
  for (int l = 1; l <= 3; ++l)
    if (emp.rhoB.count(l) || est.rhoB.count(l))
      row("rhoB" + std::to_string(l), emp.rhoB.count(l) ? emp.rhoB.at(l) : 0.0,
          est.rhoB.count(l) ? est.rhoB.at(l) : 0.0);
  for (int l = 2; l <= 3; ++l)
    if (emp.rhoT.count(l) || est.rhoT.count(l))
      row("rhoT" + std::to_string(l), emp.rhoT.count(l) ? emp.rhoT.at(l) : 0.0,
          est.rhoT.count(l) ? est.rhoT.at(l) : 0.0);
  for (std::size_t k = 0; k < emp.pmfB.size() || k < est.pmfB.size(); ++k)
    row("pB" + std::to_string(k + 1), k < emp.pmfB.size() ? emp.pmfB[k] : 0.0,
        k < est.pmfB.size() ? est.pmfB[k] : 0.0);
  return out;
}

inline json fit_result_to_json(const FitResult &res) {
  json j;
  j["method"] = res.method;
  j["model"] = model_to_json(res.model);
  j["wall_seconds"] = res.wall_seconds;
  json stages = json::array();
  for (const auto &st : res.stages) {
    stages.push_back({{"stage", st.stage},
                      {"objective", st.objective},
                      {"starts", st.starts},
                      {"best_start", st.best_start},
                      {"iterations", st.iterations},
                      {"converged", st.converged}});
  }
  j["stages"] = stages;
  if (!res.em_loglik_path.empty()) j["em_loglik_path"] = res.em_loglik_path;
  return j;
}

// Standardized error envelope for the CLI.
inline json error_envelope(const std::string &stage, const std::string &message,
                           const json &data = json::object()) {
  return json{{"stage", stage}, {"message", message}, {"data", data}};
}

}  // namespace bmmpp
