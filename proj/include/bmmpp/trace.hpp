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
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bmmpp/model.hpp"

namespace bmmpp {

// Paired inter-event times and batch sizes.
struct Trace {
  std::vector<double> t;
  std::vector<int> b;
  std::string origin;  // seed, model id or source file; free-form

  std::size_t size() const { return t.size(); }

  int max_batch() const {
    int mx = 0;
    for (int v : b) mx = std::max(mx, v);
    return mx;
  }
};

inline void validate_trace(const Trace &trace, int K = 0) {
  if (trace.t.size() != trace.b.size())
    throw Error("trace", "t and b have different lengths");
  if (trace.t.empty()) throw Error("trace", "empty trace");
  for (std::size_t i = 0; i < trace.t.size(); ++i) {
    if (!(trace.t[i] > 0.0))
      throw Error("trace", "nonpositive inter-event time at row " + std::to_string(i));
    if (trace.b[i] < 1 || (K > 0 && trace.b[i] > K))
      throw Error("trace", "batch size out of range at row " + std::to_string(i));
  }
}

// CSV format: header "t,b", one event per row, times with enough digits to
// round-trip through text.
inline void write_trace_csv(std::ostream &os, const Trace &trace) {
  os << "t,b\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.t.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.12g", trace.t[i]);
    os << buf << ',' << trace.b[i] << '\n';
  }
}

inline void write_trace_csv(const std::string &path, const Trace &trace) {
  std::ofstream os(path);
  if (!os) throw Error("trace", "cannot open " + path + " for writing");
  write_trace_csv(os, trace);
}

inline Trace read_trace_csv(std::istream &is, const std::string &origin = "") {
  Trace trace;
  trace.origin = origin;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tf, bf;
    if (!std::getline(ls, tf, ',') || !std::getline(ls, bf))
      throw Error("trace", "malformed row " + std::to_string(lineno));
    if (lineno == 1 && tf == "t") continue;  // header
    try {
      trace.t.push_back(std::stod(tf));
      trace.b.push_back(std::stoi(bf));
    } catch (const std::exception &) {
      throw Error("trace", "unparsable row " + std::to_string(lineno) + ": " + line);
    }
  }
  validate_trace(trace);
  return trace;
}

inline Trace read_trace_csv_file(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw Error("trace", "cannot open " + path);
  return read_trace_csv(is, path);
}

// Sample statistics used throughout: raw moments, lag autocorrelation,
// batch summaries.
inline double sample_moment(const std::vector<double> &v, int r) {
  double acc = 0.0;
  for (double x : v) acc += std::pow(x, r);
  return acc / static_cast<double>(v.size());
}

inline double sample_mean(const std::vector<double> &v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

inline double sample_autocorr(const std::vector<double> &v, int lag) {
  const std::size_t n = v.size();
  if (lag < 1 || static_cast<std::size_t>(lag) >= n)
    throw Error("sample_autocorr", "lag out of range");
  const double mean = sample_mean(v);
  double denom = 0.0;
  for (double x : v) denom += (x - mean) * (x - mean);
  if (!(denom > 0.0)) throw Error("sample_autocorr", "zero variance sample");
  double num = 0.0;
  for (std::size_t i = 0; i + static_cast<std::size_t>(lag) < n; ++i)
    num += (v[i] - mean) * (v[i + static_cast<std::size_t>(lag)] - mean);
  return num / denom;
}

}  // namespace bmmpp
