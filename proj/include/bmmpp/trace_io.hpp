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
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bmmpp/model.hpp"
#include "bmmpp/trace.hpp"

namespace bmmpp {

// Raw packet arrivals: nondecreasing timestamps (seconds) and packet sizes
// (bytes).
struct RawPacketTrace {
  std::vector<double> timestamps;
  std::vector<int> sizes;
  std::string origin;
};

inline void validate_packets(const RawPacketTrace &raw, bool ethernet = false) {
  if (raw.timestamps.size() != raw.sizes.size())
    throw Error("packet_trace", "timestamp and size columns differ in length");
  if (raw.timestamps.empty()) throw Error("packet_trace", "empty packet trace");
  for (std::size_t i = 1; i < raw.timestamps.size(); ++i)
    if (raw.timestamps[i] < raw.timestamps[i - 1])
      throw Error("packet_trace", "timestamps not sorted at row " + std::to_string(i));
  if (ethernet) {
    for (std::size_t i = 0; i < raw.sizes.size(); ++i)
      if (raw.sizes[i] < 64 || raw.sizes[i] > 1518)
        throw Error("packet_trace",
                    "size outside Ethernet bounds [64, 1518] at row " + std::to_string(i));
  }
}

// Two columns, whitespace or comma separated; a non-numeric first line is
// treated as a header.
inline RawPacketTrace read_packet_file(std::istream &is, const std::string &origin = "") {
  RawPacketTrace raw;
  raw.origin = origin;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    for (char &c : line)
      if (c == ',') c = ' ';
    std::istringstream ls(line);
    double ts;
    double size;
    if (!(ls >> ts >> size)) {
      if (lineno == 1) continue;  // header
      throw Error("packet_trace", "unparsable row " + std::to_string(lineno));
    }
    raw.timestamps.push_back(ts);
    raw.sizes.push_back(static_cast<int>(size));
  }
  validate_packets(raw);
  return raw;
}

inline RawPacketTrace read_packet_file(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw Error("packet_trace", "cannot open " + path);
  return read_packet_file(is, path);
}

struct AggregateReport {
  std::size_t packets = 0;
  std::size_t events = 0;
  std::size_t zero_gaps_floored = 0;
};

// Format I: timestamps are binned on a fixed grid (default 1 ms); packets
// sharing a bin form one event whose batch size is the bin count.  Bins are
// assigned by floor(t / bin).  Inter-event times are differences of occupied
// bin times, so every emitted time is a positive multiple of the bin width;
// the first event is measured from the trace start, floored to one bin.
// A bin holding more than `cap` packets rejects the aggregation with the
// offending bins in the message.
inline Trace aggregate_format1(const RawPacketTrace &raw, double bin = 1e-3,
                               int cap = 4, AggregateReport *report = nullptr) {
  validate_packets(raw);
  if (!(bin > 0.0)) throw Error("aggregate_format1", "bin width must be positive");
  Trace trace;
  trace.origin = raw.origin + " [format I, bin " + detail::fmt(bin) + "]";
  std::string over_cap;
  std::size_t over_count = 0;

  std::int64_t prev_bin = -1;
  int count = 0;
  auto flush = [&](std::int64_t bin_idx) {
    if (count == 0) return;
    if (count > cap) {
      ++over_count;
      if (over_cap.size() < 256)
        over_cap += " bin " + std::to_string(bin_idx) + " holds " +
                    std::to_string(count) + ";";
    }
    const std::int64_t gap = (trace.t.empty()) ? std::max<std::int64_t>(bin_idx, 1)
                                               : bin_idx - prev_bin;
    trace.t.push_back(static_cast<double>(gap) * bin);
    trace.b.push_back(count);
    prev_bin = bin_idx;
    count = 0;
  };

  std::int64_t current = -1;
  for (std::size_t i = 0; i < raw.timestamps.size(); ++i) {
    const std::int64_t idx =
        static_cast<std::int64_t>(std::floor(raw.timestamps[i] / bin));
    if (idx != current) {
      flush(current);
      current = idx;
    }
    ++count;
  }
  flush(current);

  if (over_count > 0)
    throw Error("aggregate_format1",
                std::to_string(over_count) + " bins exceed the batch cap " +
                    std::to_string(cap) + ":" + over_cap);
  if (report) *report = AggregateReport{raw.timestamps.size(), trace.size(), 0};
  validate_trace(trace, cap);
  return trace;
}

// Format II: every packet is one event; the batch label is 1 for small
// packets (size below the threshold) and 2 otherwise.  Inter-event times
// are raw timestamp differences; zero gaps are floored to the clock
// resolution and counted in the report.
inline Trace aggregate_format2(const RawPacketTrace &raw, int threshold = 100,
                               double resolution = 1e-6,
                               AggregateReport *report = nullptr) {
  validate_packets(raw);
  Trace trace;
  trace.origin = raw.origin + " [format II, threshold " + std::to_string(threshold) + "]";
  trace.t.reserve(raw.timestamps.size());
  trace.b.reserve(raw.timestamps.size());
  std::size_t floored = 0;
  double prev = 0.0;
  for (std::size_t i = 0; i < raw.timestamps.size(); ++i) {
    double gap = raw.timestamps[i] - prev;
    if (!(gap > 0.0)) {
      gap = resolution;
      ++floored;
    }
    trace.t.push_back(gap);
    trace.b.push_back(raw.sizes[i] < threshold ? 1 : 2);
    prev = raw.timestamps[i];
  }
  if (report) *report = AggregateReport{raw.timestamps.size(), trace.size(), floored};
  validate_trace(trace, 2);
  return trace;
}

// Inter-arrival summary used to sanity-check ingested data.
struct TraceSummary {
  double mean = 0.0, median = 0.0, cv = 0.0, min = 0.0, max = 0.0;
  std::size_t n = 0;
};

inline TraceSummary trace_summary(const Trace &trace) {
  TraceSummary s;
  s.n = trace.size();
  std::vector<double> sorted = trace.t;
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  s.median = (s.n % 2 == 1) ? sorted[s.n / 2]
                            : 0.5 * (sorted[s.n / 2 - 1] + sorted[s.n / 2]);
  s.mean = sample_mean(trace.t);
  const double m2 = sample_moment(trace.t, 2);
  s.cv = std::sqrt(std::max(0.0, m2 - s.mean * s.mean)) / s.mean;
  return s;
}

}  // namespace bmmpp
