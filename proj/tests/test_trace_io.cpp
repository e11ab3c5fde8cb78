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

#include <sstream>

#include "bmmpp/trace_io.hpp"

namespace {

using namespace bmmpp;

TEST(Format1, FloorBinningGroupsSharedBins) {
  // {0.0101, 0.01012, 0.0105} all floor to bin 10 at 1 ms: one event of
  // batch size 3.
  RawPacketTrace raw;
  raw.timestamps = {0.0101, 0.01012, 0.0105};
  raw.sizes = {100, 100, 100};
  const Trace tr = aggregate_format1(raw, 1e-3, 4);
  ASSERT_EQ(tr.size(), 1u);
  EXPECT_EQ(tr.b[0], 3);
  EXPECT_NEAR(tr.t[0], 10e-3, 1e-12);
}

TEST(Format1, EmptyBinStretchGivesMultipleOfBin) {
  RawPacketTrace raw;
  raw.timestamps = {0.0005, 0.0052, 0.0053};  // bins 0, 5, 5
  raw.sizes = {100, 100, 100};
  const Trace tr = aggregate_format1(raw, 1e-3, 4);
  ASSERT_EQ(tr.size(), 2u);
  EXPECT_EQ(tr.b[0], 1);
  EXPECT_EQ(tr.b[1], 2);
  EXPECT_NEAR(tr.t[0], 1e-3, 1e-15);  // first event floored to one bin
  EXPECT_NEAR(tr.t[1], 5e-3, 1e-15);  // five empty bins later
}

TEST(Format1, PacketCountConservation) {
  RawPacketTrace raw;
  double t = 0.0;
  for (int i = 0; i < 2000; ++i) {
    t += (i % 7 == 0) ? 0.0031 : 0.0002;
    raw.timestamps.push_back(t);
    raw.sizes.push_back(64 + (i % 100));
  }
  AggregateReport rep;
  const Trace tr = aggregate_format1(raw, 1e-3, 10, &rep);
  EXPECT_LE(tr.size(), raw.timestamps.size());
  long total_batch = 0;
  for (int b : tr.b) total_batch += b;
  EXPECT_EQ(total_batch, static_cast<long>(raw.timestamps.size()));
  EXPECT_EQ(rep.packets, raw.timestamps.size());
  EXPECT_EQ(rep.events, tr.size());
  // All times are positive multiples of the bin width.
  for (double v : tr.t) {
    EXPECT_GT(v, 0.0);
    EXPECT_NEAR(std::fmod(v + 1e-12, 1e-3), 0.0, 1e-9);
  }
}

TEST(Format1, OverCapBinsRejectedWithReport) {
  RawPacketTrace raw;
  raw.timestamps = {0.0001, 0.0002, 0.0003, 0.0004, 0.0005, 0.0099};
  raw.sizes = {64, 64, 64, 64, 64, 64};
  try {
    aggregate_format1(raw, 1e-3, 4);
    FAIL() << "expected cap rejection";
  } catch (const Error &e) {
    EXPECT_NE(std::string(e.what()).find("holds 5"), std::string::npos) << e.what();
  }
}

TEST(Format1, BadInputsRejected) {
  RawPacketTrace raw;
  raw.timestamps = {0.2, 0.1};
  raw.sizes = {64, 64};
  EXPECT_THROW(validate_packets(raw), Error);
  RawPacketTrace ok;
  ok.timestamps = {0.1, 0.2};
  ok.sizes = {64, 64};
  EXPECT_THROW(aggregate_format1(ok, 0.0, 4), Error);
}

TEST(Format2, SmallLargeLabels) {
  RawPacketTrace raw;
  raw.timestamps = {0.001, 0.002, 0.003};
  raw.sizes = {64, 1518, 99};
  const Trace tr = aggregate_format2(raw, 100);
  ASSERT_EQ(tr.size(), 3u);
  EXPECT_EQ(tr.b[0], 1);
  EXPECT_EQ(tr.b[1], 2);
  EXPECT_EQ(tr.b[2], 1);
}

TEST(Format2, ThresholdAtMinimumMakesEverythingLarge) {
  RawPacketTrace raw;
  raw.timestamps = {0.001, 0.002};
  raw.sizes = {64, 1518};
  const Trace tr = aggregate_format2(raw, 64);
  EXPECT_EQ(tr.b[0], 2);
  EXPECT_EQ(tr.b[1], 2);
}

TEST(Format2, PreservesEventCountAndFloorsZeroGaps) {
  RawPacketTrace raw;
  raw.timestamps = {0.001, 0.001, 0.002, 0.002, 0.003};
  raw.sizes = {64, 200, 64, 200, 64};
  AggregateReport rep;
  const Trace tr = aggregate_format2(raw, 100, 1e-6, &rep);
  EXPECT_EQ(tr.size(), raw.timestamps.size());
  EXPECT_EQ(rep.zero_gaps_floored, 2u);
  for (double t : tr.t) EXPECT_GT(t, 0.0);
  EXPECT_NEAR(tr.t[1], 1e-6, 1e-18);
}

TEST(Format2, TimesAreRawDifferences) {
  RawPacketTrace raw;
  raw.timestamps = {0.0004, 0.0010, 0.0035};
  raw.sizes = {64, 200, 300};
  const Trace tr = aggregate_format2(raw, 100);
  EXPECT_NEAR(tr.t[0], 0.0004, 1e-15);
  EXPECT_NEAR(tr.t[1], 0.0006, 1e-15);
  EXPECT_NEAR(tr.t[2], 0.0025, 1e-15);
}

TEST(PacketFile, ParsesWhitespaceAndCommaWithHeader) {
  std::istringstream is("time,size\n0.001,64\n0.002 1518\n");
  const RawPacketTrace raw = read_packet_file(is);
  ASSERT_EQ(raw.timestamps.size(), 2u);
  EXPECT_EQ(raw.sizes[1], 1518);
}

TEST(PacketFile, EthernetBoundsEnforcedOnDemand) {
  RawPacketTrace raw;
  raw.timestamps = {0.1, 0.2};
  raw.sizes = {64, 2000};
  EXPECT_NO_THROW(validate_packets(raw));
  EXPECT_THROW(validate_packets(raw, true), Error);
}

TEST(PacketFile, MalformedRowsRejectedCleanly) {
  std::istringstream bad("0.001 64\nnot a row\n");
  EXPECT_THROW(read_packet_file(bad), Error);
  std::istringstream short_row("0.001\n");
  EXPECT_THROW(read_packet_file(short_row), Error);
  std::istringstream empty("");
  EXPECT_THROW(read_packet_file(empty), Error);
}

TEST(TraceCsvReader, MalformedRowsRejectedCleanly) {
  std::istringstream bad("t,b\n0.5,1\noops,2\n");
  EXPECT_THROW(read_trace_csv(bad), Error);
  std::istringstream negative("t,b\n-0.5,1\n");
  EXPECT_THROW(read_trace_csv(negative), Error);
  std::istringstream zero_batch("t,b\n0.5,0\n");
  EXPECT_THROW(read_trace_csv(zero_batch), Error);
  std::istringstream crlf("t,b\r\n0.5,1\r\n");
  const Trace tr = read_trace_csv(crlf);
  EXPECT_EQ(tr.size(), 1u);
  EXPECT_EQ(tr.b[0], 1);
}

TEST(TraceSummary, BasicStatistics) {
  Trace tr;
  tr.t = {0.001, 0.002, 0.003, 0.010};
  tr.b = {1, 1, 1, 1};
  const TraceSummary s = trace_summary(tr);
  EXPECT_NEAR(s.mean, 0.004, 1e-12);
  EXPECT_NEAR(s.median, 0.0025, 1e-12);
  EXPECT_NEAR(s.min, 0.001, 1e-15);
  EXPECT_NEAR(s.max, 0.010, 1e-15);
  EXPECT_EQ(s.n, 4u);
}

}  // namespace
