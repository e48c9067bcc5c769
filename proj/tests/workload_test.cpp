// Copyright 2026 The dpmnoc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "dpmnoc/workload.hpp"

namespace dpmnoc {
namespace {

const MeshConfig k8{8, 8};

TrafficConfig traffic(double rate, double fraction, DestRange range) {
  TrafficConfig t;
  t.injection_rate = rate;
  t.multicast_fraction = fraction;
  t.dest_range = range;
  return t;
}

void expect_well_formed(const TraceEvent& e) {
  std::set<int> seen;
  for (NodeLabel d : e.destinations) {
    EXPECT_NE(d, e.source);
    EXPECT_TRUE(seen.insert(d.value).second);
    EXPECT_GE(d.value, 0);
    EXPECT_LT(d.value, 64);
  }
}

TEST(Synthetic, ZeroRateIsEmpty) {
  EXPECT_TRUE(generate_synthetic(traffic(0.0, 0.1, {2, 5}), k8, 1, 100000).empty());
}

TEST(Synthetic, ForcedMulticastOfThree) {
  const auto events = generate_synthetic(traffic(0.05, 1.0, {3, 3}), k8, 3, 5000);
  ASSERT_FALSE(events.empty());
  for (const auto& e : events) {
    EXPECT_EQ(e.destinations.size(), 3u);
    expect_well_formed(e);
  }
}

TEST(Synthetic, MulticastShareAndCountHistogram) {
  const DestRange range{10, 16};
  const auto events = generate_synthetic(traffic(0.01, 0.1, range), k8, 7, 100000);
  std::map<int, int> histogram;
  int multicast = 0;
  for (const auto& e : events) {
    expect_well_formed(e);
    if (e.destinations.size() > 1) {
      ++multicast;
      ++histogram[static_cast<int>(e.destinations.size())];
    }
  }
  const double share = static_cast<double>(multicast) / static_cast<double>(events.size());
  EXPECT_NEAR(share, 0.10, 0.01);

  // Pearson statistic against a uniform count over 7 bins; the 0.999
  // quantile of chi-square with 6 degrees of freedom is 22.46.
  const int bins = range.max - range.min + 1;
  const double expected = static_cast<double>(multicast) / bins;
  double chi2 = 0.0;
  for (int k = range.min; k <= range.max; ++k) {
    const double diff = histogram[k] - expected;
    chi2 += diff * diff / expected;
  }
  EXPECT_LT(chi2, 22.46);
  EXPECT_EQ(histogram.size(), static_cast<std::size_t>(bins));
}

TEST(Synthetic, DestinationsAreUniformOverNonSourceNodes) {
  const auto events = generate_synthetic(traffic(0.02, 0.0, {2, 5}), k8, 13, 100000);
  std::map<int, int> per_node;
  for (const auto& e : events) per_node[e.destinations[0].value]++;
  const double expected = static_cast<double>(events.size()) / 64.0;
  double chi2 = 0.0;
  for (int n = 0; n < 64; ++n) {
    const double diff = per_node[n] - expected;
    chi2 += diff * diff / expected;
  }
  // 0.999 quantile of chi-square with 63 degrees of freedom.
  EXPECT_LT(chi2, 103.4);
}

TEST(Synthetic, RateConvergesWithinOnePercent) {
  const double rate = 0.05;
  const Cycle horizon = 20000;  // 1.28e6 node-cycles
  const auto events = generate_synthetic(traffic(rate, 0.1, {2, 5}), k8, 21, horizon);
  const double observed = static_cast<double>(events.size()) / (64.0 * horizon);
  EXPECT_NEAR(observed / rate, 1.0, 0.01);
}

TEST(Synthetic, SeedDeterminism) {
  const auto t = traffic(0.02, 0.3, {4, 8});
  EXPECT_EQ(generate_synthetic(t, k8, 5, 3000), generate_synthetic(t, k8, 5, 3000));
  EXPECT_NE(generate_synthetic(t, k8, 5, 3000), generate_synthetic(t, k8, 6, 3000));
}

TEST(Synthetic, EventsAreCycleOrderedAndBounded) {
  const auto events = generate_synthetic(traffic(0.3, 0.1, {2, 5}), k8, 2, 500);
  for (std::size_t i = 1; i < events.size(); ++i) EXPECT_LE(events[i - 1].cycle, events[i].cycle);
  EXPECT_LT(events.back().cycle, 500);
  // At most one message per node per cycle.
  std::set<std::pair<Cycle, int>> slots;
  for (const auto& e : events) EXPECT_TRUE(slots.insert({e.cycle, e.source.value}).second);
}

TEST(Synthetic, RejectsRangeReachingNodeCount) {
  EXPECT_THROW(traffic(0.1, 0.1, {2, 64}).validate(k8), std::invalid_argument);
  EXPECT_THROW(traffic(0.1, 1.5, {2, 5}).validate(k8), std::invalid_argument);
  EXPECT_THROW(traffic(-0.1, 0.1, {2, 5}).validate(k8), std::invalid_argument);
  EXPECT_THROW(traffic(0.1, 0.1, {0, 5}).validate(k8), std::invalid_argument);
  EXPECT_NO_THROW(traffic(0.1, 0.1, {10, 16}).validate(k8));
}

TEST(WorkloadHash, SensitiveToEveryField) {
  const TraceEvent a{5, NodeLabel{0}, {NodeLabel{9}, NodeLabel{13}}};
  auto digest = [](const TraceEvent& e) {
    WorkloadHash h;
    h.add(e);
    return h.value();
  };
  TraceEvent b = a;
  EXPECT_EQ(digest(a), digest(b));
  b.cycle = 6;
  EXPECT_NE(digest(a), digest(b));
  b = a;
  b.destinations = {NodeLabel{13}, NodeLabel{9}};
  EXPECT_NE(digest(a), digest(b));
}

// ---------------------------------------------------------------------------
// Trace files.

std::vector<TraceEvent> parse(const std::string& text) {
  std::istringstream in(text);
  return read_trace(in, k8);
}

TEST(Trace, EmptyFile) { EXPECT_TRUE(parse("").empty()); }

TEST(Trace, OneMulticastLine) {
  const auto events = parse(R"({"cycle":5,"src":0,"dsts":[9,13]})");
  ASSERT_EQ(events.size(), 1u);
  EXPECT_EQ(events[0], (TraceEvent{5, NodeLabel{0}, {NodeLabel{9}, NodeLabel{13}}}));
}

TEST(Trace, SortsByCycleAndSkipsBlankLines) {
  const auto events = parse(
      "{\"cycle\":9,\"src\":1,\"dsts\":[2]}\n\n"
      "{\"cycle\":3,\"src\":4,\"dsts\":[5]}\n");
  ASSERT_EQ(events.size(), 2u);
  EXPECT_EQ(events[0].cycle, 3);
  EXPECT_EQ(events[1].cycle, 9);
}

void expect_error_on_line(const std::string& text, std::size_t line) {
  try {
    parse(text);
    FAIL() << "accepted: " << text;
  } catch (const TraceError& e) {
    EXPECT_EQ(e.line(), line) << e.what();
  }
}

TEST(Trace, RejectsWithLineNumbers) {
  const std::string ok = "{\"cycle\":1,\"src\":0,\"dsts\":[1]}\n";
  expect_error_on_line(ok + R"({"cycle":5,"src":0,"dsts":[9,0]})", 2);
  expect_error_on_line(ok + ok + R"({"cycle":5,"src":0,"dsts":[9,9]})", 3);
  expect_error_on_line(R"({"cycle":5,"src":0,"dsts":[64]})", 1);
  expect_error_on_line(R"({"cycle":5,"src":0,"dsts":[]})", 1);
  expect_error_on_line(R"({"cycle":-1,"src":0,"dsts":[3]})", 1);
  expect_error_on_line(R"({"cycle":5,"src":0})", 1);
  expect_error_on_line(R"({"cycle":5,"src":0,"dsts":[3],"size":4})", 1);
  expect_error_on_line(ok + "{not json", 2);
  expect_error_on_line(R"({"cycle":"5","src":0,"dsts":[3]})", 1);
}

TEST(Trace, RoundTripThroughJsonl) {
  const auto events = generate_synthetic(traffic(0.01, 0.5, {2, 5}), k8, 4, 2000);
  std::string text;
  for (const auto& e : events) text += to_jsonl(e) + "\n";
  EXPECT_EQ(parse(text), events);
}

TEST(Trace, MissingFile) {
  EXPECT_THROW(load_trace("/nonexistent/trace.jsonl", k8), std::runtime_error);
}

}  // namespace
}  // namespace dpmnoc
