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

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "dpmnoc/engine.hpp"
#include "dpmnoc/zero_load.hpp"
#include "oracles.hpp"

namespace dpmnoc {
namespace {

const MeshConfig k4{4, 4};
const MeshConfig k8{8, 8};

NodeCoord L(int label, const MeshConfig& m = k4) { return coord_of(NodeLabel{label}, m); }

SimConfig quiet(MeshConfig mesh) {
  SimConfig c;
  c.mesh = mesh;
  c.warmup = 0;
  c.measure = 100;
  c.drain = 5000;
  c.keep_records = true;
  c.check_invariants = true;
  return c;
}

PacketHeader header(int source, int dest, std::initializer_list<int> bits, int nodes = 16) {
  PacketHeader h;
  h.packet_type = bits.size() > 1 ? PacketType::Multicast : PacketType::Unicast;
  h.source = NodeLabel{source};
  h.dest = NodeLabel{dest};
  h.dest_bitstring.assign(nodes, false);
  for (int b : bits) h.dest_bitstring[b] = true;
  return h;
}

// ---------------------------------------------------------------------------

TEST(FlitKind, HeadBodyTail) {
  EXPECT_EQ(flit_kind(0, 4), FlitKind::Head);
  EXPECT_EQ(flit_kind(1, 4), FlitKind::Body);
  EXPECT_EQ(flit_kind(2, 4), FlitKind::Body);
  EXPECT_EQ(flit_kind(3, 4), FlitKind::Tail);
  EXPECT_EQ(flit_kind(1, 2), FlitKind::Tail);
  EXPECT_THROW(flit_kind(0, 1), std::invalid_argument);
}

TEST(Header, BitWidth) {
  // 2 + 1 + 1 + 2 * 4 + 16
  EXPECT_EQ(header_bits(k4), 28);
  // 2 + 1 + 1 + 2 * 6 + 64
  EXPECT_EQ(header_bits(k8), 80);
}

TEST(CopyAndForward, LastDestinationStops) {
  const auto d = copy_and_forward(header(0, 7, {7}), NodeLabel{7});
  EXPECT_TRUE(d.deliver_local);
  EXPECT_FALSE(d.forward);
  EXPECT_EQ(d.header.remaining(), 0);
}

TEST(CopyAndForward, DeliversAndRetargets) {
  const auto d = copy_and_forward(header(0, 7, {7, 12}), NodeLabel{7});
  EXPECT_TRUE(d.deliver_local);
  EXPECT_TRUE(d.forward);
  EXPECT_EQ(d.header.dest, NodeLabel{12});
  EXPECT_EQ(d.header.remaining(), 1);

  const auto low = copy_and_forward(header(15, 9, {9, 2}), NodeLabel{9});
  EXPECT_EQ(low.header.dest, NodeLabel{2});
}

TEST(CopyAndForward, PassThroughUnchanged) {
  const auto h = header(0, 7, {7, 12});
  const auto d = copy_and_forward(h, NodeLabel{3});
  EXPECT_FALSE(d.deliver_local);
  EXPECT_TRUE(d.forward);
  EXPECT_EQ(d.header.dest, h.dest);
  EXPECT_EQ(d.header.dest_bitstring, h.dest_bitstring);
}

TEST(RouteCompute, Examples) {
  const auto up = route_compute(header(0, 5, {5}), NodeLabel{0}, k4);
  EXPECT_EQ(dpmnoc::step(L(0), up.port), L(1));
  EXPECT_EQ(up.subnet, Subnet::High);

  const auto down = route_compute(header(15, 0, {0}), NodeLabel{6}, k4);
  EXPECT_EQ(dpmnoc::step(L(6), down.port), L(1));
  EXPECT_EQ(down.subnet, Subnet::Low);

  const auto last = route_compute(header(0, 5, {5}), NodeLabel{2}, k4);
  EXPECT_EQ(dpmnoc::step(L(2), last.port), L(5));

  EXPECT_THROW(route_compute(header(0, 5, {5}), NodeLabel{5}, k4), std::domain_error);
}

TEST(RouteCompute, MatchesWalkOracleEverywhere) {
  for (int s = 0; s < 16; ++s) {
    for (int t = 0; t < 16; ++t) {
      if (s == t) continue;
      const auto [sx, sy] = std::pair{L(s).x, L(s).y};
      const auto path = oracle::walk({sx, sy}, {L(t).x, L(t).y}, 4, 4);
      const auto r = route_compute(header(s, t, {t}), NodeLabel{s}, k4);
      const NodeCoord nb = dpmnoc::step(L(s), r.port);
      EXPECT_EQ(std::pair(nb.x, nb.y), path[1]) << s << "->" << t;
      EXPECT_EQ(r.subnet, t > s ? Subnet::High : Subnet::Low);
    }
  }
}

TEST(Replicate, MultiUnicastGivesOneChildPerDestination) {
  RoutePlan p;
  p.source = L(0);
  RouteEntry e;
  e.representative = L(5);
  e.origin = L(5);
  e.mode = RouteMode::MultiUnicast;
  e.unicast_fanout = {L(6), L(9), L(10)};
  e.destinations = e.unicast_fanout;
  p.entries.push_back(e);
  const auto prog = compile(p, k4);
  ASSERT_EQ(prog.roots.size(), 1u);
  const auto kids = replicate_at_representative(prog, prog.roots[0]);
  ASSERT_EQ(kids.size(), 3u);
  for (const auto& k : kids) {
    EXPECT_EQ(k.start, L(5));
    EXPECT_EQ(k.deliveries.size(), 1u);
  }
}

TEST(Replicate, DualPathAllHigherGivesHighChildOnly) {
  RoutePlan p;
  p.source = L(0);
  RouteEntry e;
  e.representative = L(5);
  e.origin = L(5);
  e.mode = RouteMode::DualPath;
  e.high_chain = {L(6), L(9)};
  e.destinations = e.high_chain;
  p.entries.push_back(e);
  const auto prog = compile(p, k4);
  const auto kids = replicate_at_representative(prog, prog.roots[0]);
  ASSERT_EQ(kids.size(), 1u);
  EXPECT_EQ(kids[0].targets, (std::vector<NodeCoord>{L(6), L(9)}));
}

TEST(Replicate, RepresentativeThatIsADestination) {
  RoutePlan p;
  p.source = L(0);
  RouteEntry e;
  e.representative = L(5);
  e.origin = L(5);
  e.high_chain = {L(5), L(9)};
  e.low_chain = {L(4)};
  e.destinations = {L(5), L(9), L(4)};
  p.entries.push_back(e);
  const auto prog = compile(p, k4);
  EXPECT_EQ(replicate_at_representative(prog, prog.roots[0]).size(), 2u);
  Simulator sim(quiet(k4));
  VectorSource src({TraceEvent{0, NodeLabel{0}, {NodeLabel{5}, NodeLabel{9}, NodeLabel{4}}}});
  sim.run(src);
  std::vector<int> got;
  for (const auto& r : sim.records()) got.push_back(r.destination.value);
  std::sort(got.begin(), got.end());
  EXPECT_EQ(got, (std::vector<int>{4, 5, 9}));
}

// ---------------------------------------------------------------------------
// Timing.

TEST(Simulator, GoldenUnicastLatency) {
  Simulator sim(quiet(k4));
  VectorSource src({TraceEvent{0, label_of({0, 0}, k4), {label_of({3, 0}, k4)}}});
  sim.run(src);
  ASSERT_EQ(sim.records().size(), 1u);
  const auto& r = sim.records()[0];
  EXPECT_EQ(r.hops, 3);
  EXPECT_EQ(r.latency(), 11);
  // (hops + 1) * (router + link) + (packet_size - 1)
  EXPECT_EQ(r.latency(), (3 + 1) * (1 + 1) + (4 - 1));
  EXPECT_EQ(r.tail_arrival - r.head_arrival, 3);
}

TEST(Simulator, UnicastLatencyTracksWalkOracle) {
  for (int rl : {1, 2}) {
    for (int ll : {1, 3}) {
      SimConfig c = quiet(k4);
      c.router_latency = rl;
      c.link_latency = ll;
      c.buffer_depth = 2 * ll + rl;
      for (int s = 0; s < 16; s += 5) {
        for (int t = 0; t < 16; ++t) {
          if (s == t) continue;
          Simulator sim(c);
          VectorSource src({TraceEvent{3, NodeLabel{s}, {NodeLabel{t}}}});
          sim.run(src);
          const int hops = oracle::walk_hops({L(s).x, L(s).y}, {L(t).x, L(t).y}, 4, 4);
          ASSERT_EQ(sim.records().size(), 1u);
          EXPECT_EQ(sim.records()[0].hops, hops);
          EXPECT_EQ(sim.records()[0].latency(), (hops + 1) * (rl + ll) + 3)
              << s << "->" << t << " R=" << rl << " L=" << ll;
        }
      }
    }
  }
}

TEST(Simulator, IsolatedMessagesMatchPredictedSchedule) {
  std::mt19937_64 rng(11);
  for (PlannerKind k : {PlannerKind::DPM, PlannerKind::MP, PlannerKind::NMP, PlannerKind::DP,
                        PlannerKind::MU}) {
    SimConfig c = quiet(k8);
    c.planner = k;
    for (int trial = 0; trial < 25; ++trial) {
      const oracle::XY s{static_cast<int>(rng() % 8), static_cast<int>(rng() % 8)};
      const int count = 1 + static_cast<int>(rng() % 16);
      TraceEvent e{0, label_of({s.first, s.second}, k8), {}};
      std::vector<NodeCoord> dests;
      for (auto [x, y] : oracle::random_destinations(rng, 8, 8, s, count)) {
        dests.push_back({x, y});
        e.destinations.push_back(label_of({x, y}, k8));
      }
      Simulator sim(c);
      VectorSource src({e});
      sim.run(src);
      const auto prog = program_for(c, {s.first, s.second}, dests);
      auto predicted = predict_schedule(prog, c, 0);
      ASSERT_EQ(predicted.size(), dests.size());
      ASSERT_EQ(sim.records().size(), dests.size());
      std::map<int, std::pair<Cycle, int>> want;
      for (const auto& p : predicted) want[p.destination.value] = {p.tail_arrival, p.hops};
      for (const auto& r : sim.records()) {
        ASSERT_TRUE(want.count(r.destination.value));
        EXPECT_EQ(r.tail_arrival, want[r.destination.value].first)
            << to_string(k) << " trial " << trial << " dest " << r.destination.value;
        EXPECT_EQ(r.hops, want[r.destination.value].second);
      }
    }
  }
}

TEST(ZeroLoad, StreamingPreconditions) {
  SimConfig c;
  EXPECT_NO_THROW(require_streaming(c));
  c.link_latency = 3;
  EXPECT_THROW(require_streaming(c), std::invalid_argument);
  EXPECT_EQ(zero_load_latency(SimConfig{}, 3), 11);
}

// ---------------------------------------------------------------------------
// Runs.

TEST(Simulator, ZeroInjectionProducesNothing) {
  SimConfig c = quiet(k8);
  TrafficConfig t;
  t.injection_rate = 0.0;
  const auto r = simulate(c, t);
  EXPECT_EQ(r.messages, 0u);
  EXPECT_EQ(r.deliveries, 0u);
  EXPECT_FALSE(r.avg_delivery_latency.has_value());
  EXPECT_EQ(r.energy, 0.0);
}

TEST(Simulator, RepeatedRunIsIdentical) {
  SimConfig c;
  c.warmup = 200;
  c.measure = 2000;
  c.seed = 42;
  TrafficConfig t;
  t.injection_rate = 0.01;
  t.dest_range = {4, 8};
  const auto a = simulate(c, t);
  const auto b = simulate(c, t);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(csv_row(a), csv_row(b));
  EXPECT_GT(a.deliveries, 0u);
}

TEST(Simulator, InvariantsHoldUnderLoadForEveryPlanner) {
  for (PlannerKind k : {PlannerKind::DPM, PlannerKind::MP, PlannerKind::NMP, PlannerKind::DP,
                        PlannerKind::MU}) {
    SimConfig c;
    c.planner = k;
    c.warmup = 100;
    c.measure = 1500;
    c.check_invariants = true;
    TrafficConfig t;
    t.injection_rate = 0.02;
    t.dest_range = {10, 16};
    EXPECT_NO_THROW(simulate(c, t)) << to_string(k);
  }
}

TEST(Simulator, FlitConservationAndWormholeOrder) {
  SimConfig c = quiet(k8);
  c.measure = 1500;
  TrafficConfig t;
  t.injection_rate = 0.03;
  t.dest_range = {4, 8};
  Simulator sim(c);
  SyntheticSource src(t, k8, 5, 1500);
  sim.run(src);
  sim.run_until_idle(100000);
  ASSERT_TRUE(sim.idle());
  EXPECT_GT(sim.injected_flits(), 0u);
  EXPECT_EQ(sim.injected_flits(), sim.absorbed_flits());
  EXPECT_EQ(sim.flits_in_network(), 0u);
  for (const auto& r : sim.records()) {
    EXPECT_GE(r.head_arrival, r.generated);
    EXPECT_GE(r.tail_arrival - r.head_arrival, c.packet_size - 1);
    EXPECT_GE(r.hops, 1);
  }
}

TEST(Simulator, EveryDestinationReceivesExactlyOneCopy) {
  SimConfig c = quiet(k8);
  c.measure = 2000;
  TrafficConfig t;
  t.injection_rate = 0.01;
  t.multicast_fraction = 1.0;
  t.dest_range = {7, 10};
  const auto events = generate_synthetic(t, k8, 9, 2000);
  Simulator sim(c);
  VectorSource src(events);
  sim.run(src);
  std::map<std::int64_t, std::vector<int>> got;
  for (const auto& r : sim.records()) got[r.message].push_back(r.destination.value);
  ASSERT_EQ(got.size(), events.size());
  std::size_t i = 0;
  for (auto& [id, dests] : got) {
    std::vector<int> want;
    for (NodeLabel d : events[i++].destinations) want.push_back(d.value);
    std::sort(want.begin(), want.end());
    std::sort(dests.begin(), dests.end());
    EXPECT_EQ(dests, want) << "message " << id;
  }
}

TEST(Simulator, RejectsBadConfig) {
  SimConfig c;
  c.vcs_high = 3;
  EXPECT_THROW(Simulator{c}, std::invalid_argument);
  c = SimConfig{};
  c.packet_size = 1;
  EXPECT_THROW(Simulator{c}, std::invalid_argument);
  c = SimConfig{};
  c.buffer_depth = 0;
  EXPECT_THROW(Simulator{c}, std::invalid_argument);
}

TEST(Simulator, ConfigFingerprintSeesEveryKnob) {
  SimConfig a;
  SimConfig b = a;
  EXPECT_EQ(fingerprint(a), fingerprint(b));
  b.seed = 2;
  EXPECT_NE(fingerprint(a), fingerprint(b));
  b = a;
  b.planner = PlannerKind::MU;
  EXPECT_NE(fingerprint(a), fingerprint(b));
}

// ---------------------------------------------------------------------------
// Watchdog.

TEST(Watchdog, IdleNetworkIsQuiet) {
  SimConfig c = quiet(k4);
  c.watchdog_threshold = 4;
  Simulator sim(c);
  for (int i = 0; i < 100; ++i) sim.step();
  EXPECT_NO_THROW(sim.watchdog_scan());
}

SimConfig ring_fixture() {
  SimConfig c;
  c.mesh = {3, 3};
  c.routing = RoutingMode::AllTurns;
  c.vcs_per_port = 2;
  c.vcs_high = 1;
  c.vcs_low = 1;
  c.buffer_depth = 2;
  c.packet_size = 16;
  c.watchdog_threshold = 64;
  c.warmup = 0;
  c.measure = 10;
  c.drain = 10000;
  return c;
}

std::vector<TraceEvent> ring_events(const MeshConfig& m) {
  auto ev = [&](NodeCoord s, NodeCoord d) {
    return TraceEvent{0, label_of(s, m), {label_of(d, m)}};
  };
  return {ev({0, 0}, {1, 1}), ev({1, 0}, {0, 1}), ev({1, 1}, {0, 0}), ev({0, 1}, {1, 0})};
}

TEST(Watchdog, AllTurnsRingTripsWithCyclicChain) {
  const SimConfig c = ring_fixture();
  Simulator sim(c);
  VectorSource src(ring_events(c.mesh));
  try {
    sim.run(src);
    FAIL() << "expected a deadlock report";
  } catch (const DeadlockDetected& d) {
    EXPECT_TRUE(d.cyclic());
    EXPECT_EQ(d.chain().size(), 4u);
    std::set<NodeCoord> nodes;
    for (const auto& l : d.chain()) nodes.insert(l.node);
    EXPECT_EQ(nodes, (std::set<NodeCoord>{{0, 0}, {1, 0}, {1, 1}, {0, 1}}));
    EXPECT_NE(std::string(d.what()).find("cyclic"), std::string::npos);
  }
}

TEST(Watchdog, SameRingUnderHamiltonianRoutingDrains) {
  SimConfig c = ring_fixture();
  c.routing = RoutingMode::Hamiltonian;
  c.keep_records = true;
  Simulator sim(c);
  VectorSource src(ring_events(c.mesh));
  EXPECT_NO_THROW(sim.run(src));
  EXPECT_EQ(sim.records().size(), 4u);
}

}  // namespace
}  // namespace dpmnoc
