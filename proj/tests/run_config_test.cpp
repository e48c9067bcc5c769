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

#include <gtest/gtest.h>

#include "dpmnoc/checks.hpp"
#include "dpmnoc/run_config.hpp"

namespace dpmnoc {
namespace {

TEST(RunConfig, DefaultsMatchReferenceConfiguration) {
  const RunConfig c = parse_run_config("{}");
  EXPECT_EQ(c.sim.mesh, (MeshConfig{8, 8}));
  EXPECT_EQ(c.sim.vcs_per_port, 4);
  EXPECT_EQ(c.sim.vcs_high, 2);
  EXPECT_EQ(c.sim.vcs_low, 2);
  EXPECT_EQ(c.sim.buffer_depth, 4);
  EXPECT_EQ(c.sim.packet_size, 4);
  EXPECT_DOUBLE_EQ(c.traffic.multicast_fraction, 0.10);
  EXPECT_TRUE(c.problems().empty());
}

TEST(RunConfig, ParsesEveryField) {
  const RunConfig c = parse_run_config(R"({
    "mesh": {"width": 6, "height": 4}, "planner": "nmp", "approach": "xy",
    "cost_model": "from_representative", "routing": "hamiltonian",
    "vcs_per_port": 6, "vcs_high": 3, "vcs_low": 3, "buffer_depth": 8, "packet_size": 5,
    "router_latency": 2, "link_latency": 1, "watchdog_threshold": 500,
    "warmup": 10, "measure": 20, "drain": 30, "max_source_queue": 7,
    "check_invariants": true, "seed": 99,
    "energy": {"link": 2.0},
    "traffic": {"injection_rate": 0.02, "dest_range": [4, 8]},
    "output_dir": "res",
    "sweep": {"rates": [0.01, 0.02], "ranges": [[2, 5], [7, 10]], "planners": ["mu", "dpm"]},
    "check": {"instances": 12}
  })");
  EXPECT_EQ(c.sim.mesh, (MeshConfig{6, 4}));
  EXPECT_EQ(c.sim.planner, PlannerKind::NMP);
  EXPECT_EQ(c.sim.approach, ApproachRouting::XY);
  EXPECT_EQ(c.sim.cost_model, CostModel::FromRepresentative);
  EXPECT_EQ(c.sim.buffer_depth, 8);
  EXPECT_EQ(c.sim.max_source_queue, 7u);
  EXPECT_TRUE(c.sim.check_invariants);
  EXPECT_EQ(c.sim.seed, 99u);
  EXPECT_DOUBLE_EQ(c.sim.energy.link, 2.0);
  EXPECT_DOUBLE_EQ(c.sim.energy.crossbar, 0.7);
  EXPECT_EQ(c.traffic.dest_range, (DestRange{4, 8}));
  EXPECT_EQ(c.sweep.ranges.size(), 2u);
  EXPECT_EQ(c.sweep.planners, (std::vector<PlannerKind>{PlannerKind::MU, PlannerKind::DPM}));
  EXPECT_EQ(c.check_instances, 12);
  EXPECT_TRUE(c.problems().empty());
}

TEST(RunConfig, RoundTrip) {
  RunConfig c = parse_run_config(R"({"mesh": "4x6", "sweep": {"rates": [0.1]}})");
  const RunConfig d = parse_run_config(to_json(c).dump());
  EXPECT_EQ(to_json(c), to_json(d));
}

TEST(RunConfig, UnknownKeysAndBadValuesAreAllReported) {
  try {
    parse_run_config(R"({"mesh": "8by8", "planner": "tree", "colour": 1, "traffic": {"rate": 1}})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.problems().size(), 4u) << e.what();
  }
  EXPECT_THROW(parse_run_config("{"), ConfigError);
  EXPECT_THROW(parse_run_config("[]"), ConfigError);
}

TEST(RunConfig, ValidationEnumeratesViolations) {
  RunConfig c = parse_run_config(
      R"({"vcs_high": 3, "traffic": {"dest_range": [2, 70]}, "sweep": {"rates": [2.0]}})");
  const auto p = c.problems();
  EXPECT_EQ(p.size(), 3u);
  EXPECT_THROW(c.require_valid(), ConfigError);
}

TEST(RunConfig, TraceSkipsTrafficValidation) {
  RunConfig c = parse_run_config(R"({"trace": "x.jsonl", "traffic": {"dest_range": [2, 70]}})");
  EXPECT_TRUE(c.problems().empty());
}

TEST(RunConfig, MeshText) {
  EXPECT_EQ(parse_mesh("16x16"), (MeshConfig{16, 16}));
  EXPECT_THROW(parse_mesh("16"), std::invalid_argument);
  EXPECT_THROW(parse_mesh("4x"), std::invalid_argument);
  EXPECT_THROW(parse_mesh("ax4"), std::invalid_argument);
}

TEST(Checks, DefaultConfigPasses) {
  for (const auto& r : run_checks(SimConfig{}, 200, 1)) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
}

TEST(Checks, AllTurnsIsFlaggedCyclic) {
  SimConfig c;
  c.mesh = {4, 4};
  c.routing = RoutingMode::AllTurns;
  c.vcs_low = 0;
  c.vcs_per_port = 2;
  const auto r = check_channel_graph(c);
  EXPECT_FALSE(r.passed);
  EXPECT_NE(r.detail.find("cycle"), std::string::npos);
}

TEST(Checks, LargeMeshLabeling) { EXPECT_TRUE(check_labeling({16, 16}).passed); }

}  // namespace
}  // namespace dpmnoc
