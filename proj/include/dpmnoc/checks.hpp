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

// Structural self-checks over a mesh and routing configuration.

#pragma once

#include <algorithm>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dpmnoc/channel_graph.hpp"
#include "dpmnoc/engine.hpp"
#include "dpmnoc/partition.hpp"

namespace dpmnoc {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

inline CheckResult check_labeling(const MeshConfig& mesh) {
  std::vector<bool> hit(mesh.node_count(), false);
  bool ok = true;
  for (int i = 0; i < mesh.node_count() && ok; ++i) {
    const NodeCoord c = from_row_major(i, mesh);
    const NodeLabel l = label_of(c, mesh);
    ok = l.value >= 0 && l.value < mesh.node_count() && !hit[l.value] && coord_of(l, mesh) == c;
    if (ok) hit[l.value] = true;
    if (ok && l.value > 0) ok = adjacent(coord_of(NodeLabel{l.value - 1}, mesh), c);
  }
  std::ostringstream os;
  os << mesh.width << 'x' << mesh.height << ", " << mesh.node_count() << " labels";
  return {"labeling_bijection", ok, os.str()};
}

inline CheckResult check_channel_graph(const SimConfig& cfg) {
  ChannelDependencyGraph g;
  if (cfg.routing == RoutingMode::AllTurns) {
    g = channel_dependency_graph(cfg.mesh, AllTurnsRelation(cfg.mesh));
  } else {
    g = channel_dependency_graph(
        cfg.mesh, HamiltonianRelation(cfg.mesh, cfg.approach == ApproachRouting::XY));
  }
  std::ostringstream os;
  os << "routing=" << to_string(cfg.routing) << " approach=" << to_string(cfg.approach) << ", "
     << g.channel_count() << " channels, " << g.edge_count() << " dependencies";
  if (!g.acyclic) {
    os << ", cycle:";
    for (const Channel& c : g.witness) os << ' ' << c.from << "->" << c.to;
  }
  return {"channel_dependency_acyclic", g.acyclic, os.str()};
}

struct PartitionCheckStats {
  int instances = 0;
  int cover_failures = 0;
  int sandwich_failures = 0;
  int merge_bound_failures = 0;
  int max_merges = 0;
  double gap_sum = 0.0;
};

// Random instances with |D| drawn from each range in turn.
inline PartitionCheckStats partition_invariants(const MeshConfig& mesh, CostModel model,
                                                std::span<const DestRange> ranges, int instances,
                                                std::uint64_t seed) {
  PartitionCheckStats st;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < instances; ++i) {
    const DestRange r = ranges[i % ranges.size()];
    const int count = std::uniform_int_distribution<int>(r.min, r.max)(rng);
    const int src_index = std::uniform_int_distribution<int>(0, mesh.node_count() - 1)(rng);
    const NodeCoord src = from_row_major(src_index, mesh);
    std::vector<NodeCoord> pool;
    for (int n = 0; n < mesh.node_count(); ++n)
      if (n != src_index) pool.push_back(from_row_major(n, mesh));
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(count);

    const FinalPartition dpm = dpm_partition(pool, src, mesh, model);
    const FinalPartition opt = exact_optimal_partition(pool, src, mesh, model);
    const FinalPartition basic = basic_final_partition(pool, src, mesh, model);
    std::multiset<NodeCoord> covered;
    for (const auto& s : dpm.sets) covered.insert(s.members.begin(), s.members.end());
    if (covered != std::multiset<NodeCoord>(pool.begin(), pool.end())) ++st.cover_failures;
    if (!(opt.total_cost() <= dpm.total_cost() && dpm.total_cost() <= basic.total_cost()))
      ++st.sandwich_failures;
    if (dpm.merges > 4) ++st.merge_bound_failures;
    st.max_merges = std::max(st.max_merges, dpm.merges);
    if (opt.total_cost() > 0)
      st.gap_sum += static_cast<double>(dpm.total_cost() - opt.total_cost()) / opt.total_cost();
    ++st.instances;
  }
  return st;
}

inline std::vector<CheckResult> run_checks(const SimConfig& cfg, int instances,
                                           std::uint64_t seed) {
  std::vector<CheckResult> out;
  out.push_back(check_labeling(cfg.mesh));
  out.push_back(check_channel_graph(cfg));
  std::vector<DestRange> ranges;
  for (DestRange r : kReferenceRanges)
    if (r.max < cfg.mesh.node_count()) ranges.push_back(r);
  if (ranges.empty()) ranges.push_back({1, cfg.mesh.node_count() - 1});
  const auto st = partition_invariants(cfg.mesh, cfg.cost_model, ranges, instances, seed);
  auto line = [&](const char* name, int failures, std::string extra = {}) {
    std::ostringstream os;
    os << failures << " violations in " << st.instances << " instances" << extra;
    out.push_back({name, failures == 0, os.str()});
  };
  line("cover_and_disjoint", st.cover_failures);
  std::ostringstream gap;
  gap << ", mean gap " << (st.instances ? st.gap_sum / st.instances : 0.0);
  line("oracle_sandwich", st.sandwich_failures, gap.str());
  line("merge_bound", st.merge_bound_failures, ", max merges " + std::to_string(st.max_merges));
  return out;
}

}  // namespace dpmnoc
