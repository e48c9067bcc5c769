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

// Multicast route planners: dynamic partition merging and the path-based
// baselines it is compared with (dual-path, multi-path, nearest-first
// multi-path) plus plain multiple unicast.

#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpmnoc/hamiltonian.hpp"
#include "dpmnoc/partition.hpp"
#include "dpmnoc/topology.hpp"

namespace dpmnoc {

enum class PlannerKind : std::uint8_t { DPM, MP, NMP, DP, MU };

inline const char* to_string(PlannerKind k) {
  switch (k) {
    case PlannerKind::DPM: return "dpm";
    case PlannerKind::MP: return "mp";
    case PlannerKind::NMP: return "nmp";
    case PlannerKind::DP: return "dp";
    case PlannerKind::MU: return "mu";
  }
  return "?";
}

inline PlannerKind parse_planner(const std::string& s) {
  for (PlannerKind k : {PlannerKind::DPM, PlannerKind::MP, PlannerKind::NMP,
                        PlannerKind::DP, PlannerKind::MU}) {
    if (s == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown planner '" + s + "'");
}

// How a representative-bound packet travels from the source to the
// representative.
enum class ApproachRouting : std::uint8_t { Hamiltonian, XY };

inline const char* to_string(ApproachRouting a) {
  return a == ApproachRouting::Hamiltonian ? "hamiltonian" : "xy";
}

inline ApproachRouting parse_approach(const std::string& s) {
  if (s == "hamiltonian") return ApproachRouting::Hamiltonian;
  if (s == "xy") return ApproachRouting::XY;
  throw std::invalid_argument("unknown approach routing '" + s + "'");
}

struct RouteEntry {
  NodeCoord origin;                          // where in-group delivery starts
  std::optional<NodeCoord> representative;   // set for partition entries
  std::vector<NodeCoord> approach;           // source .. representative
  RouteMode mode = RouteMode::DualPath;
  std::vector<NodeCoord> high_chain;         // ascending labels from origin
  std::vector<NodeCoord> low_chain;          // descending labels from origin
  std::vector<NodeCoord> unicast_fanout;     // one unicast per node from origin
  std::vector<NodeCoord> greedy_chain;       // nearest-first steering targets
  std::vector<NodeCoord> destinations;       // everything this entry delivers
  int hops = 0;
};

struct RoutePlan {
  PlannerKind planner = PlannerKind::DPM;
  NodeCoord source;
  std::vector<RouteEntry> entries;
};

// ---------------------------------------------------------------------------
// Nearest-first ordering (used by the NMP baseline).

struct GreedyOrder {
  std::vector<NodeCoord> targets;     // nodes steered toward, in order
  std::vector<NodeCoord> deliveries;  // order in which nodes are first reached
  int hops = 0;
};

// Repeatedly heads for the closest remaining destination (Manhattan distance,
// ties to the smaller row-major index). Destinations passed on the way are
// delivered and dropped from the remaining set.
inline GreedyOrder nearest_first_order(NodeCoord head, std::span<const NodeCoord> group,
                                       const MeshConfig& mesh) {
  GreedyOrder out;
  std::vector<NodeCoord> remaining(group.begin(), group.end());
  NodeCoord cur = head;
  while (!remaining.empty()) {
    auto best = std::min_element(remaining.begin(), remaining.end(),
                                 [&](NodeCoord a, NodeCoord b) {
                                   const int da = manhattan(cur, a), db = manhattan(cur, b);
                                   if (da != db) return da < db;
                                   return row_major_index(a, mesh) < row_major_index(b, mesh);
                                 });
    const NodeCoord target = *best;
    out.targets.push_back(target);
    const auto path = hamiltonian_path(cur, target, mesh);
    for (std::size_t i = 1; i < path.size(); ++i) {
      auto it = std::find(remaining.begin(), remaining.end(), path[i]);
      if (it != remaining.end()) {
        out.deliveries.push_back(*it);
        remaining.erase(it);
      }
    }
    out.hops += static_cast<int>(path.size()) - 1;
    cur = target;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Planned hop counts.

inline int entry_hops(const RouteEntry& e, const MeshConfig& mesh) {
  int hops = e.approach.empty() ? 0 : static_cast<int>(e.approach.size()) - 1;
  hops += chain_hops(e.origin, e.high_chain, mesh);
  hops += chain_hops(e.origin, e.low_chain, mesh);
  for (const NodeCoord& d : e.unicast_fanout) hops += manhattan(e.origin, d);
  NodeCoord cur = e.origin;
  for (const NodeCoord& t : e.greedy_chain) {
    hops += manhattan(cur, t);
    cur = t;
  }
  return hops;
}

inline int planned_cost(const RoutePlan& plan, const MeshConfig& mesh) {
  int total = 0;
  for (const RouteEntry& e : plan.entries) total += entry_hops(e, mesh);
  return total;
}

// ---------------------------------------------------------------------------
// Planners.

namespace detail {

inline RouteEntry chain_entry(NodeCoord src, std::vector<NodeCoord> chain,
                              bool ascending, const MeshConfig& mesh) {
  RouteEntry e;
  e.origin = src;
  e.mode = RouteMode::DualPath;
  e.destinations = chain;
  (ascending ? e.high_chain : e.low_chain) = std::move(chain);
  e.hops = entry_hops(e, mesh);
  return e;
}

inline void sort_labels(std::vector<NodeCoord>& v, const MeshConfig& mesh, bool ascending) {
  std::sort(v.begin(), v.end(), [&](NodeCoord a, NodeCoord b) {
    return ascending ? label_of(a, mesh) < label_of(b, mesh)
                     : label_of(b, mesh) < label_of(a, mesh);
  });
}

// D_H1, D_H2, D_L1, D_L2 under an arbitrary labeling function.
template <class Label>
std::array<std::vector<NodeCoord>, 4> four_way_split(std::span<const NodeCoord> dests,
                                                     NodeCoord src, Label label) {
  std::array<std::vector<NodeCoord>, 4> groups;
  const int s = label(src);
  for (const NodeCoord& d : dests) {
    const bool high = label(d) > s;
    const bool left = d.x < src.x;
    groups[(high ? 0 : 2) + (left ? 0 : 1)].push_back(d);
  }
  return groups;
}

}  // namespace detail

inline RoutePlan plan_mu(std::span<const NodeCoord> dests, NodeCoord src,
                         const MeshConfig& mesh) {
  detail::require_destinations(dests, src, mesh, /*allow_empty=*/false);
  RoutePlan plan{PlannerKind::MU, src, {}};
  for (const NodeCoord& d : dests) {
    RouteEntry e;
    e.origin = src;
    e.mode = RouteMode::MultiUnicast;
    e.unicast_fanout = {d};
    e.destinations = {d};
    e.hops = manhattan(src, d);
    plan.entries.push_back(std::move(e));
  }
  return plan;
}

inline RoutePlan plan_dp(std::span<const NodeCoord> dests, NodeCoord src,
                         const MeshConfig& mesh) {
  detail::require_destinations(dests, src, mesh, /*allow_empty=*/false);
  const DualPathSplit split = dual_path_split(dests, src, mesh);
  RoutePlan plan{PlannerKind::DP, src, {}};
  if (!split.high.empty())
    plan.entries.push_back(detail::chain_entry(src, split.high, true, mesh));
  if (!split.low.empty())
    plan.entries.push_back(detail::chain_entry(src, split.low, false, mesh));
  return plan;
}

inline RoutePlan plan_mp(std::span<const NodeCoord> dests, NodeCoord src,
                         const MeshConfig& mesh) {
  detail::require_destinations(dests, src, mesh, /*allow_empty=*/false);
  auto groups = detail::four_way_split(
      dests, src, [&](NodeCoord c) { return label_of(c, mesh).value; });
  RoutePlan plan{PlannerKind::MP, src, {}};
  for (int g = 0; g < 4; ++g) {
    if (groups[g].empty()) continue;
    const bool ascending = g < 2;
    detail::sort_labels(groups[g], mesh, ascending);
    plan.entries.push_back(detail::chain_entry(src, groups[g], ascending, mesh));
  }
  return plan;
}

// Multi-path split computed with row-major labels; each group is visited
// nearest-first. Legs are still routed on the high/low subnetworks.
inline RoutePlan plan_nmp(std::span<const NodeCoord> dests, NodeCoord src,
                          const MeshConfig& mesh) {
  detail::require_destinations(dests, src, mesh, /*allow_empty=*/false);
  auto groups = detail::four_way_split(
      dests, src, [&](NodeCoord c) { return row_major_index(c, mesh); });
  RoutePlan plan{PlannerKind::NMP, src, {}};
  for (auto& group : groups) {
    if (group.empty()) continue;
    const GreedyOrder order = nearest_first_order(src, group, mesh);
    RouteEntry e;
    e.origin = src;
    e.mode = RouteMode::DualPath;
    e.greedy_chain = order.targets;
    e.destinations = order.deliveries;
    e.hops = order.hops;
    plan.entries.push_back(std::move(e));
  }
  return plan;
}

inline RoutePlan plan_from_partition(const FinalPartition& partition, NodeCoord src,
                                     const MeshConfig& mesh,
                                     ApproachRouting approach = ApproachRouting::Hamiltonian) {
  RoutePlan plan{PlannerKind::DPM, src, {}};
  for (const CandidateSet& set : partition.sets) {
    if (set.members.empty()) continue;
    const NodeCoord rep = *set.representative;
    RouteEntry e;
    e.origin = rep;
    e.representative = rep;
    e.approach = approach == ApproachRouting::XY ? xy_path(src, rep)
                                                 : hamiltonian_path(src, rep, mesh);
    e.mode = set.mode;
    if (set.mode == RouteMode::DualPath) {
      DualPathSplit split = dual_path_split(set.members, rep, mesh);
      e.high_chain = std::move(split.high);
      e.low_chain = std::move(split.low);
    } else {
      for (const NodeCoord& m : set.members)
        if (m != rep) e.unicast_fanout.push_back(m);
    }
    e.destinations = set.members;
    e.hops = entry_hops(e, mesh);
    plan.entries.push_back(std::move(e));
  }
  return plan;
}

inline RoutePlan plan_dpm(std::span<const NodeCoord> dests, NodeCoord src,
                          const MeshConfig& mesh,
                          CostModel model = CostModel::IncludeApproachLeg,
                          ApproachRouting approach = ApproachRouting::Hamiltonian) {
  return plan_from_partition(dpm_partition(dests, src, mesh, model), src, mesh, approach);
}

struct PlannerOptions {
  CostModel cost_model = CostModel::IncludeApproachLeg;
  ApproachRouting approach = ApproachRouting::Hamiltonian;
};

inline RoutePlan plan(PlannerKind kind, std::span<const NodeCoord> dests, NodeCoord src,
                      const MeshConfig& mesh, const PlannerOptions& opts = {}) {
  switch (kind) {
    case PlannerKind::DPM: return plan_dpm(dests, src, mesh, opts.cost_model, opts.approach);
    case PlannerKind::MP: return plan_mp(dests, src, mesh);
    case PlannerKind::NMP: return plan_nmp(dests, src, mesh);
    case PlannerKind::DP: return plan_dp(dests, src, mesh);
    case PlannerKind::MU: return plan_mu(dests, src, mesh);
  }
  throw std::invalid_argument("unknown planner");
}

}  // namespace dpmnoc
