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

// Dynamic partition merging of a multicast destination set.
//
// Destinations are first split into eight sectors around the source. Runs of
// two or three circularly consecutive sectors are candidate merges; each
// candidate is priced as the cheaper of multiple unicast and dual-path
// delivery from its representative (the member nearest the source). Merges
// are taken greedily by saving until none saves anything, and untouched
// sectors are kept as they are.

#pragma once

#include <algorithm>
#include <array>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpmnoc/hamiltonian.hpp"
#include "dpmnoc/topology.hpp"

namespace dpmnoc {

inline constexpr int kSectors = 8;
inline constexpr int kMaxMergeWidth = 3;

// Delivery method inside a partition (also the header's routing field).
enum class RouteMode : std::uint8_t { DualPath, MultiUnicast };

inline const char* to_string(RouteMode m) {
  return m == RouteMode::DualPath ? "dual_path" : "multi_unicast";
}

enum class CostModel : std::uint8_t { FromRepresentative, IncludeApproachLeg };

inline const char* to_string(CostModel m) {
  return m == CostModel::FromRepresentative ? "from_representative"
                                            : "include_approach_leg";
}

inline CostModel parse_cost_model(const std::string& s) {
  if (s == "from_representative") return CostModel::FromRepresentative;
  if (s == "include_approach_leg") return CostModel::IncludeApproachLeg;
  throw std::invalid_argument("unknown cost model '" + s + "'");
}

struct PartitionIndex {
  int value = 0;
  friend auto operator<=>(const PartitionIndex&, const PartitionIndex&) = default;
};

using BasicPartitions = std::array<std::vector<NodeCoord>, kSectors>;

struct CandidateSet {
  std::vector<PartitionIndex> constituents;  // circularly consecutive
  std::vector<NodeCoord> members;            // sorted by snake label
  std::optional<NodeCoord> representative;
  int cost = 0;
  RouteMode mode = RouteMode::MultiUnicast;
  int saving = 0;
  int non_empty_constituents = 0;

  bool merged() const { return constituents.size() > 1; }
  // A merge only makes sense if it actually joins two non-empty sectors.
  bool eligible() const { return merged() && non_empty_constituents >= 2; }
  PartitionIndex start() const { return constituents.front(); }
};

struct FinalPartition {
  std::vector<CandidateSet> sets;
  CostModel cost_model = CostModel::IncludeApproachLeg;
  int merges = 0;  // greedy selections performed

  int total_cost() const {
    int total = 0;
    for (const auto& s : sets) total += s.cost;
    return total;
  }
};

// ---------------------------------------------------------------------------
// Sector classification.

inline PartitionIndex classify(NodeCoord dest, NodeCoord src) {
  if (dest == src) {
    throw std::domain_error("the source cannot be one of its own destinations");
  }
  const int dx = (dest.x > src.x) - (dest.x < src.x);
  const int dy = (dest.y > src.y) - (dest.y < src.y);
  if (dy > 0) return PartitionIndex{dx > 0 ? 0 : dx == 0 ? 1 : 2};
  if (dy < 0) return PartitionIndex{dx < 0 ? 4 : dx == 0 ? 5 : 6};
  return PartitionIndex{dx < 0 ? 3 : 7};
}

namespace detail {

inline void sort_by_label(std::vector<NodeCoord>& v, const MeshConfig& mesh) {
  std::sort(v.begin(), v.end(), [&](NodeCoord a, NodeCoord b) {
    return label_of(a, mesh) < label_of(b, mesh);
  });
}

inline void require_destinations(std::span<const NodeCoord> dests, NodeCoord src,
                                 const MeshConfig& mesh, bool allow_empty) {
  require_in_bounds(src, mesh);
  if (!allow_empty && dests.empty()) {
    throw std::domain_error("destination set is empty");
  }
  std::set<NodeCoord> seen;
  for (const NodeCoord& d : dests) {
    require_in_bounds(d, mesh);
    if (d == src) throw std::domain_error("the source is in the destination set");
    if (!seen.insert(d).second) throw std::domain_error("duplicate destination");
  }
}

}  // namespace detail

inline BasicPartitions basic_partitions(std::span<const NodeCoord> dests,
                                        NodeCoord src, const MeshConfig& mesh) {
  detail::require_destinations(dests, src, mesh, /*allow_empty=*/true);
  BasicPartitions parts;
  for (const NodeCoord& d : dests) parts[classify(d, src).value].push_back(d);
  for (auto& p : parts) detail::sort_by_label(p, mesh);
  return parts;
}

// ---------------------------------------------------------------------------
// Representative and cost.

inline NodeCoord representative(std::span<const NodeCoord> members, NodeCoord src,
                                const MeshConfig& mesh) {
  if (members.empty()) {
    throw std::domain_error("representative of an empty set");
  }
  NodeCoord best = members.front();
  for (const NodeCoord& m : members.subspan(1)) {
    const int dm = manhattan(m, src);
    const int db = manhattan(best, src);
    if (dm < db || (dm == db && label_of(m, mesh) < label_of(best, mesh))) {
      best = m;
    }
  }
  return best;
}

namespace detail {
inline void require_member(std::span<const NodeCoord> members, NodeCoord r) {
  if (std::find(members.begin(), members.end(), r) == members.end()) {
    throw std::domain_error("representative is not a member of the set");
  }
}
}  // namespace detail

inline int cost_multi_unicast(std::span<const NodeCoord> members, NodeCoord rep) {
  detail::require_member(members, rep);
  int total = 0;
  for (const NodeCoord& d : members) total += manhattan(d, rep);
  return total;
}

// Members above / below the representative's label, in chain order.
struct DualPathSplit {
  std::vector<NodeCoord> high;  // ascending labels
  std::vector<NodeCoord> low;   // descending labels
};

inline DualPathSplit dual_path_split(std::span<const NodeCoord> members,
                                     NodeCoord from, const MeshConfig& mesh) {
  DualPathSplit split;
  const NodeLabel here = label_of(from, mesh);
  for (const NodeCoord& d : members) {
    if (d == from) continue;
    (label_of(d, mesh) > here ? split.high : split.low).push_back(d);
  }
  detail::sort_by_label(split.high, mesh);
  detail::sort_by_label(split.low, mesh);
  std::reverse(split.low.begin(), split.low.end());
  return split;
}

inline int cost_dual_path(std::span<const NodeCoord> members, NodeCoord rep,
                          const MeshConfig& mesh) {
  detail::require_member(members, rep);
  const DualPathSplit split = dual_path_split(members, rep, mesh);
  return chain_hops(rep, split.high, mesh) + chain_hops(rep, split.low, mesh);
}

struct PartitionCost {
  int cost = 0;
  RouteMode mode = RouteMode::MultiUnicast;
  std::optional<NodeCoord> representative;
};

inline PartitionCost cost(std::span<const NodeCoord> members, NodeCoord src,
                          const MeshConfig& mesh, CostModel model) {
  if (members.empty()) return {};
  const NodeCoord rep = representative(members, src, mesh);
  const int unicast = cost_multi_unicast(members, rep);
  const int dual = cost_dual_path(members, rep, mesh);
  PartitionCost out;
  out.representative = rep;
  // Multiple unicast wins ties: it needs no high/low split at the representative.
  out.mode = dual < unicast ? RouteMode::DualPath : RouteMode::MultiUnicast;
  out.cost = std::min(unicast, dual);
  if (model == CostModel::IncludeApproachLeg) out.cost += manhattan(src, rep);
  return out;
}

inline int saving(const CandidateSet& merged, std::span<const CandidateSet> parts) {
  std::vector<NodeCoord> joined;
  int parts_cost = 0;
  for (const CandidateSet& p : parts) {
    joined.insert(joined.end(), p.members.begin(), p.members.end());
    parts_cost += p.cost;
  }
  std::vector<NodeCoord> expected = merged.members;
  std::sort(joined.begin(), joined.end());
  std::sort(expected.begin(), expected.end());
  if (joined != expected) {
    throw std::domain_error("merged members are not the union of its parts");
  }
  return std::max(0, parts_cost - merged.cost);
}

// ---------------------------------------------------------------------------
// Candidate generation.

// Candidate layout: [0,8) singles P_i, [8,16) pairs P_iP_{i+1}, [16,24)
// triples P_iP_{i+1}P_{i+2}, indices taken modulo 8.
inline std::vector<CandidateSet> candidate_sets(const BasicPartitions& parts,
                                                NodeCoord src, const MeshConfig& mesh,
                                                CostModel model) {
  std::vector<CandidateSet> v;
  v.reserve(kSectors * kMaxMergeWidth);
  for (int width = 1; width <= kMaxMergeWidth; ++width) {
    for (int start = 0; start < kSectors; ++start) {
      CandidateSet c;
      for (int k = 0; k < width; ++k) {
        const int idx = (start + k) % kSectors;
        c.constituents.push_back(PartitionIndex{idx});
        const auto& p = parts[idx];
        if (!p.empty()) ++c.non_empty_constituents;
        c.members.insert(c.members.end(), p.begin(), p.end());
      }
      detail::sort_by_label(c.members, mesh);
      const PartitionCost pc = cost(c.members, src, mesh, model);
      c.cost = pc.cost;
      c.mode = pc.mode;
      c.representative = pc.representative;
      v.push_back(std::move(c));
    }
  }
  for (auto& c : v) {
    if (!c.eligible()) continue;
    std::vector<CandidateSet> singles;
    for (PartitionIndex i : c.constituents) singles.push_back(v[i.value]);
    c.saving = saving(c, singles);
  }
  return v;
}

namespace detail {

inline bool shares_constituent(const CandidateSet& a, const CandidateSet& b) {
  for (PartitionIndex i : a.constituents)
    for (PartitionIndex j : b.constituents)
      if (i == j) return true;
  return false;
}

// Ordering among equal savings: fewer constituents first, then the lower
// starting sector (a wrapping run such as P7P0 starts at 7).
inline bool preferred(const CandidateSet& a, const CandidateSet& b) {
  if (a.saving != b.saving) return a.saving > b.saving;
  if (a.constituents.size() != b.constituents.size())
    return a.constituents.size() < b.constituents.size();
  return a.start() < b.start();
}

}  // namespace detail

inline FinalPartition dpm_partition(std::span<const NodeCoord> dests, NodeCoord src,
                                    const MeshConfig& mesh,
                                    CostModel model = CostModel::IncludeApproachLeg) {
  detail::require_destinations(dests, src, mesh, /*allow_empty=*/false);
  const BasicPartitions parts = basic_partitions(dests, src, mesh);
  std::vector<CandidateSet> v = candidate_sets(parts, src, mesh, model);

  FinalPartition result;
  result.cost_model = model;
  std::array<bool, kSectors> consumed{};
  std::vector<int> live_saving(v.size(), 0);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i].eligible()) live_saving[i] = v[i].saving;

  while (true) {
    int best = -1;
    for (int i = 0; i < static_cast<int>(v.size()); ++i) {
      if (live_saving[i] <= 0) continue;
      if (best < 0 || detail::preferred(v[i], v[best])) best = i;
    }
    if (best < 0) break;
    const CandidateSet chosen = v[best];
    result.sets.push_back(chosen);
    ++result.merges;
    for (PartitionIndex i : chosen.constituents) consumed[i.value] = true;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (detail::shares_constituent(v[i], chosen)) live_saving[i] = 0;
  }
  for (int i = 0; i < kSectors; ++i) {
    if (!consumed[i] && !parts[i].empty()) result.sets.push_back(v[i]);
  }
  return result;
}

// Exhaustive minimum over every tiling of the sector ring by runs of one to
// three sectors. Runs may not overlap, so the member sets of the chosen
// candidates are disjoint and cover the destination set.
inline FinalPartition exact_optimal_partition(std::span<const NodeCoord> dests,
                                              NodeCoord src, const MeshConfig& mesh,
                                              CostModel model = CostModel::IncludeApproachLeg) {
  detail::require_destinations(dests, src, mesh, /*allow_empty=*/false);
  const BasicPartitions parts = basic_partitions(dests, src, mesh);
  const std::vector<CandidateSet> v = candidate_sets(parts, src, mesh, model);
  auto candidate = [&](int start, int width) -> const CandidateSet& {
    return v[(width - 1) * kSectors + start];
  };

  int best_cost = std::numeric_limits<int>::max();
  std::vector<std::pair<int, int>> best_runs, runs;

  // The run covering sector 0 starts at one of 0, 7 or 6; the rest of the
  // ring is then tiled linearly.
  auto tile = [&](auto&& self, int pos, int end, int acc) -> void {
    if (acc >= best_cost) return;
    if (pos == end) {
      best_cost = acc;
      best_runs = runs;
      return;
    }
    for (int width = 1; width <= kMaxMergeWidth && pos + width <= end; ++width) {
      const CandidateSet& c = candidate(pos % kSectors, width);
      runs.emplace_back(pos % kSectors, width);
      self(self, pos + width, end, acc + c.cost);
      runs.pop_back();
    }
  };
  for (int first_start = 0; first_start > -kMaxMergeWidth; --first_start) {
    for (int width = 1 - first_start; width <= kMaxMergeWidth; ++width) {
      const int start = (first_start + kSectors) % kSectors;
      const int covered_end = first_start + width;  // exclusive, in [1,3]
      const int ring_end = kSectors + first_start;  // sectors covered wrap-around
      runs.assign(1, {start, width});
      tile(tile, covered_end, ring_end, candidate(start, width).cost);
    }
  }

  FinalPartition result;
  result.cost_model = model;
  for (auto [start, width] : best_runs) {
    const CandidateSet& c = candidate(start, width);
    if (!c.members.empty()) result.sets.push_back(c);
  }
  return result;
}

// Partition consisting of the non-empty sectors as they are.
inline FinalPartition basic_final_partition(std::span<const NodeCoord> dests,
                                            NodeCoord src, const MeshConfig& mesh,
                                            CostModel model = CostModel::IncludeApproachLeg) {
  detail::require_destinations(dests, src, mesh, /*allow_empty=*/false);
  const BasicPartitions parts = basic_partitions(dests, src, mesh);
  const std::vector<CandidateSet> v = candidate_sets(parts, src, mesh, model);
  FinalPartition result;
  result.cost_model = model;
  for (int i = 0; i < kSectors; ++i)
    if (!parts[i].empty()) result.sets.push_back(v[i]);
  return result;
}

}  // namespace dpmnoc
