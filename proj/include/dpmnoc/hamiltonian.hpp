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

// Hop-level routing on the snake-labeled mesh.
//
// The high subnetwork only moves to larger labels and the low subnetwork only
// to smaller ones. Within a subnetwork the next hop is the neighbor whose
// label is furthest along without overshooting the destination.

#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "dpmnoc/topology.hpp"

namespace dpmnoc {

inline NodeCoord next_hop_high(NodeCoord u, NodeCoord dest,
                               const MeshConfig& mesh) {
  const int target = label_of(dest, mesh).value;
  const int here = label_of(u, mesh).value;
  if (target <= here) {
    throw std::domain_error("next_hop_high requires a higher-labeled destination");
  }
  NodeCoord best = u;
  int best_label = here;
  for (int p = 0; p < kMeshPorts; ++p) {
    const NodeCoord v{u.x + kPortDx[p], u.y + kPortDy[p]};
    if (!in_bounds(v, mesh)) continue;
    const int l = label_of(v, mesh).value;
    if (l <= target && l > best_label) {
      best = v;
      best_label = l;
    }
  }
  return best;
}

inline NodeCoord next_hop_low(NodeCoord u, NodeCoord dest,
                              const MeshConfig& mesh) {
  const int target = label_of(dest, mesh).value;
  const int here = label_of(u, mesh).value;
  if (target >= here) {
    throw std::domain_error("next_hop_low requires a lower-labeled destination");
  }
  NodeCoord best = u;
  int best_label = here;
  for (int p = 0; p < kMeshPorts; ++p) {
    const NodeCoord v{u.x + kPortDx[p], u.y + kPortDy[p]};
    if (!in_bounds(v, mesh)) continue;
    const int l = label_of(v, mesh).value;
    if (l >= target && l < best_label) {
      best = v;
      best_label = l;
    }
  }
  return best;
}

// Subnet-aware next hop: High when the destination label is larger.
inline NodeCoord next_hop(NodeCoord u, NodeCoord dest, const MeshConfig& mesh) {
  return label_of(dest, mesh) > label_of(u, mesh) ? next_hop_high(u, dest, mesh)
                                                  : next_hop_low(u, dest, mesh);
}

// Dimension-order (X then Y) next hop.
inline NodeCoord next_hop_xy(NodeCoord u, NodeCoord dest) {
  if (u.x != dest.x) return NodeCoord{u.x + (dest.x > u.x ? 1 : -1), u.y};
  if (u.y != dest.y) return NodeCoord{u.x, u.y + (dest.y > u.y ? 1 : -1)};
  throw std::domain_error("next_hop_xy called at the destination");
}

// Node sequence from `from` to `to` inclusive, following the Hamiltonian
// subnet that matches the label direction.
inline std::vector<NodeCoord> hamiltonian_path(NodeCoord from, NodeCoord to,
                                               const MeshConfig& mesh) {
  std::vector<NodeCoord> path{from};
  NodeCoord cur = from;
  while (cur != to) {
    cur = next_hop(cur, to, mesh);
    path.push_back(cur);
  }
  return path;
}

inline std::vector<NodeCoord> xy_path(NodeCoord from, NodeCoord to) {
  std::vector<NodeCoord> path{from};
  NodeCoord cur = from;
  while (cur != to) {
    cur = next_hop_xy(cur, to);
    path.push_back(cur);
  }
  return path;
}

struct ChainWalk {
  int hops = 0;
  std::vector<NodeCoord> path;  // start .. last destination, inclusive
};

// Walks a label-monotone chain of destinations starting at `start`. The
// chain direction is fixed by the first destination; every later destination
// must continue in the same direction.
inline ChainWalk walk_chain(NodeCoord start, std::span<const NodeCoord> dests,
                            const MeshConfig& mesh) {
  ChainWalk walk;
  walk.path.push_back(start);
  if (dests.empty()) return walk;
  const int s = label_of(start, mesh).value;
  const bool ascending = label_of(dests.front(), mesh).value > s;
  int prev = s;
  for (const NodeCoord& d : dests) {
    const int l = label_of(d, mesh).value;
    if (ascending ? l <= prev : l >= prev) {
      throw std::domain_error("chain destinations are not label-monotone");
    }
    prev = l;
  }
  NodeCoord cur = start;
  for (const NodeCoord& d : dests) {
    while (cur != d) {
      cur = ascending ? next_hop_high(cur, d, mesh) : next_hop_low(cur, d, mesh);
      walk.path.push_back(cur);
      ++walk.hops;
    }
  }
  return walk;
}

// Hop count of walk_chain without materializing the path. Snake next hops
// always shorten the Manhattan distance by one, so each leg costs exactly
// its Manhattan length.
inline int chain_hops(NodeCoord start, std::span<const NodeCoord> dests,
                      const MeshConfig& mesh) {
  if (dests.empty()) return 0;
  const int s = label_of(start, mesh).value;
  const bool ascending = label_of(dests.front(), mesh).value > s;
  int prev = s;
  int hops = 0;
  NodeCoord cur = start;
  for (const NodeCoord& d : dests) {
    const int l = label_of(d, mesh).value;
    if (ascending ? l <= prev : l >= prev) {
      throw std::domain_error("chain destinations are not label-monotone");
    }
    prev = l;
    hops += manhattan(cur, d);
    cur = d;
  }
  return hops;
}

}  // namespace dpmnoc
