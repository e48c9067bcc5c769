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

// Channel dependency graph construction and cycle detection.
//
// A routing relation is explored from every injection point; a packet that
// holds channel c1 and may next request c2 contributes the edge c1 -> c2.
// An acyclic graph means the relation cannot deadlock (Dally & Seitz).

#pragma once

#include <algorithm>
#include <concepts>
#include <deque>
#include <optional>
#include <vector>

#include "dpmnoc/hamiltonian.hpp"
#include "dpmnoc/topology.hpp"

namespace dpmnoc {

// One step of a routing relation: the channel taken and the opaque routing
// state (typically the current destination) the packet carries on it.
struct RelationHop {
  Channel channel;
  int state = 0;
};

template <class R>
concept RoutingRelation = requires(const R& r, NodeCoord n, const Channel& c, int s) {
  { r.state_count() } -> std::convertible_to<int>;
  { r.inject(n) } -> std::convertible_to<std::vector<RelationHop>>;
  { r.advance(c, s) } -> std::convertible_to<std::vector<RelationHop>>;
};

struct ChannelDependencyGraph {
  MeshConfig mesh;
  // Adjacency over dense channel indices (see channel_index()).
  std::vector<std::vector<int>> successors;
  std::vector<bool> used;
  bool acyclic = true;
  // Shortest dependency cycle, in traversal order, when the graph is cyclic.
  std::vector<Channel> witness;

  int channel_count() const {
    return static_cast<int>(std::count(used.begin(), used.end(), true));
  }
  int edge_count() const {
    int n = 0;
    for (const auto& s : successors) n += static_cast<int>(s.size());
    return n;
  }
};

namespace detail {

// Kahn's algorithm over the channels that carry traffic.
inline bool kahn_acyclic(const std::vector<std::vector<int>>& succ) {
  std::vector<int> indegree(succ.size(), 0);
  for (const auto& out : succ)
    for (int v : out) ++indegree[v];
  std::vector<int> stack;
  for (int v = 0; v < static_cast<int>(succ.size()); ++v)
    if (indegree[v] == 0) stack.push_back(v);
  std::size_t removed = 0;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    ++removed;
    for (int w : succ[v])
      if (--indegree[w] == 0) stack.push_back(w);
  }
  return removed == succ.size();
}

// Shortest directed cycle by BFS from every vertex.
inline std::vector<int> shortest_cycle(const std::vector<std::vector<int>>& succ) {
  const int n = static_cast<int>(succ.size());
  std::vector<int> best;
  std::vector<int> dist(n), parent(n);
  for (int root = 0; root < n; ++root) {
    if (succ[root].empty()) continue;
    std::fill(dist.begin(), dist.end(), -1);
    dist[root] = 0;
    std::deque<int> queue{root};
    std::optional<int> closing;
    while (!queue.empty() && !closing) {
      const int v = queue.front();
      queue.pop_front();
      if (!best.empty() && dist[v] + 1 >= static_cast<int>(best.size())) break;
      for (int w : succ[v]) {
        if (w == root) {
          closing = v;
          break;
        }
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          parent[w] = v;
          queue.push_back(w);
        }
      }
    }
    if (!closing) continue;
    std::vector<int> cycle;
    for (int v = *closing; v != root; v = parent[v]) cycle.push_back(v);
    cycle.push_back(root);
    std::reverse(cycle.begin(), cycle.end());
    if (best.empty() || cycle.size() < best.size()) best = std::move(cycle);
  }
  return best;
}

}  // namespace detail

template <RoutingRelation Relation>
ChannelDependencyGraph channel_dependency_graph(const MeshConfig& mesh,
                                                const Relation& relation) {
  mesh.validate();
  const int channels = channel_index_space(mesh);
  const int states = relation.state_count();
  ChannelDependencyGraph g;
  g.mesh = mesh;
  g.successors.assign(channels, {});
  g.used.assign(channels, false);

  std::vector<bool> seen(static_cast<std::size_t>(channels) * states, false);
  std::vector<RelationHop> frontier;
  auto visit = [&](const RelationHop& hop) {
    const int c = channel_index(hop.channel, mesh);
    g.used[c] = true;
    const std::size_t key = static_cast<std::size_t>(c) * states + hop.state;
    if (!seen[key]) {
      seen[key] = true;
      frontier.push_back(hop);
    }
  };

  for (int i = 0; i < mesh.node_count(); ++i) {
    for (const RelationHop& hop : relation.inject(from_row_major(i, mesh))) visit(hop);
  }
  while (!frontier.empty()) {
    const RelationHop hop = frontier.back();
    frontier.pop_back();
    const int c = channel_index(hop.channel, mesh);
    for (const RelationHop& next : relation.advance(hop.channel, hop.state)) {
      const int n = channel_index(next.channel, mesh);
      auto& out = g.successors[c];
      if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
      visit(next);
    }
  }
  for (auto& out : g.successors) std::sort(out.begin(), out.end());

  g.acyclic = detail::kahn_acyclic(g.successors);
  if (!g.acyclic) {
    for (int c : detail::shortest_cycle(g.successors)) {
      g.witness.push_back(channel_from_index(c, mesh));
    }
  }
  return g;
}

// Label-monotone routing on the high/low subnetworks. Destinations are
// delivered along monotone chains, so a packet reaching its current target may
// continue to any further target in the same direction. With `xy_approach`,
// representative-bound approach packets use dimension-order routing instead;
// each of their hops is placed on the subnet matching its label direction.
class HamiltonianRelation {
 public:
  explicit HamiltonianRelation(MeshConfig mesh, bool xy_approach = false)
      : mesh_(mesh), xy_approach_(xy_approach) {}

  int state_count() const { return mesh_.node_count() * 2; }

  std::vector<RelationHop> inject(NodeCoord src) const {
    std::vector<RelationHop> out;
    for (int i = 0; i < mesh_.node_count(); ++i) {
      const NodeCoord d = from_row_major(i, mesh_);
      if (d == src) continue;
      out.push_back(hamiltonian_hop(src, d));
      if (xy_approach_) out.push_back(xy_hop(src, d));
    }
    return out;
  }

  std::vector<RelationHop> advance(const Channel& ch, int state) const {
    const NodeCoord v = ch.to;
    const NodeCoord dest = from_row_major(state / 2, mesh_);
    const bool xy = state % 2 == 1;
    if (xy) {
      if (v == dest) return {};
      return {xy_hop(v, dest)};
    }
    if (v != dest) return {hamiltonian_hop(v, dest)};
    // Copy point: the chain may continue to any further target in-direction.
    std::vector<RelationHop> out;
    const int here = label_of(v, mesh_).value;
    for (int i = 0; i < mesh_.node_count(); ++i) {
      const NodeCoord d = from_row_major(i, mesh_);
      const int l = label_of(d, mesh_).value;
      if (ch.subnet == Subnet::High ? l > here : l < here) {
        out.push_back(hamiltonian_hop(v, d));
      }
    }
    return out;
  }

 private:
  RelationHop hamiltonian_hop(NodeCoord at, NodeCoord dest) const {
    const NodeCoord n = next_hop(at, dest, mesh_);
    return {Channel{at, n, channel_subnet(at, n, mesh_)},
            row_major_index(dest, mesh_) * 2};
  }
  RelationHop xy_hop(NodeCoord at, NodeCoord dest) const {
    const NodeCoord n = next_hop_xy(at, dest);
    return {Channel{at, n, channel_subnet(at, n, mesh_)},
            row_major_index(dest, mesh_) * 2 + 1};
  }

  MeshConfig mesh_;
  bool xy_approach_;
};

// Every turn permitted (no 180-degree reversal), one virtual channel class.
// Used to confirm that the checker detects the classic turn cycle.
class AllTurnsRelation {
 public:
  explicit AllTurnsRelation(MeshConfig mesh) : mesh_(mesh) {}

  int state_count() const { return 1; }

  std::vector<RelationHop> inject(NodeCoord src) const {
    std::vector<RelationHop> out;
    for (const NodeCoord& n : neighbors(src, mesh_)) {
      out.push_back({Channel{src, n, Subnet::High}, 0});
    }
    return out;
  }

  std::vector<RelationHop> advance(const Channel& ch, int) const {
    std::vector<RelationHop> out;
    for (const NodeCoord& n : neighbors(ch.to, mesh_)) {
      if (n != ch.from) out.push_back({Channel{ch.to, n, Subnet::High}, 0});
    }
    return out;
  }

 private:
  MeshConfig mesh_;
};

}  // namespace dpmnoc
