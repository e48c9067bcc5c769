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

// Contention-free delivery schedule of one message.
//
// A packet whose head enters the local buffer at cycle s reaches a node h
// hops down its path with its tail ejected at
//
//   s + (h + 1) * (R + L) + (P - 1)
//
// Packets queued at the same interface start P cycles apart; children start
// when their parent's tail is absorbed.

#pragma once

#include <algorithm>
#include <map>
#include <queue>
#include <stdexcept>
#include <vector>

#include "dpmnoc/engine.hpp"
#include "dpmnoc/packet.hpp"

namespace dpmnoc {

struct PredictedDelivery {
  NodeLabel destination;
  Cycle tail_arrival = 0;
  int hops = 0;
};

inline Cycle per_hop_latency(const SimConfig& cfg) {
  return cfg.router_latency + cfg.link_latency;
}

// Unicast zero-load latency over `hops` links.
inline Cycle zero_load_latency(const SimConfig& cfg, int hops) {
  return (hops + 1) * per_hop_latency(cfg) + (cfg.packet_size - 1);
}

// The schedule holds only if a lone packet never waits for credits or for a
// released output VC.
inline void require_streaming(const SimConfig& cfg) {
  const int r = cfg.router_latency, l = cfg.link_latency, p = cfg.packet_size;
  if (2 * l + r > cfg.buffer_depth)
    throw std::invalid_argument("buffer_depth too shallow for a stall-free pipeline");
  if (r + 2 * l > p + 1 && std::min(cfg.vcs_high, cfg.vcs_low) < 2)
    throw std::invalid_argument("VC release latency exceeds packet spacing");
}

inline std::vector<PredictedDelivery> predict_schedule(const PacketProgram& prog,
                                                       const SimConfig& cfg, Cycle generated) {
  require_streaming(cfg);
  const MeshConfig& mesh = cfg.mesh;
  std::vector<PredictedDelivery> out;
  std::map<int, Cycle> interface_free;
  // (ready cycle, sequence, packet, node)
  using Item = std::tuple<Cycle, int, int, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> ready;
  int seq = 0;
  const int src = row_major_index(prog.packets.at(prog.roots.front()).start, mesh);
  for (int root : prog.roots) ready.emplace(generated, seq++, root, src);
  while (!ready.empty()) {
    const auto [at, order, id, node] = ready.top();
    ready.pop();
    const PacketSpec& s = prog.packets[id];
    Cycle& free = interface_free[node];
    const Cycle start = std::max(at, free);
    free = start + cfg.packet_size;
    std::vector<NodeCoord> owed = s.deliveries;
    NodeCoord cur = s.start;
    int hops = 0;
    for (NodeCoord t : s.targets) {
      const auto path = s.xy ? xy_path(cur, t) : hamiltonian_path(cur, t, mesh);
      for (std::size_t k = 1; k < path.size(); ++k) {
        ++hops;
        auto it = std::find(owed.begin(), owed.end(), path[k]);
        const bool approach_passing = s.role == PacketRole::Approach && path[k] != t;
        if (it == owed.end() || approach_passing) continue;
        owed.erase(it);
        out.push_back({label_of(path[k], mesh), start + zero_load_latency(cfg, hops),
                       s.base_hops + hops});
      }
      cur = t;
    }
    const Cycle absorbed = start + zero_load_latency(cfg, hops);
    const int here = row_major_index(cur, mesh);
    for (int c : s.children) ready.emplace(absorbed, seq++, c, here);
  }
  return out;
}

}  // namespace dpmnoc
