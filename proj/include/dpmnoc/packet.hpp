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

// Packet headers and the packet programs a route plan compiles into.
//
// Header layout (documentation only; the simulator keeps fields unpacked):
//
//   | kind:2 | type:1 | routing:1 | source:ceil(log2 N) | dest:ceil(log2 N) | bits:N |
//
// where N is the node count and `bits` marks the destinations still owed a
// copy, indexed by snake label.

#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "dpmnoc/hamiltonian.hpp"
#include "dpmnoc/routing.hpp"
#include "dpmnoc/topology.hpp"

namespace dpmnoc {

enum class FlitKind : std::uint8_t { Head, Body, Tail };

inline FlitKind flit_kind(int index, int packet_size) {
  if (packet_size < 2) throw std::invalid_argument("packet_size must be at least 2");
  if (index == 0) return FlitKind::Head;
  return index == packet_size - 1 ? FlitKind::Tail : FlitKind::Body;
}

enum class PacketType : std::uint8_t { Unicast, Multicast };

struct PacketHeader {
  PacketType packet_type = PacketType::Unicast;
  RouteMode routing_field = RouteMode::DualPath;
  NodeLabel source;
  NodeLabel dest;                        // current steering target
  std::vector<bool> dest_bitstring;      // one bit per node, by label

  int remaining() const {
    return static_cast<int>(std::count(dest_bitstring.begin(), dest_bitstring.end(), true));
  }
};

inline int header_bits(const MeshConfig& mesh) {
  const int n = mesh.node_count();
  const int id = std::bit_width(static_cast<unsigned>(n - 1));
  return 2 + 1 + 1 + 2 * id + n;
}

struct CopyDecision {
  bool deliver_local = false;
  bool forward = false;
  PacketHeader header;
};

// Path-based delivery at `here`: a set bit yields a local copy; the bit is
// cleared and the packet retargets to the next remaining label in its travel
// direction.
inline CopyDecision copy_and_forward(const PacketHeader& h, NodeLabel here) {
  CopyDecision out{false, false, h};
  auto& bits = out.header.dest_bitstring;
  if (here.value < 0 || here.value >= static_cast<int>(bits.size()))
    throw std::domain_error("label outside the header bitstring");
  if (!bits[here.value]) {
    out.forward = true;
    return out;
  }
  out.deliver_local = true;
  bits[here.value] = false;
  out.forward = out.header.remaining() > 0;
  if (out.forward && here == h.dest) {
    const bool ascending = here.value > h.source.value;
    int next = -1;
    if (ascending) {
      for (int l = here.value + 1; l < static_cast<int>(bits.size()); ++l)
        if (bits[l]) { next = l; break; }
    } else {
      for (int l = here.value - 1; l >= 0; --l)
        if (bits[l]) { next = l; break; }
    }
    if (next < 0) throw std::domain_error("remaining destinations lie behind the chain");
    out.header.dest = NodeLabel{next};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Packet programs.

enum class PacketRole : std::uint8_t { Approach, Chain, Unicast, Greedy };

inline const char* to_string(PacketRole r) {
  switch (r) {
    case PacketRole::Approach: return "approach";
    case PacketRole::Chain: return "chain";
    case PacketRole::Unicast: return "unicast";
    case PacketRole::Greedy: return "greedy";
  }
  return "?";
}

struct PacketSpec {
  PacketRole role = PacketRole::Unicast;
  PacketType type = PacketType::Unicast;
  RouteMode routing_field = RouteMode::DualPath;
  NodeCoord start;                      // injecting node
  std::vector<NodeCoord> targets;       // steering targets, in order
  std::vector<NodeCoord> deliveries;    // nodes owed a copy by this packet
  bool xy = false;                      // XY steering instead of Hamiltonian
  int base_hops = 0;                    // hops spent before this packet starts
  int hops = 0;                         // hops of this packet alone
  std::vector<int> children;            // injected at the final target
};

struct PacketProgram {
  std::vector<PacketSpec> packets;
  std::vector<int> roots;               // injected at the message source, in order
  int destination_count = 0;
};

namespace detail {

// Both XY and snake legs are minimal.
inline int targets_hops(const PacketSpec& p) {
  int hops = 0;
  NodeCoord cur = p.start;
  for (NodeCoord t : p.targets) {
    hops += manhattan(cur, t);
    cur = t;
  }
  return hops;
}

inline int add_packet(PacketProgram& prog, PacketSpec spec) {
  spec.hops = targets_hops(spec);
  prog.packets.push_back(std::move(spec));
  return static_cast<int>(prog.packets.size()) - 1;
}

inline PacketSpec chain_spec(NodeCoord start, const std::vector<NodeCoord>& chain, int base) {
  PacketSpec s;
  s.role = chain.size() == 1 ? PacketRole::Unicast : PacketRole::Chain;
  s.type = chain.size() == 1 ? PacketType::Unicast : PacketType::Multicast;
  s.routing_field = RouteMode::DualPath;
  s.start = start;
  s.targets = chain;
  s.deliveries = chain;
  s.base_hops = base;
  return s;
}

inline PacketSpec unicast_spec(NodeCoord start, NodeCoord d, int base) {
  PacketSpec s = chain_spec(start, {d}, base);
  s.routing_field = RouteMode::MultiUnicast;
  return s;
}

// Nearest-first targets split at every change of label direction; each run
// is one packet and the next run starts where the previous one ended.
inline void add_greedy(PacketProgram& prog, NodeCoord src, const RouteEntry& e,
                       const MeshConfig& mesh) {
  std::vector<NodeCoord> remaining = e.destinations;
  NodeCoord cur = src;
  int parent = -1;
  int base = 0;
  std::size_t i = 0;
  while (i < e.greedy_chain.size()) {
    PacketSpec s;
    s.role = PacketRole::Greedy;
    s.routing_field = RouteMode::DualPath;
    s.start = cur;
    s.deliveries = remaining;
    s.base_hops = base;
    const bool up = label_of(e.greedy_chain[i], mesh) > label_of(cur, mesh);
    NodeCoord at = cur;
    while (i < e.greedy_chain.size() &&
           (label_of(e.greedy_chain[i], mesh) > label_of(at, mesh)) == up) {
      const auto path = hamiltonian_path(at, e.greedy_chain[i], mesh);
      for (std::size_t k = 1; k < path.size(); ++k)
        std::erase(remaining, path[k]);
      s.targets.push_back(e.greedy_chain[i]);
      at = e.greedy_chain[i];
      ++i;
    }
    s.type = s.deliveries.size() == 1 ? PacketType::Unicast : PacketType::Multicast;
    const int id = add_packet(prog, std::move(s));
    if (parent < 0) prog.roots.push_back(id);
    else prog.packets[parent].children.push_back(id);
    base += prog.packets[id].hops;
    parent = id;
    cur = at;
  }
}

}  // namespace detail

inline PacketProgram compile(const RoutePlan& plan, const MeshConfig& mesh,
                             ApproachRouting approach = ApproachRouting::Hamiltonian) {
  PacketProgram prog;
  const NodeCoord src = plan.source;
  for (const RouteEntry& e : plan.entries) {
    prog.destination_count += static_cast<int>(e.destinations.size());
    if (!e.greedy_chain.empty()) {
      detail::add_greedy(prog, src, e, mesh);
      continue;
    }
    NodeCoord origin = src;
    int base = 0;
    int parent = -1;
    if (e.representative) {
      const NodeCoord rep = *e.representative;
      PacketSpec a;
      a.role = PacketRole::Approach;
      a.type = e.destinations.size() == 1 ? PacketType::Unicast : PacketType::Multicast;
      a.routing_field = e.mode;
      a.start = src;
      a.targets = {rep};
      a.deliveries = {rep};
      a.xy = approach == ApproachRouting::XY;
      parent = detail::add_packet(prog, std::move(a));
      prog.roots.push_back(parent);
      origin = rep;
      base = prog.packets[parent].hops;
    }
    auto attach = [&](PacketSpec s) {
      const int id = detail::add_packet(prog, std::move(s));
      if (parent < 0) prog.roots.push_back(id);
      else prog.packets[parent].children.push_back(id);
    };
    if (!e.high_chain.empty()) attach(detail::chain_spec(origin, e.high_chain, base));
    if (!e.low_chain.empty()) attach(detail::chain_spec(origin, e.low_chain, base));
    for (NodeCoord d : e.unicast_fanout) attach(detail::unicast_spec(origin, d, base));
  }
  return prog;
}

// Children a representative injects once the approach packet is absorbed.
inline std::vector<PacketSpec> replicate_at_representative(const PacketProgram& prog,
                                                           int approach) {
  std::vector<PacketSpec> out;
  for (int c : prog.packets.at(approach).children) out.push_back(prog.packets[c]);
  return out;
}

inline PacketHeader make_header(const PacketSpec& s, const MeshConfig& mesh) {
  PacketHeader h;
  h.packet_type = s.type;
  h.routing_field = s.routing_field;
  h.source = label_of(s.start, mesh);
  h.dest = label_of(s.targets.front(), mesh);
  h.dest_bitstring.assign(mesh.node_count(), false);
  for (NodeCoord d : s.deliveries) h.dest_bitstring[label_of(d, mesh).value] = true;
  return h;
}

struct RouteDecision {
  Port port = Port::Local;
  Subnet subnet = Subnet::High;
};

// Output port toward header.dest from `here`; the class follows the label
// direction of the chosen hop.
inline RouteDecision route_compute(const PacketHeader& h, NodeLabel here, const MeshConfig& mesh,
                                   ApproachRouting steering = ApproachRouting::Hamiltonian) {
  if (h.dest == here) throw std::domain_error("route_compute called at the destination");
  const NodeCoord at = coord_of(here, mesh);
  const NodeCoord dest = coord_of(h.dest, mesh);
  const NodeCoord nb = steering == ApproachRouting::XY ? next_hop_xy(at, dest)
                                                       : next_hop(at, dest, mesh);
  return {port_toward(at, nb), label_of(nb, mesh) > here ? Subnet::High : Subnet::Low};
}

}  // namespace dpmnoc
