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

// Cycle-accurate wormhole mesh simulator.
//
// Router model: five input ports (four mesh links plus the local injection
// port), each with `vcs_per_port` virtual channels of `buffer_depth` flits.
// VCs [0, vcs_high) carry label-ascending hops, the rest label-descending
// hops. A flit written into a buffer at cycle t may leave at t + R; a link
// takes L cycles and credits return over the same latency. Allocation is
// round-robin over input VCs; an output VC is handed to the lowest free index
// of the required class and released when the credit for the tail returns.
//
// Multicast delivery is path based. A packet passing a node it owes a copy to
// is switched to the local port and the forward port in the same cycle. A
// packet that reaches its last steering target is absorbed there and its
// children, if any, are queued at that node's network interface.

#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpmnoc/metrics.hpp"
#include "dpmnoc/packet.hpp"
#include "dpmnoc/routing.hpp"
#include "dpmnoc/topology.hpp"
#include "dpmnoc/workload.hpp"

namespace dpmnoc {

// Hamiltonian: snake next hops on the high/low subnetworks. AllTurns is a
// deliberately unsafe test relation: XY from sources with even x + y, YX
// otherwise, every hop in the High class.
enum class RoutingMode : std::uint8_t { Hamiltonian, AllTurns };

inline const char* to_string(RoutingMode m) {
  return m == RoutingMode::Hamiltonian ? "hamiltonian" : "all_turns";
}

inline RoutingMode parse_routing_mode(const std::string& s) {
  if (s == "hamiltonian") return RoutingMode::Hamiltonian;
  if (s == "all_turns") return RoutingMode::AllTurns;
  throw std::invalid_argument("unknown routing mode '" + s + "'");
}

// Age: the request of the oldest message wins, round-robin among equals.
// RoundRobin: plain round-robin.
enum class Arbitration : std::uint8_t { Age, RoundRobin };

inline const char* to_string(Arbitration a) {
  return a == Arbitration::Age ? "age" : "round_robin";
}

inline Arbitration parse_arbitration(const std::string& s) {
  if (s == "age") return Arbitration::Age;
  if (s == "round_robin") return Arbitration::RoundRobin;
  throw std::invalid_argument("unknown arbitration '" + s + "'");
}

struct SimConfig {
  MeshConfig mesh{8, 8};
  int vcs_per_port = 4;
  int vcs_high = 2;
  int vcs_low = 2;
  int buffer_depth = 4;
  int packet_size = 4;
  PlannerKind planner = PlannerKind::DPM;
  CostModel cost_model = CostModel::IncludeApproachLeg;
  ApproachRouting approach = ApproachRouting::Hamiltonian;
  RoutingMode routing = RoutingMode::Hamiltonian;
  Arbitration arbitration = Arbitration::Age;
  int router_latency = 1;
  int link_latency = 1;
  Cycle watchdog_threshold = 10000;
  Cycle warmup = 1000;
  Cycle measure = 10000;
  Cycle drain = 50000;              // cap on cycles spent draining
  std::size_t max_source_queue = 0;  // 0 = unbounded
  bool keep_records = false;
  bool check_invariants = false;
  std::uint64_t seed = 1;
  EnergyWeights energy{};

  void validate() const {
    mesh.validate();
    auto need = [](bool ok, const std::string& what) {
      if (!ok) throw std::invalid_argument(what);
    };
    need(vcs_high >= 1 && vcs_low >= 0, "vcs_high must be >= 1 and vcs_low >= 0");
    need(vcs_high + vcs_low == vcs_per_port, "vcs_high + vcs_low must equal vcs_per_port");
    need(vcs_per_port <= 12, "vcs_per_port must be at most 12");
    need(routing == RoutingMode::AllTurns || vcs_low >= 1,
         "hamiltonian routing needs at least one low VC");
    need(buffer_depth >= 1, "buffer_depth must be >= 1");
    need(packet_size >= 2, "packet_size must be >= 2");
    need(router_latency >= 1 && link_latency >= 1, "router and link latency must be >= 1");
    need(watchdog_threshold >= 1, "watchdog_threshold must be >= 1");
    need(warmup >= 0 && measure >= 0 && drain >= 0, "phase lengths must be >= 0");
  }
};

struct VcLocation {
  NodeCoord node;
  Port port = Port::Local;
  int vc = 0;
};

class DeadlockDetected : public std::runtime_error {
 public:
  DeadlockDetected(Cycle cycle, std::vector<VcLocation> chain, bool cyclic,
                   const std::string& text)
      : std::runtime_error(text), cycle_(cycle), chain_(std::move(chain)), cyclic_(cyclic) {}
  Cycle cycle() const { return cycle_; }
  const std::vector<VcLocation>& chain() const { return chain_; }
  bool cyclic() const { return cyclic_; }

 private:
  Cycle cycle_;
  std::vector<VcLocation> chain_;
  bool cyclic_;
};

class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// FNV-1a over the fields that influence a run.
inline std::uint64_t fingerprint(const SimConfig& c) {
  std::ostringstream os;
  os << c.mesh.width << 'x' << c.mesh.height << '|' << c.vcs_per_port << '|' << c.vcs_high << '|'
     << c.vcs_low << '|' << c.buffer_depth << '|' << c.packet_size << '|' << to_string(c.planner)
     << '|' << to_string(c.cost_model) << '|' << to_string(c.approach) << '|'
     << to_string(c.routing) << '|' << to_string(c.arbitration) << '|' << c.router_latency << '|' << c.link_latency << '|'
     << c.watchdog_threshold << '|' << c.warmup << '|' << c.measure << '|' << c.drain << '|'
     << c.max_source_queue << '|' << c.seed << '|' << c.energy.link << '|'
     << c.energy.buffer_write << '|' << c.energy.buffer_read << '|' << c.energy.crossbar;
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : os.str()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Expands one message into its packet program using the configured planner.
inline PacketProgram program_for(const SimConfig& cfg, NodeCoord src,
                                 std::span<const NodeCoord> dests) {
  if (dests.size() == 1) {
    PacketProgram prog;
    PacketSpec s;
    s.role = PacketRole::Unicast;
    s.start = src;
    s.targets = {dests[0]};
    s.deliveries = {dests[0]};
    s.hops = manhattan(src, dests[0]);
    prog.packets.push_back(std::move(s));
    prog.roots = {0};
    prog.destination_count = 1;
    return prog;
  }
  const PlannerOptions opts{cfg.cost_model, cfg.approach};
  return compile(plan(cfg.planner, dests, src, cfg.mesh, opts), cfg.mesh, cfg.approach);
}

class Simulator {
 public:
  explicit Simulator(SimConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    n_ = cfg_.mesh.node_count();
    v_ = cfg_.vcs_per_port;
    d_ = cfg_.buffer_depth;
    const std::size_t ivcs = static_cast<std::size_t>(n_) * kRouterPorts * v_;
    buf_pkt_.assign(ivcs * d_, -1);
    buf_kind_.assign(ivcs * d_, FlitKind::Head);
    buf_ready_.assign(ivcs * d_, 0);
    head_.assign(ivcs, 0);
    count_.assign(ivcs, 0);
    routed_.assign(ivcs, 0);
    out_port_.assign(ivcs, -1);
    out_class_.assign(ivcs, 0);
    out_vc_.assign(ivcs, -1);
    eject_.assign(ivcs, 0);
    absorb_.assign(ivcs, 0);
    owned_.assign(ivcs, 0);
    last_move_.assign(ivcs, 0);
    eject_head_.assign(ivcs, 0);
    eject_hops_.assign(ivcs, 0);
    eject_deliver_.assign(ivcs, 0);
    age_.assign(ivcs, 0);
    const std::size_t ovcs = static_cast<std::size_t>(n_) * kMeshPorts * v_;
    credits_.assign(ovcs, d_);
    busy_.assign(ovcs, 0);
    slots_ = kRouterPorts * v_;
    occupied_.assign(n_, 0);
    va_ptr_.assign(static_cast<std::size_t>(n_) * kMeshPorts * 2, 0);
    in_ptr_.assign(static_cast<std::size_t>(n_) * kRouterPorts, 0);
    out_ptr_.assign(static_cast<std::size_t>(n_) * kRouterPorts, 0);
    ni_.resize(n_);
    ring_ = static_cast<std::size_t>(cfg_.link_latency) + 1;
    credit_events_.resize(ring_);
    delivery_events_.resize(ring_);
    neighbor_.assign(static_cast<std::size_t>(n_) * kMeshPorts, -1);
    label_.assign(n_, 0);
    for (int h = 0; h < n_; ++h) {
      const NodeCoord a = from_row_major(h, cfg_.mesh);
      label_[h] = label_of(a, cfg_.mesh).value;
      for (int p = 0; p < kMeshPorts; ++p) {
        const NodeCoord b = dpmnoc::step(a, static_cast<Port>(p));
        if (in_bounds(b, cfg_.mesh))
          neighbor_[static_cast<std::size_t>(h) * kMeshPorts + p] = row_major_index(b, cfg_.mesh);
      }
    }
    next_port_.assign(static_cast<std::size_t>(n_) * n_, -1);
    for (int h = 0; h < n_; ++h) {
      for (int t = 0; t < n_; ++t) {
        if (h == t) continue;
        const NodeCoord a = from_row_major(h, cfg_.mesh), b = from_row_major(t, cfg_.mesh);
        next_port_[static_cast<std::size_t>(h) * n_ + t] =
            static_cast<std::int8_t>(port_toward(a, next_hop(a, b, cfg_.mesh)));
      }
    }
  }

  const SimConfig& config() const { return cfg_; }
  const std::vector<DeliveryRecord>& records() const { return records_; }
  Cycle now() const { return now_; }
  std::uint64_t injected_flits() const { return injected_flits_; }
  std::uint64_t absorbed_flits() const { return absorbed_flits_; }
  std::uint64_t flits_in_network() const {
    std::uint64_t total = 0;
    for (int c : count_) total += static_cast<std::uint64_t>(c);
    return total;
  }
  bool idle() const { return live_messages_ == 0; }

  // Runs warmup, measurement and drain phases over `source`.
  StatsReport run(EventSource& source, RunMeta meta = {}) {
    meta.planner = to_string(cfg_.planner);
    meta.seed = cfg_.seed;
    meta.node_count = n_;
    meta.packet_size = cfg_.packet_size;
    meta.measure_cycles = cfg_.measure;
    meta.weights = cfg_.energy;
    if (meta.config_hash == 0) meta.config_hash = fingerprint(cfg_);
    builder_ = std::make_unique<ReportBuilder>(meta);
    const Cycle measure_end = cfg_.warmup + cfg_.measure;
    const Cycle hard_end = measure_end + cfg_.drain;
    WorkloadHash hash;
    for (;;) {
      if (now_ >= measure_end && measured_outstanding_ == 0) break;
      if (now_ >= hard_end) break;
      while (source.peek_cycle() >= 0 && source.peek_cycle() <= now_) {
        TraceEvent e = source.pop();
        if (e.cycle < now_) throw std::invalid_argument("workload events out of order");
        const bool measured = e.cycle >= cfg_.warmup && e.cycle < measure_end;
        if (e.cycle < measure_end) hash.add(e);
        offer(e, measured);
      }
      step();
    }
    StatsReport r = builder_->finish(counters_, now_);
    r.meta.workload_hash = hash.value();
    return r;
  }

  // Queues one message at its source; returns its id.
  std::int64_t offer(const TraceEvent& e, bool measured) {
    validate_event(e, cfg_.mesh);
    const NodeCoord src = coord_of(e.source, cfg_.mesh);
    const int node = row_major_index(src, cfg_.mesh);
    if (cfg_.max_source_queue > 0 && ni_[node].queue.size() >= cfg_.max_source_queue) {
      if (measured && builder_) builder_->message_throttled();
      return -1;
    }
    std::vector<NodeCoord> dests;
    dests.reserve(e.destinations.size());
    for (NodeLabel l : e.destinations) dests.push_back(coord_of(l, cfg_.mesh));
    const int slot = alloc_message();
    Message& m = messages_[slot];
    m.id = next_message_id_++;
    m.generated = e.cycle;
    m.source = e.source;
    m.program = program_for(cfg_, src, dests);
    m.destination_count = m.program.destination_count;
    m.delivered = 0;
    m.live_packets = 0;
    m.measured = measured;
    ++live_messages_;
    if (measured) {
      ++measured_outstanding_;
      if (builder_) builder_->message_generated();
    }
    for (int root : m.program.roots) enqueue_packet(slot, root, node);
    return m.id;
  }

  // Advances one cycle.
  void step() {
    const std::size_t slot = static_cast<std::size_t>(now_ % static_cast<Cycle>(ring_));
    for (const CreditEvent& c : credit_events_[slot]) {
      ++credits_[c.ovc];
      if (c.tail) busy_[c.ovc] = 0;
    }
    credit_events_[slot].clear();
    auto deliveries = std::move(delivery_events_[slot]);
    delivery_events_[slot].clear();
    for (const DeliveryEvent& d : deliveries) complete_ejection(d);
    for (int node = 0; node < n_; ++node) ni_step(node);
    for (int node = 0; node < n_; ++node)
      if (occupied_[node] != 0) router_step(node);
    if (cfg_.check_invariants) check_invariants();
    ++now_;
    if (now_ % scan_interval() == 0) watchdog_scan();
  }

  // Steps until the network holds no message or `limit` cycles pass.
  void run_until_idle(Cycle limit) {
    const Cycle end = now_ + limit;
    while (!idle() && now_ < end) step();
  }

  void watchdog_scan() const {
    for (std::size_t i = 0; i < count_.size(); ++i) {
      if (count_[i] > 0 && now_ - last_move_[i] > cfg_.watchdog_threshold) {
        report_deadlock(static_cast<int>(i));
      }
    }
  }

 private:
  struct CreditEvent {
    int ovc;
    bool tail;
  };
  struct DeliveryEvent {
    int packet;
    int node;
    bool deliver;
    bool absorb;
    Cycle head;
    int hops;
  };
  struct Message {
    std::int64_t id = 0;
    Cycle generated = 0;
    NodeLabel source;
    PacketProgram program;
    int destination_count = 0;
    int delivered = 0;
    int live_packets = 0;
    Cycle last = 0;
    bool measured = false;
  };
  struct Packet {
    int message = -1;
    int spec = -1;
    int target = 0;              // index of the current steering target
    int hops = 0;                // hops taken by this packet so far
    Cycle age = 0;               // arbitration priority, lower wins
    std::vector<int> remaining;  // row-major indices still owed a copy
  };
  struct Interface {
    std::deque<int> queue;
    int current = -1;
    int vc = -1;
    int sent = 0;
  };

  Cycle scan_interval() const {
    return std::max<Cycle>(1, std::min<Cycle>(1024, cfg_.watchdog_threshold / 4));
  }

  std::size_t ivc(int node, int port, int vc) const {
    return (static_cast<std::size_t>(node) * kRouterPorts + port) * v_ + vc;
  }
  std::size_t ovc(int node, int port, int vc) const {
    return (static_cast<std::size_t>(node) * kMeshPorts + port) * v_ + vc;
  }

  int alloc_message() {
    if (!free_messages_.empty()) {
      const int s = free_messages_.back();
      free_messages_.pop_back();
      return s;
    }
    messages_.emplace_back();
    return static_cast<int>(messages_.size()) - 1;
  }

  int alloc_packet() {
    if (!free_packets_.empty()) {
      const int s = free_packets_.back();
      free_packets_.pop_back();
      return s;
    }
    packets_.emplace_back();
    return static_cast<int>(packets_.size()) - 1;
  }

  const PacketSpec& spec_of(const Packet& p) const {
    return messages_[p.message].program.packets[p.spec];
  }

  void enqueue_packet(int message, int spec, int node) {
    const int id = alloc_packet();
    Packet& p = packets_[id];
    p.message = message;
    p.spec = spec;
    p.target = 0;
    p.hops = 0;
    p.age = cfg_.arbitration == Arbitration::Age ? messages_[message].generated : 0;
    p.remaining.clear();
    for (NodeCoord d : messages_[message].program.packets[spec].deliveries)
      p.remaining.push_back(row_major_index(d, cfg_.mesh));
    ++messages_[message].live_packets;
    ni_[node].queue.push_back(id);
  }

  // Output port and VC class for the next hop of `p` at node `here`.
  std::pair<int, int> next_hop_of(const Packet& p, int here) const {
    const PacketSpec& s = spec_of(p);
    const NodeCoord target = s.targets[p.target];
    const int t = row_major_index(target, cfg_.mesh);
    const NodeCoord at = from_row_major(here, cfg_.mesh);
    int port;
    if (cfg_.routing == RoutingMode::AllTurns) {
      const bool xy_first = (s.start.x + s.start.y) % 2 == 0;
      const bool move_x = at.x != target.x && (xy_first || at.y == target.y);
      if (move_x) port = static_cast<int>(target.x > at.x ? Port::East : Port::West);
      else port = static_cast<int>(target.y > at.y ? Port::North : Port::South);
      return {port, 0};
    }
    if (s.xy) port = static_cast<int>(port_toward(at, next_hop_xy(at, target)));
    else port = next_port_[static_cast<std::size_t>(here) * n_ + t];
    const int nb = neighbor_[static_cast<std::size_t>(here) * kMeshPorts + port];
    const int cls = label_[nb] > label_[here] ? 0 : 1;
    return {port, cls};
  }

  void ni_step(int node) {
    Interface& ni = ni_[node];
    if (ni.current < 0) {
      if (ni.queue.empty()) return;
      const int id = ni.queue.front();
      const int cls = next_hop_of(packets_[id], node).second;
      const int lo = cls == 0 ? 0 : cfg_.vcs_high;
      const int hi = cls == 0 ? cfg_.vcs_high : v_;
      int chosen = -1;
      for (int v = lo; v < hi; ++v) {
        const std::size_t i = ivc(node, static_cast<int>(Port::Local), v);
        if (!owned_[i] && count_[i] == 0) {
          chosen = v;
          break;
        }
      }
      if (chosen < 0) return;
      ni.queue.pop_front();
      ni.current = id;
      ni.vc = chosen;
      ni.sent = 0;
      owned_[ivc(node, static_cast<int>(Port::Local), chosen)] = 1;
    }
    const std::size_t i = ivc(node, static_cast<int>(Port::Local), ni.vc);
    if (count_[i] >= d_) return;
    push_flit(node, i, ni.current, flit_kind(ni.sent, cfg_.packet_size),
              now_ + cfg_.router_latency);
    ++injected_flits_;
    if (++ni.sent == cfg_.packet_size) ni.current = -1;
  }

  bool in_window() const { return now_ >= cfg_.warmup && now_ < cfg_.warmup + cfg_.measure; }

  void push_flit(int node, std::size_t i, int packet, FlitKind kind, Cycle ready) {
    if (count_[i] >= d_) throw InvariantViolation("buffer overflow");
    const std::size_t pos = i * d_ + (head_[i] + count_[i]) % d_;
    buf_pkt_[pos] = packet;
    buf_kind_[pos] = kind;
    buf_ready_[pos] = ready;
    if (count_[i]++ == 0) {
      occupied_[node] |= std::uint64_t{1} << (i % slots_);
      last_move_[i] = now_;
    }
    if (in_window()) ++counters_.buffer_writes;
  }

  void route(int node, std::size_t i, int packet) {
    Packet& p = packets_[packet];
    const PacketSpec& s = spec_of(p);
    const NodeCoord here = from_row_major(node, cfg_.mesh);
    auto it = std::find(p.remaining.begin(), p.remaining.end(), node);
    const bool deliver = it != p.remaining.end();
    if (deliver) p.remaining.erase(it);
    if (here == s.targets[p.target]) ++p.target;
    routed_[i] = 1;
    age_[i] = p.age;
    eject_deliver_[i] = deliver;
    eject_hops_[i] = s.base_hops + p.hops;
    out_vc_[i] = -1;
    if (p.target == static_cast<int>(s.targets.size())) {
      out_port_[i] = static_cast<int>(Port::Local);
      eject_[i] = 1;
      absorb_[i] = 1;
      return;
    }
    const auto [port, cls] = next_hop_of(p, node);
    out_port_[i] = static_cast<std::int8_t>(port);
    out_class_[i] = static_cast<std::int8_t>(cls);
    eject_[i] = deliver;
    absorb_[i] = 0;
  }

  // Front flit of input VC `i` if it may compete this cycle, else -1.
  int ready_front(int node, std::size_t i) {
    if (count_[i] == 0) return -1;
    const std::size_t front = i * d_ + head_[i];
    if (buf_ready_[front] > now_) return -1;
    if (!routed_[i]) {
      if (buf_kind_[front] != FlitKind::Head) throw InvariantViolation("body flit without route");
      route(node, i, buf_pkt_[front]);
    }
    return static_cast<int>(front % d_);
  }

  // First set slot of `mask` at or after `from`, wrapping; -1 if none.
  static int next_slot(std::uint64_t mask, int from) {
    if (mask == 0) return -1;
    const std::uint64_t upper = mask & (~std::uint64_t{0} << from);
    return std::countr_zero(upper != 0 ? upper : mask);
  }

  // Bit of `mask` whose age is smallest; ties go to the first at or after
  // `from` in wrapping order. -1 if the mask is empty.
  template <class AgeOf>
  static int oldest_slot(std::uint64_t mask, int from, AgeOf age_of) {
    int best = next_slot(mask, from);
    if (best < 0) return -1;
    Cycle best_age = age_of(best);
    const std::uint64_t upper = mask & (~std::uint64_t{0} << from);
    for (std::uint64_t part : {upper, mask & ~upper}) {
      for (std::uint64_t m = part; m != 0; m &= m - 1) {
        const int b = std::countr_zero(m);
        const Cycle a = age_of(b);
        if (a < best_age) {
          best = b;
          best_age = a;
        }
      }
    }
    return best;
  }

  // VC allocation per (output port, class): waiting heads are served oldest
  // first, then in order after the last winner, each taking the lowest free
  // VC.
  void allocate_vcs(int node) {
    std::uint64_t waiting[kMeshPorts * 2] = {};
    bool any = false;
    for (std::uint64_t m = occupied_[node]; m != 0; m &= m - 1) {
      const int slot = std::countr_zero(m);
      const std::size_t i = static_cast<std::size_t>(node) * slots_ + slot;
      if (ready_front(node, i) < 0 || out_vc_[i] >= 0) continue;
      if (out_port_[i] == static_cast<int>(Port::Local)) continue;
      waiting[out_port_[i] * 2 + out_class_[i]] |= std::uint64_t{1} << slot;
      any = true;
    }
    if (!any) return;
    for (int bucket = 0; bucket < kMeshPorts * 2; ++bucket) {
      std::uint64_t req = waiting[bucket];
      if (req == 0) continue;
      const int op = bucket / 2, cls = bucket % 2;
      const int lo = cls == 0 ? 0 : cfg_.vcs_high;
      const int hi = cls == 0 ? cfg_.vcs_high : v_;
      int& ptr = va_ptr_[static_cast<std::size_t>(node) * kMeshPorts * 2 + bucket];
      while (req != 0) {
        int free = -1;
        for (int v = lo; v < hi && free < 0; ++v)
          if (!busy_[ovc(node, op, v)]) free = v;
        if (free < 0) break;
        const int slot = oldest_slot(req, ptr, [&](int b) {
          return age_[static_cast<std::size_t>(node) * slots_ + b];
        });
        req &= ~(std::uint64_t{1} << slot);
        busy_[ovc(node, op, free)] = 1;
        out_vc_[static_cast<std::size_t>(node) * slots_ + slot] = static_cast<std::int8_t>(free);
        ptr = (slot + 1) % slots_;
      }
    }
  }

  // Separable switch allocation: each input port nominates its oldest ready
  // VC, then each output port grants its oldest nominee.
  void router_step(int node) {
    allocate_vcs(node);
    constexpr int kLocal = static_cast<int>(Port::Local);
    int nominee[kRouterPorts];
    for (int in = 0; in < kRouterPorts; ++in) {
      nominee[in] = -1;
      int& ptr = in_ptr_[static_cast<std::size_t>(node) * kRouterPorts + in];
      const std::uint64_t port_mask = (occupied_[node] >> (in * v_)) & ((std::uint64_t{1} << v_) - 1);
      if (port_mask == 0) continue;
      Cycle best_age = 0;
      for (int k = 0; k < v_; ++k) {
        const int vc = (ptr + k) % v_;
        if (!((port_mask >> vc) & 1)) continue;
        const std::size_t i = ivc(node, in, vc);
        if (ready_front(node, i) < 0) continue;
        const int op = out_port_[i];
        if (op != kLocal && (out_vc_[i] < 0 || credits_[ovc(node, op, out_vc_[i])] == 0)) continue;
        if (nominee[in] < 0 || age_[i] < best_age) {
          nominee[in] = vc;
          best_age = age_[i];
        }
      }
    }
    auto nominee_age = [&](int in) { return age_[ivc(node, in, nominee[in])]; };
    // The local port is arbitrated first; its winner then has priority on
    // the forward port it also needs, so a copy never holds one output while
    // losing the other.
    unsigned requests[kRouterPorts] = {0, 0, 0, 0, 0};
    unsigned copies = 0;  // nominees that also need the local port
    for (int in = 0; in < kRouterPorts; ++in) {
      if (nominee[in] < 0) continue;
      const std::size_t i = ivc(node, in, nominee[in]);
      requests[static_cast<int>(out_port_[i])] |= 1u << in;
      if (eject_[i] && out_port_[i] != kLocal) {
        requests[kLocal] |= 1u << in;
        copies |= 1u << in;
      }
    }
    const std::size_t base = static_cast<std::size_t>(node) * kRouterPorts;
    int granted[kRouterPorts];
    granted[kLocal] = oldest_slot(requests[kLocal], out_ptr_[base + kLocal], nominee_age);
    const unsigned copy_winner = granted[kLocal] >= 0 ? (1u << granted[kLocal]) & copies : 0u;
    for (int out = 0; out < kMeshPorts; ++out) {
      const unsigned req = requests[out] & (~copies | copy_winner);
      granted[out] = (req & copy_winner) ? granted[kLocal]
                                         : oldest_slot(req, out_ptr_[base + out], nominee_age);
    }
    for (int in = 0; in < kRouterPorts; ++in) {
      if (nominee[in] < 0) continue;
      const std::size_t i = ivc(node, in, nominee[in]);
      const int op = out_port_[i];
      const bool forward = op != kLocal;
      if (forward && granted[op] != in) continue;
      if (eject_[i] && granted[kLocal] != in) continue;
      const std::size_t front = i * d_ + head_[i];
      const FlitKind kind = buf_kind_[front];
      traverse(node, in, i, front, buf_pkt_[front], forward);
      in_ptr_[static_cast<std::size_t>(node) * kRouterPorts + in] = (nominee[in] + 1) % v_;
      if (forward) out_ptr_[static_cast<std::size_t>(node) * kRouterPorts + op] = (in + 1) % kRouterPorts;
      if (eject_[i]) out_ptr_[static_cast<std::size_t>(node) * kRouterPorts + kLocal] = (in + 1) % kRouterPorts;
      if (kind == FlitKind::Tail) {
        routed_[i] = 0;
        out_vc_[i] = -1;
      }
    }
  }

  void traverse(int node, int in_port, std::size_t i, std::size_t front, int packet,
                bool forward) {
    const FlitKind kind = buf_kind_[front];
    if (++head_[i] == d_) head_[i] = 0;
    if (--count_[i] == 0) occupied_[node] &= ~(std::uint64_t{1} << (i % slots_));
    last_move_[i] = now_;
    const bool window = in_window();
    if (window) ++counters_.buffer_reads;
    const bool tail = kind == FlitKind::Tail;
    const std::size_t due = static_cast<std::size_t>((now_ + cfg_.link_latency) %
                                                     static_cast<Cycle>(ring_));
    if (in_port == static_cast<int>(Port::Local)) {
      if (tail) owned_[i] = 0;
    } else {
      const int up_node = neighbor_[static_cast<std::size_t>(node) * kMeshPorts + in_port];
      const int up_port = static_cast<int>(opposite(static_cast<Port>(in_port)));
      credit_events_[due].push_back(
          {static_cast<int>(ovc(up_node, up_port, static_cast<int>(i % v_))), tail});
    }
    if (forward) {
      const int op = out_port_[i];
      const int dn_node = neighbor_[static_cast<std::size_t>(node) * kMeshPorts + op];
      const int vc = out_vc_[i];
      const std::size_t o = ovc(node, op, vc);
      if (credits_[o] <= 0) throw InvariantViolation("negative credit");
      --credits_[o];
      push_flit(dn_node, ivc(dn_node, static_cast<int>(opposite(static_cast<Port>(op))), vc),
                packet, kind, now_ + cfg_.link_latency + cfg_.router_latency);
      if (window) {
        ++counters_.link_traversals;
        ++counters_.crossbar_traversals;
      }
      if (kind == FlitKind::Head) ++packets_[packet].hops;
    }
    if (eject_[i]) {
      if (window) {
        ++counters_.crossbar_traversals;
        builder_add_ejected();
      }
      if (kind == FlitKind::Head) eject_head_[i] = now_ + cfg_.link_latency;
      if (absorb_[i]) ++absorbed_flits_;
      if (tail) {
        delivery_events_[due].push_back({packet, node, eject_deliver_[i] != 0, absorb_[i] != 0,
                                         eject_head_[i], eject_hops_[i]});
      }
    }
  }

  void builder_add_ejected() {
    if (builder_) builder_->add_ejected_flits(1);
  }

  void complete_ejection(const DeliveryEvent& d) {
    Packet& p = packets_[d.packet];
    const int slot = p.message;
    Message& m = messages_[slot];
    if (d.deliver) {
      ++m.delivered;
      m.last = std::max(m.last, now_);
      if (m.measured) {
        DeliveryRecord r;
        r.message = m.id;
        r.source = m.source;
        r.destination = label_of(from_row_major(d.node, cfg_.mesh), cfg_.mesh);
        r.destination_count = m.destination_count;
        r.generated = m.generated;
        r.head_arrival = d.head;
        r.tail_arrival = now_;
        r.hops = d.hops;
        if (builder_) builder_->delivery(r);
        if (cfg_.keep_records) records_.push_back(r);
        if (m.delivered == m.destination_count) {
          if (builder_) builder_->message_completed(m.last - m.generated);
          --measured_outstanding_;
        }
      }
    }
    if (!d.absorb) return;
    const PacketSpec& s = m.program.packets[p.spec];
    if (m.measured && builder_) builder_->add_hops(s.hops);
    for (int child : s.children) enqueue_packet(slot, child, d.node);
    free_packets_.push_back(d.packet);
    if (--m.live_packets == 0) {
      if (m.delivered != m.destination_count)
        throw InvariantViolation("message retired with undelivered destinations");
      m.program = {};
      free_messages_.push_back(slot);
      --live_messages_;
    }
  }

  // Follows what a stalled VC waits on until a VC repeats.
  [[noreturn]] void report_deadlock(int start) const {
    std::vector<VcLocation> chain;
    std::vector<int> seen;
    int cur = start;
    bool cyclic = false;
    while (cur >= 0) {
      auto at = std::find(seen.begin(), seen.end(), cur);
      if (at != seen.end()) {
        chain.erase(chain.begin(), chain.begin() + (at - seen.begin()));
        cyclic = true;
        break;
      }
      seen.push_back(cur);
      const int node = cur / (kRouterPorts * v_);
      const int port = (cur / v_) % kRouterPorts;
      const NodeCoord here = from_row_major(node, cfg_.mesh);
      chain.push_back({here, static_cast<Port>(port), cur % v_});
      const int next = waits_on(cur, node, here);
      cur = next;
    }
    std::ostringstream os;
    os << "deadlock watchdog tripped at cycle " << now_ << ": flit at " << chain.front().node
       << " port " << to_string(chain.front().port) << " vc " << chain.front().vc
       << " stalled for more than " << cfg_.watchdog_threshold << " cycles; "
       << (cyclic ? "cyclic" : "open") << " wait-for chain:";
    for (const VcLocation& l : chain)
      os << ' ' << l.node << '/' << to_string(l.port) << '/' << l.vc;
    if (!cyclic) os << "; last " << describe(seen.back());
    throw DeadlockDetected(now_, chain, cyclic, os.str());
  }

  std::string describe(int cur) const {
    const std::size_t i = static_cast<std::size_t>(cur);
    std::ostringstream os;
    os << "holds " << count_[i] << " flit(s)";
    if (count_[i] > 0) {
      os << ", front ready at " << buf_ready_[i * d_ + head_[i]];
      if (routed_[i]) {
        os << ", routed to " << to_string(static_cast<Port>(out_port_[i]));
        if (out_port_[i] != static_cast<int>(Port::Local))
          os << " vc " << static_cast<int>(out_vc_[i]) << " class "
             << static_cast<int>(out_class_[i]);
        if (eject_[i]) os << " with local copy";
      } else {
        os << ", unrouted";
      }
    }
    return os.str();
  }

  int waits_on(int cur, int node, NodeCoord here) const {
    const std::size_t i = static_cast<std::size_t>(cur);
    if (count_[i] == 0 || !routed_[i]) return -1;
    const int op = out_port_[i];
    if (op == static_cast<int>(Port::Local)) return -1;
    int vc = out_vc_[i];
    if (vc < 0) {
      const int lo = out_class_[i] == 0 ? 0 : cfg_.vcs_high;
      const int hi = out_class_[i] == 0 ? cfg_.vcs_high : v_;
      for (int v = lo; v < hi && vc < 0; ++v)
        if (busy_[ovc(node, op, v)]) vc = v;
      if (vc < 0) return -1;
    }
    const NodeCoord dn = dpmnoc::step(here, static_cast<Port>(op));
    return static_cast<int>(ivc(row_major_index(dn, cfg_.mesh),
                                static_cast<int>(opposite(static_cast<Port>(op))), vc));
  }

  void check_invariants() const {
    std::vector<int> pending(credits_.size(), 0);
    for (const auto& slot : credit_events_)
      for (const CreditEvent& c : slot) ++pending[c.ovc];
    for (int node = 0; node < n_; ++node) {
      const NodeCoord here = from_row_major(node, cfg_.mesh);
      for (int p = 0; p < kMeshPorts; ++p) {
        const NodeCoord dn = dpmnoc::step(here, static_cast<Port>(p));
        if (!in_bounds(dn, cfg_.mesh)) continue;
        const int dn_node = row_major_index(dn, cfg_.mesh);
        const int dn_port = static_cast<int>(opposite(static_cast<Port>(p)));
        const bool climbs = label_of(dn, cfg_.mesh) > label_of(here, cfg_.mesh);
        for (int v = 0; v < v_; ++v) {
          const std::size_t o = ovc(node, p, v);
          const std::size_t i = ivc(dn_node, dn_port, v);
          if (credits_[o] < 0 || credits_[o] > d_) throw InvariantViolation("credit out of range");
          if (count_[i] > d_) throw InvariantViolation("buffer over depth");
          if (credits_[o] + count_[i] + pending[o] != d_)
            throw InvariantViolation("credit accounting mismatch");
          if (cfg_.routing == RoutingMode::Hamiltonian && count_[i] > 0 &&
              (v < cfg_.vcs_high) != climbs)
            throw InvariantViolation("flit outside its subnetwork");
        }
      }
    }
  }

  SimConfig cfg_;
  int n_ = 0, v_ = 0, d_ = 0;
  Cycle now_ = 0;

  std::vector<int> buf_pkt_;
  std::vector<FlitKind> buf_kind_;
  std::vector<Cycle> buf_ready_;
  std::vector<int> head_, count_;
  std::vector<std::uint8_t> routed_, eject_, absorb_, owned_, eject_deliver_;
  std::vector<std::int8_t> out_port_, out_class_, out_vc_;
  std::vector<Cycle> last_move_, eject_head_, age_;
  std::vector<int> eject_hops_;
  std::vector<int> credits_;
  std::vector<std::uint8_t> busy_;
  int slots_ = 0;
  std::vector<std::uint64_t> occupied_;  // non-empty input VCs per router
  std::vector<int> va_ptr_, in_ptr_, out_ptr_;
  std::vector<std::int8_t> next_port_;
  std::vector<int> neighbor_;  // row-major neighbor per (node, port), -1 at the edge
  std::vector<int> label_;

  std::vector<Interface> ni_;
  std::size_t ring_ = 2;
  std::vector<std::vector<CreditEvent>> credit_events_;
  std::vector<std::vector<DeliveryEvent>> delivery_events_;

  std::vector<Message> messages_;
  std::vector<int> free_messages_;
  std::vector<Packet> packets_;
  std::vector<int> free_packets_;
  std::int64_t next_message_id_ = 0;
  std::int64_t live_messages_ = 0;
  std::int64_t measured_outstanding_ = 0;

  std::uint64_t injected_flits_ = 0;
  std::uint64_t absorbed_flits_ = 0;
  EnergyCounters counters_;
  std::unique_ptr<ReportBuilder> builder_;
  std::vector<DeliveryRecord> records_;
};

// Convenience wrapper: one run over a synthetic workload.
inline StatsReport simulate(const SimConfig& cfg, const TrafficConfig& traffic) {
  SyntheticSource source(traffic, cfg.mesh, cfg.seed, cfg.warmup + cfg.measure + cfg.drain);
  Simulator sim(cfg);
  RunMeta meta;
  meta.injection_rate = traffic.injection_rate;
  meta.dest_range = traffic.dest_range;
  return sim.run(source, meta);
}

}  // namespace dpmnoc
