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

// Traffic sources: a seeded synthetic generator (uniform random destinations,
// Bernoulli arrivals per node) and a line-delimited JSON trace reader.

#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpmnoc/topology.hpp"

namespace dpmnoc {

using Cycle = std::int64_t;

struct DestRange {
  int min = 2;
  int max = 5;
  friend bool operator==(const DestRange&, const DestRange&) = default;
};

inline constexpr DestRange kReferenceRanges[] = {{2, 5}, {4, 8}, {7, 10}, {10, 16}};

struct TrafficConfig {
  double injection_rate = 0.0;     // packets per node per cycle
  double multicast_fraction = 0.10;
  DestRange dest_range{2, 5};

  void validate(const MeshConfig& mesh) const {
    if (!(injection_rate >= 0.0 && injection_rate <= 1.0))
      throw std::invalid_argument("injection_rate must lie in [0, 1]");
    if (!(multicast_fraction >= 0.0 && multicast_fraction <= 1.0))
      throw std::invalid_argument("multicast_fraction must lie in [0, 1]");
    if (dest_range.min < 1 || dest_range.max < dest_range.min)
      throw std::invalid_argument("dest_range must satisfy 1 <= min <= max");
    if (dest_range.max >= mesh.node_count())
      throw std::invalid_argument("dest_range max " + std::to_string(dest_range.max) +
                                  " must be below the node count " +
                                  std::to_string(mesh.node_count()));
  }
};

struct TraceEvent {
  Cycle cycle = 0;
  NodeLabel source;
  std::vector<NodeLabel> destinations;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

inline void validate_event(const TraceEvent& e, const MeshConfig& mesh) {
  const int n = mesh.node_count();
  auto in_range = [n](NodeLabel l) { return l.value >= 0 && l.value < n; };
  if (e.cycle < 0) throw std::domain_error("negative cycle");
  if (!in_range(e.source))
    throw std::domain_error("source label " + std::to_string(e.source.value) + " out of range");
  if (e.destinations.empty()) throw std::domain_error("empty destination list");
  std::vector<int> seen;
  for (NodeLabel d : e.destinations) {
    if (!in_range(d))
      throw std::domain_error("destination label " + std::to_string(d.value) + " out of range");
    if (d == e.source)
      throw std::domain_error("destination list contains the source " +
                              std::to_string(d.value));
    seen.push_back(d.value);
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    throw std::domain_error("duplicate destination");
}

// FNV-1a digest of an event stream, used to prove two runs saw the same
// traffic.
class WorkloadHash {
 public:
  void add(const TraceEvent& e) {
    mix(static_cast<std::uint64_t>(e.cycle));
    mix(static_cast<std::uint64_t>(e.source.value));
    mix(e.destinations.size());
    for (NodeLabel d : e.destinations) mix(static_cast<std::uint64_t>(d.value));
  }
  std::uint64_t value() const { return h_; }

 private:
  void mix(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h_ ^= (v >> (8 * i)) & 0xffu;
      h_ *= 0x100000001b3ull;
    }
  }
  std::uint64_t h_ = 0xcbf29ce484222325ull;
};

// Pull interface consumed by the simulator: events come out in
// nondecreasing cycle order.
class EventSource {
 public:
  virtual ~EventSource() = default;
  // Cycle of the next pending event, or -1 when exhausted.
  virtual Cycle peek_cycle() = 0;
  virtual TraceEvent pop() = 0;
};

// Bernoulli(rate) arrivals per node and cycle, realized by drawing geometric
// gaps between successive arrivals of each node.
class SyntheticSource final : public EventSource {
 public:
  SyntheticSource(const TrafficConfig& cfg, const MeshConfig& mesh, std::uint64_t seed,
                  Cycle horizon)
      : cfg_(cfg), mesh_(mesh), horizon_(horizon), rng_(seed) {
    cfg_.validate(mesh_);
    nodes_.resize(mesh_.node_count());
    std::iota(nodes_.begin(), nodes_.end(), 0);
    next_.assign(mesh_.node_count(), -1);
    if (cfg_.injection_rate > 0.0) {
      gap_ = std::geometric_distribution<Cycle>(cfg_.injection_rate);
      for (int n = 0; n < mesh_.node_count(); ++n) next_[n] = gap_(rng_);
    }
    refresh();
  }

  Cycle peek_cycle() override { return current_ < horizon_ ? current_ : -1; }

  TraceEvent pop() override {
    if (peek_cycle() < 0) throw std::out_of_range("synthetic source exhausted");
    // Nodes due this cycle are served in label order.
    int node = -1;
    for (int n = 0; n < mesh_.node_count(); ++n) {
      if (next_[n] == current_) {
        node = n;
        break;
      }
    }
    TraceEvent e;
    e.cycle = current_;
    e.source = NodeLabel{node};
    const bool multicast = std::bernoulli_distribution(cfg_.multicast_fraction)(rng_);
    int count = 1;
    if (multicast) {
      count = std::uniform_int_distribution<int>(cfg_.dest_range.min, cfg_.dest_range.max)(rng_);
    }
    e.destinations = draw_destinations(node, count);
    next_[node] = current_ + 1 + gap_(rng_);
    refresh();
    return e;
  }

 private:
  // Partial Fisher-Yates over every label except the source.
  std::vector<NodeLabel> draw_destinations(int source, int count) {
    const int n = mesh_.node_count();
    std::swap(nodes_[source], nodes_[n - 1]);
    std::vector<NodeLabel> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
      const int j = std::uniform_int_distribution<int>(i, n - 2)(rng_);
      std::swap(nodes_[i], nodes_[j]);
      out.push_back(NodeLabel{nodes_[i]});
    }
    std::iota(nodes_.begin(), nodes_.end(), 0);
    return out;
  }

  void refresh() {
    current_ = -1;
    for (Cycle c : next_)
      if (c >= 0 && (current_ < 0 || c < current_)) current_ = c;
    if (current_ < 0) current_ = horizon_;
  }

  TrafficConfig cfg_;
  MeshConfig mesh_;
  Cycle horizon_;
  std::mt19937_64 rng_;
  std::geometric_distribution<Cycle> gap_;
  std::vector<int> nodes_;
  std::vector<Cycle> next_;
  Cycle current_ = -1;
};

// Replays a fixed, cycle-sorted list of events.
class VectorSource final : public EventSource {
 public:
  explicit VectorSource(std::vector<TraceEvent> events) : events_(std::move(events)) {
    std::stable_sort(events_.begin(), events_.end(),
                     [](const TraceEvent& a, const TraceEvent& b) { return a.cycle < b.cycle; });
  }
  Cycle peek_cycle() override { return pos_ < events_.size() ? events_[pos_].cycle : -1; }
  TraceEvent pop() override { return events_.at(pos_++); }

 private:
  std::vector<TraceEvent> events_;
  std::size_t pos_ = 0;
};

inline std::vector<TraceEvent> generate_synthetic(const TrafficConfig& cfg, const MeshConfig& mesh,
                                                  std::uint64_t seed, Cycle horizon) {
  SyntheticSource src(cfg, mesh, seed, horizon);
  std::vector<TraceEvent> out;
  while (src.peek_cycle() >= 0) out.push_back(src.pop());
  return out;
}

// ---------------------------------------------------------------------------
// Trace files: one {"cycle": int, "src": int, "dsts": [int, ...]} per line.

class TraceError : public std::runtime_error {
 public:
  TraceError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline TraceEvent parse_trace_line(const std::string& text, const MeshConfig& mesh) {
  const auto j = nlohmann::json::parse(text);
  if (!j.is_object()) throw std::domain_error("record is not a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "cycle" && key != "src" && key != "dsts")
      throw std::domain_error("unexpected field '" + key + "'");
  }
  if (!j.contains("cycle") || !j.contains("src") || !j.contains("dsts"))
    throw std::domain_error("record needs cycle, src and dsts");
  if (!j["cycle"].is_number_integer() || !j["src"].is_number_integer() || !j["dsts"].is_array())
    throw std::domain_error("cycle and src must be integers, dsts an array");
  TraceEvent e;
  e.cycle = j["cycle"].get<Cycle>();
  e.source = NodeLabel{j["src"].get<int>()};
  for (const auto& d : j["dsts"]) {
    if (!d.is_number_integer()) throw std::domain_error("dsts entries must be integers");
    e.destinations.push_back(NodeLabel{d.get<int>()});
  }
  validate_event(e, mesh);
  return e;
}

inline std::vector<TraceEvent> read_trace(std::istream& in, const MeshConfig& mesh) {
  std::vector<TraceEvent> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_trace_line(line, mesh));
    } catch (const nlohmann::json::exception& ex) {
      throw TraceError(number, std::string("malformed JSON: ") + ex.what());
    } catch (const std::exception& ex) {
      throw TraceError(number, ex.what());
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const TraceEvent& a, const TraceEvent& b) { return a.cycle < b.cycle; });
  return out;
}

inline std::vector<TraceEvent> load_trace(const std::string& path, const MeshConfig& mesh) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace '" + path + "'");
  return read_trace(in, mesh);
}

inline std::string to_jsonl(const TraceEvent& e) {
  nlohmann::json j;
  j["cycle"] = e.cycle;
  j["src"] = e.source.value;
  auto& d = j["dsts"] = nlohmann::json::array();
  for (NodeLabel l : e.destinations) d.push_back(l.value);
  return j.dump();
}

}  // namespace dpmnoc
