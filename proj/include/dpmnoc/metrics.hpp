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

// Run statistics: latency and hop accounting, the activity-count energy
// proxy, saturation sweeps and planner comparisons.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpmnoc/topology.hpp"
#include "dpmnoc/workload.hpp"

namespace dpmnoc {

struct DeliveryRecord {
  std::int64_t message = 0;
  NodeLabel source;
  NodeLabel destination;
  int destination_count = 1;
  Cycle generated = 0;
  Cycle head_arrival = 0;
  Cycle tail_arrival = 0;
  int hops = 0;

  Cycle latency() const { return tail_arrival - generated; }
};

struct EnergyWeights {
  double link = 1.0;
  double buffer_write = 1.0;
  double buffer_read = 0.5;
  double crossbar = 0.7;
};

struct EnergyCounters {
  std::uint64_t link_traversals = 0;
  std::uint64_t buffer_writes = 0;
  std::uint64_t buffer_reads = 0;
  std::uint64_t crossbar_traversals = 0;

  double energy(const EnergyWeights& w) const {
    return static_cast<double>(link_traversals) * w.link +
           static_cast<double>(buffer_writes) * w.buffer_write +
           static_cast<double>(buffer_reads) * w.buffer_read +
           static_cast<double>(crossbar_traversals) * w.crossbar;
  }
};

// Running sum/min/max over integer samples.
struct LatencyStat {
  std::uint64_t count = 0;
  double sum = 0.0;
  Cycle min = 0;
  Cycle max = 0;

  void add(Cycle v) {
    if (count == 0 || v < min) min = v;
    if (count == 0 || v > max) max = v;
    sum += static_cast<double>(v);
    ++count;
  }
  std::optional<double> mean() const {
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
  }
};

struct RunMeta {
  std::string planner;
  double injection_rate = 0.0;
  DestRange dest_range{};
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::uint64_t workload_hash = 0;
  int node_count = 0;
  int packet_size = 4;
  Cycle measure_cycles = 0;
  EnergyWeights weights{};
};

struct StatsReport {
  RunMeta meta;
  std::uint64_t messages = 0;            // generated in the measurement window
  std::uint64_t messages_completed = 0;
  std::uint64_t deliveries = 0;
  std::uint64_t throttled = 0;           // messages refused by a full source queue
  std::uint64_t total_hops = 0;          // link traversals by measured packets
  std::uint64_t ejected_flits = 0;       // during the measurement window
  bool drained = true;                   // every measured message completed
  Cycle cycles = 0;
  std::optional<double> avg_delivery_latency;
  std::optional<double> avg_packet_latency;
  std::optional<Cycle> max_delivery_latency;
  std::optional<double> accepted_throughput;  // flits per node per cycle
  EnergyCounters counters;
  double energy = 0.0;
  std::map<int, LatencyStat> by_destination_count;  // per-delivery latency
};

// Incremental aggregation shared by finalize() and the simulator.
class ReportBuilder {
 public:
  explicit ReportBuilder(RunMeta meta) { report_.meta = std::move(meta); }

  void message_generated() { ++report_.messages; }
  void message_throttled() { ++report_.throttled; }
  void add_hops(int h) { report_.total_hops += static_cast<std::uint64_t>(h); }
  void add_ejected_flits(std::uint64_t n) { report_.ejected_flits += n; }

  void delivery(const DeliveryRecord& r) {
    delivery_.add(r.latency());
    report_.by_destination_count[r.destination_count].add(r.latency());
    ++report_.deliveries;
  }
  void message_completed(Cycle latency) {
    packet_.add(latency);
    ++report_.messages_completed;
  }

  StatsReport finish(const EnergyCounters& counters, Cycle cycles) {
    StatsReport& r = report_;
    r.cycles = cycles;
    r.counters = counters;
    r.energy = counters.energy(r.meta.weights);
    r.avg_delivery_latency = delivery_.mean();
    r.avg_packet_latency = packet_.mean();
    if (delivery_.count > 0) r.max_delivery_latency = delivery_.max;
    r.drained = r.messages_completed == r.messages;
    if (r.meta.measure_cycles > 0 && r.meta.node_count > 0) {
      r.accepted_throughput = static_cast<double>(r.ejected_flits) /
                              (static_cast<double>(r.meta.node_count) *
                               static_cast<double>(r.meta.measure_cycles));
    }
    return r;
  }

 private:
  StatsReport report_;
  LatencyStat delivery_;
  LatencyStat packet_;
};

// Builds a report from stored delivery records. Each message is counted
// once; its packet latency is its last delivery.
inline StatsReport finalize(std::span<const DeliveryRecord> records,
                            const EnergyCounters& counters, const RunMeta& meta,
                            Cycle cycles = 0) {
  ReportBuilder b(meta);
  std::map<std::int64_t, std::pair<Cycle, int>> last;  // message -> (latency, seen)
  std::map<std::int64_t, int> expected;
  for (const DeliveryRecord& r : records) {
    if (r.tail_arrival < r.head_arrival || r.head_arrival < r.generated)
      throw std::domain_error("delivery record out of order");
    b.delivery(r);
    b.add_hops(r.hops);
    b.add_ejected_flits(static_cast<std::uint64_t>(meta.packet_size));
    auto& [lat, seen] = last[r.message];
    lat = std::max(lat, r.latency());
    ++seen;
    expected[r.message] = r.destination_count;
  }
  for (const auto& [msg, entry] : last) {
    b.message_generated();
    if (entry.second >= expected[msg]) b.message_completed(entry.first);
  }
  return b.finish(counters, cycles);
}

// ---------------------------------------------------------------------------
// Emission.

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

template <class T>
nlohmann::json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json to_json(const StatsReport& r) {
  nlohmann::json j;
  j["planner"] = r.meta.planner;
  j["injection_rate"] = r.meta.injection_rate;
  j["dest_range"] = {r.meta.dest_range.min, r.meta.dest_range.max};
  j["seed"] = r.meta.seed;
  j["config_hash"] = hex64(r.meta.config_hash);
  j["workload_hash"] = hex64(r.meta.workload_hash);
  j["cycles"] = r.cycles;
  j["messages"] = r.messages;
  j["messages_completed"] = r.messages_completed;
  j["deliveries"] = r.deliveries;
  j["throttled"] = r.throttled;
  j["drained"] = r.drained;
  j["total_hops"] = r.total_hops;
  j["avg_delivery_latency"] = optional_json(r.avg_delivery_latency);
  j["avg_packet_latency"] = optional_json(r.avg_packet_latency);
  j["max_delivery_latency"] = optional_json(r.max_delivery_latency);
  j["accepted_throughput"] = optional_json(r.accepted_throughput);
  j["energy"] = r.energy;
  j["counters"] = {{"link_traversals", r.counters.link_traversals},
                   {"buffer_writes", r.counters.buffer_writes},
                   {"buffer_reads", r.counters.buffer_reads},
                   {"crossbar_traversals", r.counters.crossbar_traversals}};
  auto& by = j["latency_by_destination_count"] = nlohmann::json::object();
  for (const auto& [count, stat] : r.by_destination_count) {
    by[std::to_string(count)] = {{"deliveries", stat.count},
                                 {"avg_latency", optional_json(stat.mean())}};
  }
  return j;
}

inline std::string fmt_number(double v) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << v;
  return os.str();
}

template <class T>
std::string fmt_optional(const std::optional<T>& v) {
  if (!v) return "NA";
  if constexpr (std::is_floating_point_v<T>) return fmt_number(*v);
  else return std::to_string(*v);
}

inline const char* csv_header() {
  return "planner,rate,range_min,range_max,seed,messages,completed,deliveries,drained,"
         "avg_delivery_latency,avg_packet_latency,max_delivery_latency,throughput,"
         "total_hops,energy,throttled,workload_hash";
}

inline std::string csv_row(const StatsReport& r) {
  std::ostringstream os;
  os << r.meta.planner << ',' << fmt_number(r.meta.injection_rate) << ','
     << r.meta.dest_range.min << ',' << r.meta.dest_range.max << ',' << r.meta.seed << ','
     << r.messages << ',' << r.messages_completed << ',' << r.deliveries << ','
     << (r.drained ? "true" : "false") << ',' << fmt_optional(r.avg_delivery_latency) << ','
     << fmt_optional(r.avg_packet_latency) << ',' << fmt_optional(r.max_delivery_latency) << ','
     << fmt_optional(r.accepted_throughput) << ',' << r.total_hops << ','
     << fmt_number(r.energy) << ',' << r.throttled << ',' << hex64(r.meta.workload_hash);
  return os.str();
}

// ---------------------------------------------------------------------------
// Saturation sweeps.

struct SweepResult {
  std::vector<double> rates;
  std::vector<StatsReport> reports;
  std::optional<double> zero_load_latency;
  std::optional<std::size_t> saturation_index;

  std::optional<double> saturation_rate() const {
    if (!saturation_index) return std::nullopt;
    return rates[*saturation_index];
  }

  // Highest rate still below saturation: the point just before the first
  // saturated one, or the last point when none saturated.
  std::optional<std::size_t> knee_index() const {
    if (!saturation_index) return reports.empty() ? std::nullopt : std::optional(reports.size() - 1);
    if (*saturation_index == 0) return std::nullopt;
    return *saturation_index - 1;
  }
};

inline void require_increasing(std::span<const double> ladder) {
  if (ladder.empty()) throw std::invalid_argument("rate ladder is empty");
  for (std::size_t i = 1; i < ladder.size(); ++i)
    if (!(ladder[i] > ladder[i - 1]))
      throw std::invalid_argument("rate ladder must be strictly increasing");
}

// A point counts as saturated when its mean delivery latency exceeds
// `factor` times the latency at the lowest rate, or when its measured
// messages could not all drain.
inline bool saturated(const StatsReport& r, double zero_load, double factor) {
  if (!r.drained || !r.avg_delivery_latency) return !r.drained;
  return *r.avg_delivery_latency > factor * zero_load;
}

inline std::optional<std::size_t> detect_saturation(std::span<const StatsReport> reports,
                                                    double factor = 3.0) {
  if (reports.empty() || !reports.front().avg_delivery_latency) return std::nullopt;
  const double zero_load = *reports.front().avg_delivery_latency;
  for (std::size_t i = 0; i < reports.size(); ++i)
    if (saturated(reports[i], zero_load, factor)) return i;
  return std::nullopt;
}

// Runs `run(rate)` over the ladder. With `stop_after_saturation`, points
// above the first saturated one are skipped.
inline SweepResult sweep(std::span<const double> ladder,
                         const std::function<StatsReport(double)>& run, double factor = 3.0,
                         bool stop_after_saturation = false) {
  require_increasing(ladder);
  SweepResult out;
  for (double rate : ladder) {
    out.rates.push_back(rate);
    out.reports.push_back(run(rate));
    if (out.reports.size() == 1) out.zero_load_latency = out.reports[0].avg_delivery_latency;
    if (stop_after_saturation && detect_saturation(out.reports, factor)) break;
  }
  out.saturation_index = detect_saturation(out.reports, factor);
  return out;
}

// ---------------------------------------------------------------------------
// Comparisons against a baseline.

struct Improvement {
  std::optional<double> delivery_latency;
  std::optional<double> packet_latency;
  std::optional<double> energy;
  std::optional<double> hops;
};

inline std::optional<double> improvement(std::optional<double> baseline,
                                         std::optional<double> candidate) {
  if (!baseline || !candidate || *baseline == 0.0) return std::nullopt;
  return (*baseline - *candidate) / *baseline;
}

inline Improvement compare(const StatsReport& baseline, const StatsReport& candidate) {
  if (baseline.meta.workload_hash != candidate.meta.workload_hash) {
    throw std::invalid_argument("reports come from different workloads (" +
                                hex64(baseline.meta.workload_hash) + " vs " +
                                hex64(candidate.meta.workload_hash) + ")");
  }
  Improvement out;
  out.delivery_latency = improvement(baseline.avg_delivery_latency, candidate.avg_delivery_latency);
  out.packet_latency = improvement(baseline.avg_packet_latency, candidate.avg_packet_latency);
  out.energy = improvement(baseline.energy, candidate.energy);
  out.hops = improvement(static_cast<double>(baseline.total_hops),
                         static_cast<double>(candidate.total_hops));
  return out;
}

inline nlohmann::json to_json(const Improvement& i) {
  return {{"delivery_latency", optional_json(i.delivery_latency)},
          {"packet_latency", optional_json(i.packet_latency)},
          {"energy", optional_json(i.energy)},
          {"hops", optional_json(i.hops)}};
}

enum class Trend : std::uint8_t { Monotone, NotMonotone, Incomplete };

inline const char* to_string(Trend t) {
  switch (t) {
    case Trend::Monotone: return "monotone";
    case Trend::NotMonotone: return "not_monotone";
    case Trend::Incomplete: return "incomplete";
  }
  return "?";
}

// Strictly increasing sequence check.
inline Trend trend(std::span<const std::optional<double>> values) {
  for (const auto& v : values)
    if (!v) return Trend::Incomplete;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (!(*values[i] > *values[i - 1])) return Trend::NotMonotone;
  return Trend::Monotone;
}

}  // namespace dpmnoc
