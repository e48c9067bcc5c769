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

// JSON run configuration.
//
//   {
//     "mesh": "8x8",                       // or {"width": 8, "height": 8}
//     "planner": "dpm",                    // dpm | mp | nmp | dp | mu
//     "cost_model": "include_approach_leg",
//     "approach": "hamiltonian",           // hamiltonian | xy
//     "routing": "hamiltonian",            // hamiltonian | all_turns
//     "arbitration": "age",                // age | round_robin
//     "vcs_per_port": 4, "vcs_high": 2, "vcs_low": 2,
//     "buffer_depth": 4, "packet_size": 4,
//     "router_latency": 1, "link_latency": 1,
//     "watchdog_threshold": 10000,
//     "warmup": 1000, "measure": 10000, "drain": 50000,
//     "max_source_queue": 0, "check_invariants": false, "seed": 1,
//     "energy": {"link": 1.0, "buffer_write": 1.0, "buffer_read": 0.5, "crossbar": 0.7},
//     "traffic": {"injection_rate": 0.01, "multicast_fraction": 0.1, "dest_range": [2, 5]},
//     "trace": "events.jsonl",             // replaces synthetic traffic; relative
//                                          // to the configuration file
//     "output_dir": "out",
//     "sweep": {"rates": [0.005, 0.01], "ranges": [[2, 5]], "planners": ["mu", "dpm"],
//               "saturation_factor": 3.0, "stop_after_saturation": false},
//     "check": {"instances": 1000}
//   }
//
// Every key is optional; unknown keys are rejected.

#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpmnoc/engine.hpp"
#include "dpmnoc/workload.hpp"

namespace dpmnoc {

class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::vector<std::string>& problems)
      : std::invalid_argument(join(problems)), problems_(problems) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string out = "invalid configuration:";
    for (const auto& s : p) out += "\n  - " + s;
    return out;
  }
  std::vector<std::string> problems_;
};

inline MeshConfig parse_mesh(const std::string& text) {
  const auto x = text.find('x');
  MeshConfig m{0, 0};
  if (x == std::string::npos) throw std::invalid_argument("mesh must look like WxH, got '" + text + "'");
  auto num = [&](std::string_view s, int& out) {
    const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    return r.ec == std::errc{} && r.ptr == s.data() + s.size();
  };
  const std::string_view v(text);
  if (!num(v.substr(0, x), m.width) || !num(v.substr(x + 1), m.height))
    throw std::invalid_argument("mesh must look like WxH, got '" + text + "'");
  return m;
}

struct SweepSpec {
  std::vector<double> rates;
  std::vector<DestRange> ranges;
  std::vector<PlannerKind> planners;
  double saturation_factor = 3.0;
  bool stop_after_saturation = false;
};

struct RunConfig {
  SimConfig sim;
  TrafficConfig traffic;
  std::optional<std::string> trace;
  std::string output_dir = "out";
  SweepSpec sweep;
  int check_instances = 1000;

  // Every violated constraint, in a stable order.
  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    auto probe = [&](auto&& fn) {
      try {
        fn();
      } catch (const std::exception& e) {
        out.emplace_back(e.what());
      }
    };
    probe([&] { sim.validate(); });
    if (sim.mesh.width >= 2 && sim.mesh.height >= 2) {
      if (!trace) probe([&] { traffic.validate(sim.mesh); });
      for (DestRange r : sweep.ranges) {
        TrafficConfig t = traffic;
        t.dest_range = r;
        probe([&] { t.validate(sim.mesh); });
      }
    }
    for (double r : sweep.rates)
      if (!(r >= 0.0 && r <= 1.0)) out.emplace_back("sweep rates must lie in [0, 1]");
    if (!(sweep.saturation_factor > 1.0)) out.emplace_back("saturation_factor must exceed 1");
    if (check_instances < 1) out.emplace_back("check.instances must be >= 1");
    if (output_dir.empty()) out.emplace_back("output_dir must not be empty");
    return out;
  }

  void require_valid() const {
    const auto p = problems();
    if (!p.empty()) throw ConfigError(p);
  }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known,
                           const std::string& where, std::vector<std::string>& problems) {
  const std::set<std::string> ok(known.begin(), known.end());
  for (const auto& [k, _] : j.items())
    if (!ok.count(k)) problems.push_back("unknown key '" + where + k + "'");
}

inline DestRange range_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2)
    throw std::invalid_argument("destination range must be [min, max]");
  return {j[0].get<int>(), j[1].get<int>()};
}

}  // namespace detail

// Applies the keys present in `j` on top of `cfg`.
inline void apply_json(RunConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError({"configuration must be a JSON object"});
  std::vector<std::string> problems;
  detail::reject_unknown(j,
                         {"mesh", "planner", "cost_model", "approach", "routing", "arbitration",
                          "vcs_per_port",
                          "vcs_high", "vcs_low", "buffer_depth", "packet_size", "router_latency",
                          "link_latency", "watchdog_threshold", "warmup", "measure", "drain",
                          "max_source_queue", "check_invariants", "seed", "energy", "traffic",
                          "trace", "output_dir", "sweep", "check"},
                         "", problems);
  auto field = [&](const char* key, auto&& assign) {
    if (!j.contains(key)) return;
    try {
      assign(j.at(key));
    } catch (const std::exception& e) {
      problems.push_back(std::string(key) + ": " + e.what());
    }
  };
  SimConfig& s = cfg.sim;
  field("mesh", [&](const auto& v) {
    if (v.is_string()) s.mesh = parse_mesh(v.template get<std::string>());
    else s.mesh = {v.at("width").template get<int>(), v.at("height").template get<int>()};
  });
  field("planner", [&](const auto& v) { s.planner = parse_planner(v.template get<std::string>()); });
  field("cost_model",
        [&](const auto& v) { s.cost_model = parse_cost_model(v.template get<std::string>()); });
  field("approach",
        [&](const auto& v) { s.approach = parse_approach(v.template get<std::string>()); });
  field("routing",
        [&](const auto& v) { s.routing = parse_routing_mode(v.template get<std::string>()); });
  field("arbitration",
        [&](const auto& v) { s.arbitration = parse_arbitration(v.template get<std::string>()); });
  field("vcs_per_port", [&](const auto& v) { s.vcs_per_port = v.template get<int>(); });
  field("vcs_high", [&](const auto& v) { s.vcs_high = v.template get<int>(); });
  field("vcs_low", [&](const auto& v) { s.vcs_low = v.template get<int>(); });
  field("buffer_depth", [&](const auto& v) { s.buffer_depth = v.template get<int>(); });
  field("packet_size", [&](const auto& v) { s.packet_size = v.template get<int>(); });
  field("router_latency", [&](const auto& v) { s.router_latency = v.template get<int>(); });
  field("link_latency", [&](const auto& v) { s.link_latency = v.template get<int>(); });
  field("watchdog_threshold",
        [&](const auto& v) { s.watchdog_threshold = v.template get<Cycle>(); });
  field("warmup", [&](const auto& v) { s.warmup = v.template get<Cycle>(); });
  field("measure", [&](const auto& v) { s.measure = v.template get<Cycle>(); });
  field("drain", [&](const auto& v) { s.drain = v.template get<Cycle>(); });
  field("max_source_queue",
        [&](const auto& v) { s.max_source_queue = v.template get<std::size_t>(); });
  field("check_invariants", [&](const auto& v) { s.check_invariants = v.template get<bool>(); });
  field("seed", [&](const auto& v) { s.seed = v.template get<std::uint64_t>(); });
  field("energy", [&](const auto& v) {
    detail::reject_unknown(v, {"link", "buffer_write", "buffer_read", "crossbar"}, "energy.",
                           problems);
    if (v.contains("link")) s.energy.link = v["link"].template get<double>();
    if (v.contains("buffer_write")) s.energy.buffer_write = v["buffer_write"].template get<double>();
    if (v.contains("buffer_read")) s.energy.buffer_read = v["buffer_read"].template get<double>();
    if (v.contains("crossbar")) s.energy.crossbar = v["crossbar"].template get<double>();
  });
  field("traffic", [&](const auto& v) {
    detail::reject_unknown(v, {"injection_rate", "multicast_fraction", "dest_range"}, "traffic.",
                           problems);
    TrafficConfig& t = cfg.traffic;
    if (v.contains("injection_rate")) t.injection_rate = v["injection_rate"].template get<double>();
    if (v.contains("multicast_fraction"))
      t.multicast_fraction = v["multicast_fraction"].template get<double>();
    if (v.contains("dest_range")) t.dest_range = detail::range_from_json(v["dest_range"]);
  });
  field("trace", [&](const auto& v) { cfg.trace = v.template get<std::string>(); });
  field("output_dir", [&](const auto& v) { cfg.output_dir = v.template get<std::string>(); });
  field("sweep", [&](const auto& v) {
    detail::reject_unknown(
        v, {"rates", "ranges", "planners", "saturation_factor", "stop_after_saturation"}, "sweep.",
        problems);
    SweepSpec& w = cfg.sweep;
    if (v.contains("rates")) w.rates = v["rates"].template get<std::vector<double>>();
    if (v.contains("ranges")) {
      w.ranges.clear();
      for (const auto& r : v["ranges"]) w.ranges.push_back(detail::range_from_json(r));
    }
    if (v.contains("planners")) {
      w.planners.clear();
      for (const auto& p : v["planners"]) w.planners.push_back(parse_planner(p.template get<std::string>()));
    }
    if (v.contains("saturation_factor"))
      w.saturation_factor = v["saturation_factor"].template get<double>();
    if (v.contains("stop_after_saturation"))
      w.stop_after_saturation = v["stop_after_saturation"].template get<bool>();
  });
  field("check", [&](const auto& v) {
    detail::reject_unknown(v, {"instances"}, "check.", problems);
    if (v.contains("instances")) cfg.check_instances = v["instances"].template get<int>();
  });
  if (!problems.empty()) throw ConfigError(problems);
}

inline RunConfig parse_run_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({std::string("malformed JSON: ") + e.what()});
  }
  RunConfig cfg;
  apply_json(cfg, j);
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig cfg = parse_run_config(ss.str());
  if (cfg.trace && std::filesystem::path(*cfg.trace).is_relative())
    cfg.trace = (std::filesystem::path(path).parent_path() / *cfg.trace).string();
  return cfg;
}

inline nlohmann::json to_json(const RunConfig& c) {
  const SimConfig& s = c.sim;
  nlohmann::json j;
  j["mesh"] = std::to_string(s.mesh.width) + "x" + std::to_string(s.mesh.height);
  j["planner"] = to_string(s.planner);
  j["cost_model"] = to_string(s.cost_model);
  j["approach"] = to_string(s.approach);
  j["routing"] = to_string(s.routing);
  j["arbitration"] = to_string(s.arbitration);
  j["vcs_per_port"] = s.vcs_per_port;
  j["vcs_high"] = s.vcs_high;
  j["vcs_low"] = s.vcs_low;
  j["buffer_depth"] = s.buffer_depth;
  j["packet_size"] = s.packet_size;
  j["router_latency"] = s.router_latency;
  j["link_latency"] = s.link_latency;
  j["watchdog_threshold"] = s.watchdog_threshold;
  j["warmup"] = s.warmup;
  j["measure"] = s.measure;
  j["drain"] = s.drain;
  j["max_source_queue"] = s.max_source_queue;
  j["check_invariants"] = s.check_invariants;
  j["seed"] = s.seed;
  j["energy"] = {{"link", s.energy.link},
                 {"buffer_write", s.energy.buffer_write},
                 {"buffer_read", s.energy.buffer_read},
                 {"crossbar", s.energy.crossbar}};
  j["traffic"] = {{"injection_rate", c.traffic.injection_rate},
                  {"multicast_fraction", c.traffic.multicast_fraction},
                  {"dest_range", {c.traffic.dest_range.min, c.traffic.dest_range.max}}};
  if (c.trace) j["trace"] = *c.trace;
  j["output_dir"] = c.output_dir;
  auto& w = j["sweep"];
  w["rates"] = c.sweep.rates;
  w["ranges"] = nlohmann::json::array();
  for (DestRange r : c.sweep.ranges) w["ranges"].push_back({r.min, r.max});
  w["planners"] = nlohmann::json::array();
  for (PlannerKind p : c.sweep.planners) w["planners"].push_back(to_string(p));
  w["saturation_factor"] = c.sweep.saturation_factor;
  w["stop_after_saturation"] = c.sweep.stop_after_saturation;
  j["check"] = {{"instances", c.check_instances}};
  return j;
}

}  // namespace dpmnoc
