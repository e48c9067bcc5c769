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

// dpmnoc: plan, simulate, sweep and check multicast routing on 2D meshes.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 invariant
// failure, 3 deadlock watchdog.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "dpmnoc/checks.hpp"
#include "dpmnoc/engine.hpp"
#include "dpmnoc/metrics.hpp"
#include "dpmnoc/plan_json.hpp"
#include "dpmnoc/run_config.hpp"

namespace {

using namespace dpmnoc;
using nlohmann::json;

enum Exit : int { kOk = 0, kUsage = 1, kInvariant = 2, kDeadlock = 3 };

NodeCoord parse_coord(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("coordinate must be x,y: '" + s + "'");
  return {std::stoi(s.substr(0, comma)), std::stoi(s.substr(comma + 1))};
}

DestRange parse_range(const std::string& s) {
  const auto dash = s.find('-');
  if (dash == std::string::npos) throw std::invalid_argument("range must be min-max: '" + s + "'");
  return {std::stoi(s.substr(0, dash)), std::stoi(s.substr(dash + 1))};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::jthread> pool;
  const int k = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  for (int t = 1; t < k; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

// The run parameters, without where the results are written.
json run_parameters(const RunConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output_dir");
  return j;
}

StatsReport run_once(const RunConfig& cfg) {
  Simulator sim(cfg.sim);
  RunMeta meta;
  meta.injection_rate = cfg.traffic.injection_rate;
  meta.dest_range = cfg.traffic.dest_range;
  if (cfg.trace) {
    VectorSource src(load_trace(*cfg.trace, cfg.sim.mesh));
    return sim.run(src, meta);
  }
  SyntheticSource src(cfg.traffic, cfg.sim.mesh, cfg.sim.seed,
                      cfg.sim.warmup + cfg.sim.measure + cfg.sim.drain);
  return sim.run(src, meta);
}

// Flags shared by sim, sweep and check; applied on top of the file.
struct Overrides {
  std::string mesh, planner, approach, cost_model, routing, arbitration, trace, out;
  std::optional<double> rate;
  std::string range;
  std::optional<std::uint64_t> seed;
  std::optional<Cycle> warmup, measure, drain;
  bool check_invariants = false;

  void attach(CLI::App* app) {
    app->add_option("--mesh", mesh, "mesh size WxH");
    app->add_option("--planner", planner, "dpm | mp | nmp | dp | mu");
    app->add_option("--approach", approach, "hamiltonian | xy");
    app->add_option("--cost-model", cost_model, "include_approach_leg | from_representative");
    app->add_option("--routing", routing, "hamiltonian | all_turns");
    app->add_option("--arbitration", arbitration, "age | round_robin");
    app->add_option("--rate", rate, "injection rate (messages per node per cycle)");
    app->add_option("--range", range, "multicast destination range, e.g. 10-16");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--warmup", warmup, "warmup cycles");
    app->add_option("--measure", measure, "measurement cycles");
    app->add_option("--drain", drain, "drain cap in cycles");
    app->add_option("--trace", trace, "JSONL trace replacing synthetic traffic");
    app->add_option("--out", out, "output directory");
    app->add_flag("--check-invariants", check_invariants, "verify router invariants every cycle");
  }

  void apply(RunConfig& c) const {
    if (!mesh.empty()) c.sim.mesh = parse_mesh(mesh);
    if (!planner.empty()) c.sim.planner = parse_planner(planner);
    if (!approach.empty()) c.sim.approach = parse_approach(approach);
    if (!cost_model.empty()) c.sim.cost_model = parse_cost_model(cost_model);
    if (!routing.empty()) c.sim.routing = parse_routing_mode(routing);
    if (!arbitration.empty()) c.sim.arbitration = parse_arbitration(arbitration);
    if (rate) c.traffic.injection_rate = *rate;
    if (!range.empty()) c.traffic.dest_range = parse_range(range);
    if (seed) c.sim.seed = *seed;
    if (warmup) c.sim.warmup = *warmup;
    if (measure) c.sim.measure = *measure;
    if (drain) c.sim.drain = *drain;
    if (!trace.empty()) c.trace = trace;
    if (!out.empty()) c.output_dir = out;
    if (check_invariants) c.sim.check_invariants = true;
  }
};

RunConfig resolve(const std::string& path, const Overrides& o) {
  RunConfig c = path.empty() ? RunConfig{} : load_run_config(path);
  o.apply(c);
  c.require_valid();
  return c;
}

// ---------------------------------------------------------------------------

struct PlanArgs {
  std::string instance, mesh = "8x8", src, algo = "dpm", approach = "hamiltonian",
                        cost_model = "include_approach_leg";
  std::vector<std::string> dests;
  bool oracle = false;
};

int cmd_plan(const PlanArgs& a) {
  MeshConfig mesh = parse_mesh(a.mesh);
  NodeCoord src;
  std::vector<NodeCoord> dests;
  if (!a.instance.empty()) {
    std::ifstream in(a.instance);
    if (!in) throw std::runtime_error("cannot open instance '" + a.instance + "'");
    const json j = json::parse(in);
    if (j.contains("mesh")) mesh = parse_mesh(j["mesh"].get<std::string>());
    src = {j.at("src").at(0).get<int>(), j.at("src").at(1).get<int>()};
    for (const auto& d : j.at("dests")) dests.push_back({d.at(0).get<int>(), d.at(1).get<int>()});
  } else {
    if (a.src.empty() || a.dests.empty())
      throw std::invalid_argument("give --instance or both --src and --dests");
    src = parse_coord(a.src);
    for (const auto& d : a.dests) dests.push_back(parse_coord(d));
  }
  mesh.validate();
  const PlannerKind kind = parse_planner(a.algo);
  const PlannerOptions opts{parse_cost_model(a.cost_model), parse_approach(a.approach)};
  json out;
  out["mesh"] = std::to_string(mesh.width) + "x" + std::to_string(mesh.height);
  if (kind == PlannerKind::DPM)
    out["partition"] = to_json(dpm_partition(dests, src, mesh, opts.cost_model), mesh);
  const RoutePlan p = plan(kind, dests, src, mesh, opts);
  out["plan"] = to_json(p, mesh);
  out["planned_cost"] = planned_cost(p, mesh);
  std::optional<int> gap;
  if (a.oracle) {
    const FinalPartition dpm = dpm_partition(dests, src, mesh, opts.cost_model);
    const FinalPartition opt = exact_optimal_partition(dests, src, mesh, opts.cost_model);
    gap = dpm.total_cost() - opt.total_cost();
    out["oracle"] = {{"partition", to_json(opt, mesh)},
                     {"dpm_partition_cost", dpm.total_cost()},
                     {"optimal_partition_cost", opt.total_cost()},
                     {"gap", *gap}};
  }
  std::cout << out.dump(2) << '\n';
  if (gap) std::cerr << "gap: " << *gap << '\n';
  return kOk;
}

int cmd_sim(const std::string& path, const Overrides& o) {
  const RunConfig cfg = resolve(path, o);
  const StatsReport r = run_once(cfg);
  const std::filesystem::path dir(cfg.output_dir);
  json doc{{"config", run_parameters(cfg)}, {"report", to_json(r)}};
  write_file(dir / "report.json", doc.dump(2) + "\n");
  write_file(dir / "report.csv", std::string(csv_header()) + "\n" + csv_row(r) + "\n");
  std::cout << csv_header() << '\n' << csv_row(r) << '\n';
  return kOk;
}

struct SweepArgs {
  std::string algos;
  std::string rates;
  std::string ranges;
  int jobs = 1;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);)
    if (!item.empty()) out.push_back(item);
  return out;
}

int cmd_sweep(const std::string& path, const Overrides& o, const SweepArgs& a) {
  RunConfig cfg = path.empty() ? RunConfig{} : load_run_config(path);
  o.apply(cfg);
  if (!a.algos.empty()) {
    cfg.sweep.planners.clear();
    for (const auto& s : split(a.algos, ',')) cfg.sweep.planners.push_back(parse_planner(s));
  }
  if (!a.rates.empty()) {
    cfg.sweep.rates.clear();
    for (const auto& s : split(a.rates, ',')) cfg.sweep.rates.push_back(std::stod(s));
  }
  if (!a.ranges.empty()) {
    cfg.sweep.ranges.clear();
    for (const auto& s : split(a.ranges, ',')) cfg.sweep.ranges.push_back(parse_range(s));
  }
  if (cfg.sweep.planners.empty()) cfg.sweep.planners = {cfg.sim.planner};
  if (cfg.sweep.ranges.empty()) cfg.sweep.ranges = {cfg.traffic.dest_range};
  if (cfg.trace) throw ConfigError({"sweep needs synthetic traffic, not a trace"});
  cfg.require_valid();
  require_increasing(cfg.sweep.rates);

  const auto& planners = cfg.sweep.planners;
  const auto& ranges = cfg.sweep.ranges;
  const auto& rates = cfg.sweep.rates;
  // One ladder per (range, planner), in that order.
  std::vector<SweepResult> ladders(ranges.size() * planners.size());
  auto point = [&](std::size_t ladder, double rate) {
    RunConfig c = cfg;
    c.sim.planner = planners[ladder % planners.size()];
    c.traffic.dest_range = ranges[ladder / planners.size()];
    c.traffic.injection_rate = rate;
    return run_once(c);
  };
  if (cfg.sweep.stop_after_saturation) {
    parallel_for(ladders.size(), a.jobs, [&](std::size_t i) {
      ladders[i] = sweep(rates, [&](double r) { return point(i, r); },
                         cfg.sweep.saturation_factor, true);
    });
  } else {
    std::vector<StatsReport> grid(ladders.size() * rates.size());
    parallel_for(grid.size(), a.jobs, [&](std::size_t k) {
      grid[k] = point(k / rates.size(), rates[k % rates.size()]);
    });
    for (std::size_t i = 0; i < ladders.size(); ++i) {
      std::size_t k = i * rates.size();
      ladders[i] = sweep(rates, [&](double) { return grid[k++]; }, cfg.sweep.saturation_factor);
    }
  }

  const auto mu = std::find(planners.begin(), planners.end(), PlannerKind::MU);
  const std::size_t base = mu != planners.end() ? mu - planners.begin() : 0;
  const std::string base_name = to_string(planners[base]);
  std::ostringstream csv;
  csv << csv_header() << ",saturated,latency_improvement_vs_" << base_name
      << ",energy_improvement_vs_" << base_name << '\n';
  json summary;
  summary["baseline"] = base_name;
  summary["config"] = run_parameters(cfg);
  auto& by_range = summary["ranges"] = json::array();
  for (std::size_t ri = 0; ri < ranges.size(); ++ri) {
    const SweepResult& b = ladders[ri * planners.size() + base];
    json rj;
    rj["dest_range"] = {ranges[ri].min, ranges[ri].max};
    const std::size_t op = b.knee_index().value_or(0);
    rj["baseline_operating_rate"] = b.rates[op];
    rj["baseline_saturation_rate"] = optional_json(b.saturation_rate());
    for (std::size_t pi = 0; pi < planners.size(); ++pi) {
      const SweepResult& s = ladders[ri * planners.size() + pi];
      json pj;
      pj["saturation_rate"] = optional_json(s.saturation_rate());
      pj["zero_load_latency"] = optional_json(s.zero_load_latency);
      if (op < s.reports.size()) pj["vs_baseline_at_operating_rate"] = to_json(compare(b.reports[op], s.reports[op]));
      for (std::size_t k = 0; k < s.reports.size(); ++k) {
        const bool sat = s.saturation_index && k >= *s.saturation_index;
        Improvement imp;
        if (k < b.reports.size()) imp = compare(b.reports[k], s.reports[k]);
        csv << csv_row(s.reports[k]) << ',' << (sat ? "true" : "false") << ','
            << fmt_optional(imp.delivery_latency) << ',' << fmt_optional(imp.energy) << '\n';
      }
      rj["planners"][to_string(planners[pi])] = std::move(pj);
    }
    by_range.push_back(std::move(rj));
  }
  const std::filesystem::path dir(cfg.output_dir);
  write_file(dir / "sweep.csv", csv.str());
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  std::cout << csv.str();
  return kOk;
}

int cmd_check(const std::string& path, const Overrides& o, std::optional<int> instances) {
  RunConfig cfg = resolve(path, o);
  if (instances) cfg.check_instances = *instances;
  bool ok = true;
  for (const CheckResult& r : run_checks(cfg.sim, cfg.check_instances, cfg.sim.seed)) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    ok = ok && r.passed;
  }
  return ok ? kOk : kInvariant;
}

int cmd_validate_trace(const std::string& path, const std::string& mesh_text) {
  const MeshConfig mesh = parse_mesh(mesh_text);
  mesh.validate();
  try {
    const auto events = load_trace(path, mesh);
    std::size_t multicast = 0;
    for (const auto& e : events) multicast += e.destinations.size() > 1;
    std::cout << "ok: " << events.size() << " events, " << multicast << " multicast";
    if (!events.empty())
      std::cout << ", cycles " << events.front().cycle << ".." << events.back().cycle;
    std::cout << '\n';
    return kOk;
  } catch (const TraceError& e) {
    std::cerr << path << ": " << e.what() << '\n';
    return kInvariant;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multicast routing planner and cycle-level mesh NoC simulator"};
  app.require_subcommand(1);

  PlanArgs plan_args;
  auto* plan = app.add_subcommand("plan", "Plan one multicast and print the plan as JSON");
  plan->add_option("--instance", plan_args.instance,
                   "JSON file {\"mesh\": \"8x8\", \"src\": [x, y], \"dests\": [[x, y], ...]}");
  plan->add_option("--mesh", plan_args.mesh, "mesh size WxH")->capture_default_str();
  plan->add_option("--src", plan_args.src, "source x,y");
  plan->add_option("--dests", plan_args.dests, "destinations x,y ...");
  plan->add_option("--algo", plan_args.algo, "dpm | mp | nmp | dp | mu")->capture_default_str();
  plan->add_option("--approach", plan_args.approach, "hamiltonian | xy")->capture_default_str();
  plan->add_option("--cost-model", plan_args.cost_model)->capture_default_str();
  plan->add_flag("--oracle", plan_args.oracle, "also compute the exact optimal partition");

  std::string sim_path;
  Overrides sim_over;
  auto* sim = app.add_subcommand("sim", "Run one simulation and write report.json/report.csv");
  sim->add_option("config", sim_path, "JSON run configuration")->check(CLI::ExistingFile);
  sim_over.attach(sim);

  std::string sweep_path;
  Overrides sweep_over;
  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep injection rates over planners and ranges");
  sweep_cmd->add_option("config", sweep_path, "JSON run configuration")->check(CLI::ExistingFile);
  sweep_cmd->add_option("--algos", sweep_args.algos, "comma-separated planners, e.g. mu,dpm");
  sweep_cmd->add_option("--rates", sweep_args.rates, "comma-separated rate ladder");
  sweep_cmd->add_option("--ranges", sweep_args.ranges, "comma-separated ranges, e.g. 2-5,10-16");
  sweep_cmd->add_option("--jobs", sweep_args.jobs, "parallel simulations")->capture_default_str();
  sweep_over.attach(sweep_cmd);

  std::string check_path;
  Overrides check_over;
  std::optional<int> check_instances;
  auto* check = app.add_subcommand("check", "Run structural invariant checks");
  check->add_option("config", check_path, "JSON run configuration")->check(CLI::ExistingFile);
  check->add_option("--instances", check_instances, "random partition instances");
  check_over.attach(check);

  std::string trace_path, trace_mesh = "8x8";
  auto* vt = app.add_subcommand("validate-trace", "Validate a JSONL trace without simulating");
  vt->add_option("trace", trace_path, "trace file")->required();
  vt->add_option("--mesh", trace_mesh, "mesh size WxH")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*plan) return cmd_plan(plan_args);
    if (*sim) return cmd_sim(sim_path, sim_over);
    if (*sweep_cmd) return cmd_sweep(sweep_path, sweep_over, sweep_args);
    if (*check) return cmd_check(check_path, check_over, check_instances);
    if (*vt) return cmd_validate_trace(trace_path, trace_mesh);
  } catch (const DeadlockDetected& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDeadlock;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violated: " << e.what() << '\n';
    return kInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
