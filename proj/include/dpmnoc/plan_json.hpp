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

// JSON views of partitions and route plans. Nodes appear as
// {"x", "y", "label"}.

#pragma once

#include <json.hpp>

#include "dpmnoc/partition.hpp"
#include "dpmnoc/routing.hpp"

namespace dpmnoc {

inline nlohmann::json node_json(NodeCoord c, const MeshConfig& mesh) {
  return {{"x", c.x}, {"y", c.y}, {"label", label_of(c, mesh).value}};
}

inline nlohmann::json nodes_json(std::span<const NodeCoord> v, const MeshConfig& mesh) {
  auto out = nlohmann::json::array();
  for (NodeCoord c : v) out.push_back(node_json(c, mesh));
  return out;
}

inline nlohmann::json to_json(const FinalPartition& p, const MeshConfig& mesh) {
  nlohmann::json j;
  j["cost_model"] = to_string(p.cost_model);
  j["merges"] = p.merges;
  j["total_cost"] = p.total_cost();
  auto& sets = j["sets"] = nlohmann::json::array();
  for (const CandidateSet& s : p.sets) {
    nlohmann::json e;
    e["sectors"] = nlohmann::json::array();
    for (PartitionIndex i : s.constituents) e["sectors"].push_back(i.value);
    e["members"] = nodes_json(s.members, mesh);
    e["representative"] =
        s.representative ? node_json(*s.representative, mesh) : nlohmann::json(nullptr);
    e["mode"] = to_string(s.mode);
    e["cost"] = s.cost;
    sets.push_back(std::move(e));
  }
  return j;
}

inline nlohmann::json to_json(const RoutePlan& p, const MeshConfig& mesh) {
  nlohmann::json j;
  j["planner"] = to_string(p.planner);
  j["source"] = node_json(p.source, mesh);
  j["planned_cost"] = planned_cost(p, mesh);
  auto& entries = j["entries"] = nlohmann::json::array();
  for (const RouteEntry& e : p.entries) {
    nlohmann::json o;
    o["origin"] = node_json(e.origin, mesh);
    o["representative"] =
        e.representative ? node_json(*e.representative, mesh) : nlohmann::json(nullptr);
    o["mode"] = to_string(e.mode);
    o["hops"] = e.hops;
    o["destinations"] = nodes_json(e.destinations, mesh);
    if (!e.approach.empty()) o["approach"] = nodes_json(e.approach, mesh);
    if (!e.high_chain.empty()) o["high_chain"] = nodes_json(e.high_chain, mesh);
    if (!e.low_chain.empty()) o["low_chain"] = nodes_json(e.low_chain, mesh);
    if (!e.unicast_fanout.empty()) o["unicast_fanout"] = nodes_json(e.unicast_fanout, mesh);
    if (!e.greedy_chain.empty()) o["greedy_chain"] = nodes_json(e.greedy_chain, mesh);
    entries.push_back(std::move(o));
  }
  return j;
}

}  // namespace dpmnoc
