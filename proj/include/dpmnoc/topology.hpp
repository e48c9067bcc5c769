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

// 2D mesh geometry: snake (Hamiltonian) labeling, 4-neighbor adjacency and
// the high/low channel subnetworks.
//
// Coordinates: x is the column in [0, width), y is the row in [0, height).
// Rows are labeled left-to-right when y is even and right-to-left when y is
// odd, so consecutive labels are always mesh neighbors.

#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpmnoc {

struct MeshConfig {
  int width = 8;
  int height = 8;

  int node_count() const { return width * height; }

  void validate() const {
    if (width < 2 || height < 2) {
      throw std::invalid_argument("mesh must be at least 2x2, got " +
                                  std::to_string(width) + "x" +
                                  std::to_string(height));
    }
  }

  friend bool operator==(const MeshConfig&, const MeshConfig&) = default;
};

struct NodeCoord {
  int x = 0;
  int y = 0;

  friend auto operator<=>(const NodeCoord&, const NodeCoord&) = default;
  friend std::ostream& operator<<(std::ostream& os, const NodeCoord& c) {
    return os << '(' << c.x << ',' << c.y << ')';
  }
};

struct NodeLabel {
  int value = 0;

  friend auto operator<=>(const NodeLabel&, const NodeLabel&) = default;
};

enum class Subnet : std::uint8_t { High = 0, Low = 1 };

inline const char* to_string(Subnet s) {
  return s == Subnet::High ? "high" : "low";
}

// Output/input port numbering shared by the router model and the channel
// graph. Local is the injection/ejection port.
enum class Port : std::uint8_t { East = 0, West = 1, North = 2, South = 3, Local = 4 };
inline constexpr int kMeshPorts = 4;
inline constexpr int kRouterPorts = 5;

inline constexpr std::array<int, kMeshPorts> kPortDx = {1, -1, 0, 0};
inline constexpr std::array<int, kMeshPorts> kPortDy = {0, 0, 1, -1};

inline Port opposite(Port p) {
  switch (p) {
    case Port::East: return Port::West;
    case Port::West: return Port::East;
    case Port::North: return Port::South;
    case Port::South: return Port::North;
    default: return Port::Local;
  }
}

inline const char* to_string(Port p) {
  switch (p) {
    case Port::East: return "E";
    case Port::West: return "W";
    case Port::North: return "N";
    case Port::South: return "S";
    default: return "L";
  }
}

inline bool in_bounds(NodeCoord c, const MeshConfig& mesh) {
  return c.x >= 0 && c.x < mesh.width && c.y >= 0 && c.y < mesh.height;
}

inline void require_in_bounds(NodeCoord c, const MeshConfig& mesh) {
  if (!in_bounds(c, mesh)) {
    throw std::domain_error("coordinate (" + std::to_string(c.x) + "," +
                            std::to_string(c.y) + ") outside " +
                            std::to_string(mesh.width) + "x" +
                            std::to_string(mesh.height) + " mesh");
  }
}

inline NodeLabel label_of(NodeCoord c, const MeshConfig& mesh) {
  require_in_bounds(c, mesh);
  const int row = c.y * mesh.width;
  return NodeLabel{c.y % 2 == 0 ? row + c.x : row + mesh.width - c.x - 1};
}

inline NodeCoord coord_of(NodeLabel label, const MeshConfig& mesh) {
  if (label.value < 0 || label.value >= mesh.node_count()) {
    throw std::domain_error("label " + std::to_string(label.value) +
                            " outside mesh of " +
                            std::to_string(mesh.node_count()) + " nodes");
  }
  const int y = label.value / mesh.width;
  const int offset = label.value % mesh.width;
  return NodeCoord{y % 2 == 0 ? offset : mesh.width - offset - 1, y};
}

// Row-major index; the engine's storage order and the "non-snake" labeling.
inline int row_major_index(NodeCoord c, const MeshConfig& mesh) {
  return c.y * mesh.width + c.x;
}

inline NodeCoord from_row_major(int index, const MeshConfig& mesh) {
  return NodeCoord{index % mesh.width, index / mesh.width};
}

inline int manhattan(NodeCoord a, NodeCoord b) {
  return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

inline bool adjacent(NodeCoord a, NodeCoord b) { return manhattan(a, b) == 1; }

inline std::vector<NodeCoord> neighbors(NodeCoord c, const MeshConfig& mesh) {
  require_in_bounds(c, mesh);
  std::vector<NodeCoord> out;
  out.reserve(kMeshPorts);
  for (int p = 0; p < kMeshPorts; ++p) {
    const NodeCoord n{c.x + kPortDx[p], c.y + kPortDy[p]};
    if (in_bounds(n, mesh)) out.push_back(n);
  }
  return out;
}

// Port of `from` that leads to the adjacent node `to`.
inline Port port_toward(NodeCoord from, NodeCoord to) {
  for (int p = 0; p < kMeshPorts; ++p) {
    if (from.x + kPortDx[p] == to.x && from.y + kPortDy[p] == to.y) {
      return static_cast<Port>(p);
    }
  }
  throw std::domain_error("nodes are not adjacent");
}

inline NodeCoord step(NodeCoord from, Port p) {
  const int i = static_cast<int>(p);
  return NodeCoord{from.x + kPortDx[i], from.y + kPortDy[i]};
}

inline Subnet channel_subnet(NodeCoord from, NodeCoord to,
                             const MeshConfig& mesh) {
  require_in_bounds(from, mesh);
  require_in_bounds(to, mesh);
  if (!adjacent(from, to)) {
    throw std::domain_error("channel endpoints are not adjacent");
  }
  return label_of(to, mesh) > label_of(from, mesh) ? Subnet::High
                                                   : Subnet::Low;
}

// A directed physical link together with the virtual subnetwork it is used in.
struct Channel {
  NodeCoord from;
  NodeCoord to;
  Subnet subnet = Subnet::High;

  friend auto operator<=>(const Channel&, const Channel&) = default;
};

// Dense channel numbering: ((row_major(from) * 4 + port) * 2 + subnet).
inline int channel_index(const Channel& ch, const MeshConfig& mesh) {
  const int port = static_cast<int>(port_toward(ch.from, ch.to));
  return (row_major_index(ch.from, mesh) * kMeshPorts + port) * 2 +
         static_cast<int>(ch.subnet);
}

inline int channel_index_space(const MeshConfig& mesh) {
  return mesh.node_count() * kMeshPorts * 2;
}

inline Channel channel_from_index(int index, const MeshConfig& mesh) {
  const auto subnet = static_cast<Subnet>(index % 2);
  const int port = (index / 2) % kMeshPorts;
  const NodeCoord from = from_row_major(index / (2 * kMeshPorts), mesh);
  return Channel{from, step(from, static_cast<Port>(port)), subnet};
}

}  // namespace dpmnoc
