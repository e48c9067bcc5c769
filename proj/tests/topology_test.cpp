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

#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "dpmnoc/channel_graph.hpp"
#include "dpmnoc/topology.hpp"

namespace dpmnoc {
namespace {

const MeshConfig k8{8, 8};

TEST(Topology, LabelOf) {
  EXPECT_EQ(label_of({0, 0}, k8).value, 0);
  EXPECT_EQ(label_of({2, 1}, k8).value, 13);
  EXPECT_EQ(label_of({7, 7}, k8).value, 56);
  EXPECT_THROW(label_of({8, 0}, k8), std::domain_error);
  EXPECT_THROW(label_of({0, -1}, k8), std::domain_error);
}

TEST(Topology, CoordOf) {
  EXPECT_EQ(coord_of(NodeLabel{0}, k8), (NodeCoord{0, 0}));
  EXPECT_EQ(coord_of(NodeLabel{13}, k8), (NodeCoord{2, 1}));
  EXPECT_EQ(coord_of(NodeLabel{63}, k8), (NodeCoord{0, 7}));
  EXPECT_THROW(coord_of(NodeLabel{64}, k8), std::domain_error);
  EXPECT_THROW(coord_of(NodeLabel{-1}, k8), std::domain_error);
}

TEST(Topology, LabelingIsABijectionAlongTheSnake) {
  for (int w = 2; w <= 16; ++w) {
    for (int h = 2; h <= 16; ++h) {
      const MeshConfig mesh{w, h};
      std::set<int> labels;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const NodeLabel l = label_of({x, y}, mesh);
          labels.insert(l.value);
          ASSERT_EQ(coord_of(l, mesh), (NodeCoord{x, y}));
        }
      ASSERT_EQ(static_cast<int>(labels.size()), w * h);
      ASSERT_EQ(*labels.begin(), 0);
      ASSERT_EQ(*labels.rbegin(), w * h - 1);
      for (int v = 0; v + 1 < w * h; ++v) {
        ASSERT_TRUE(adjacent(coord_of(NodeLabel{v}, mesh), coord_of(NodeLabel{v + 1}, mesh)))
            << w << "x" << h << " label " << v;
      }
    }
  }
}

TEST(Topology, Neighbors) {
  auto sorted = [](std::vector<NodeCoord> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  EXPECT_EQ(sorted(neighbors({0, 0}, k8)), (std::vector<NodeCoord>{{0, 1}, {1, 0}}));
  EXPECT_EQ(sorted(neighbors({3, 0}, k8)), (std::vector<NodeCoord>{{2, 0}, {3, 1}, {4, 0}}));
  EXPECT_EQ(neighbors({3, 3}, k8).size(), 4u);
  for (const NodeCoord& n : neighbors({3, 3}, k8)) EXPECT_EQ(manhattan(n, {3, 3}), 1);
  EXPECT_THROW(neighbors({9, 9}, k8), std::domain_error);
}

TEST(Topology, ChannelSubnet) {
  const MeshConfig m3{3, 3};
  EXPECT_EQ(channel_subnet({0, 0}, {1, 0}, m3), Subnet::High);
  EXPECT_EQ(channel_subnet({1, 0}, {0, 0}, m3), Subnet::Low);
  EXPECT_EQ(channel_subnet({2, 1}, {2, 0}, m3), Subnet::Low);
  EXPECT_THROW(channel_subnet({0, 0}, {2, 0}, m3), std::domain_error);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      for (const NodeCoord& n : neighbors({x, y}, k8)) {
        EXPECT_NE(channel_subnet({x, y}, n, k8), channel_subnet(n, {x, y}, k8));
      }
}

TEST(Topology, ChannelIndexRoundTrip) {
  const MeshConfig mesh{5, 3};
  for (int i = 0; i < mesh.node_count(); ++i) {
    const NodeCoord c = from_row_major(i, mesh);
    for (const NodeCoord& n : neighbors(c, mesh)) {
      for (Subnet s : {Subnet::High, Subnet::Low}) {
        const Channel ch{c, n, s};
        EXPECT_EQ(channel_from_index(channel_index(ch, mesh), mesh), ch);
      }
    }
  }
}

TEST(Topology, RejectsDegenerateMesh) {
  EXPECT_THROW((MeshConfig{1, 8}.validate()), std::invalid_argument);
  EXPECT_NO_THROW((MeshConfig{2, 3}.validate()));
}

// ---------------------------------------------------------------------------
// Channel dependency graphs.

TEST(ChannelGraph, HamiltonianRelationIsAcyclic) {
  for (int n = 2; n <= 8; ++n) {
    const MeshConfig mesh{n, n};
    const auto g = channel_dependency_graph(mesh, HamiltonianRelation(mesh));
    EXPECT_TRUE(g.acyclic) << n << "x" << n;
    EXPECT_TRUE(g.witness.empty());
  }
  const MeshConfig m3{3, 3};
  const auto g3 = channel_dependency_graph(m3, HamiltonianRelation(m3));
  // 12 undirected links, each used in exactly one direction per subnet.
  EXPECT_EQ(g3.channel_count(), 24);
}

TEST(ChannelGraph, RectangularMeshesAreAcyclic) {
  for (auto [w, h] : {std::pair{3, 5}, {6, 2}, {7, 4}}) {
    const MeshConfig mesh{w, h};
    EXPECT_TRUE(channel_dependency_graph(mesh, HamiltonianRelation(mesh)).acyclic);
  }
}

TEST(ChannelGraph, AllTurnsHasFourChannelCycle) {
  const MeshConfig m3{3, 3};
  const auto g = channel_dependency_graph(m3, AllTurnsRelation(m3));
  ASSERT_FALSE(g.acyclic);
  ASSERT_EQ(g.witness.size(), 4u);
  for (std::size_t i = 0; i < g.witness.size(); ++i) {
    const Channel& a = g.witness[i];
    const Channel& b = g.witness[(i + 1) % g.witness.size()];
    EXPECT_EQ(a.to, b.from);
  }
}

TEST(ChannelGraph, HighSubnetEdgesOnlyClimb) {
  const MeshConfig m4{4, 4};
  const auto g = channel_dependency_graph(m4, HamiltonianRelation(m4));
  for (int c = 0; c < static_cast<int>(g.successors.size()); ++c) {
    const Channel a = channel_from_index(c, m4);
    for (int n : g.successors[c]) {
      const Channel b = channel_from_index(n, m4);
      EXPECT_EQ(a.subnet, b.subnet);
      EXPECT_EQ(channel_subnet(b.from, b.to, m4), b.subnet);
    }
  }
}

TEST(ChannelGraph, XYApproachVerdictIsComputed) {
  // Whatever the verdict, a cyclic graph must come with a closed witness.
  for (int n = 3; n <= 5; ++n) {
    const MeshConfig mesh{n, n};
    const auto g = channel_dependency_graph(mesh, HamiltonianRelation(mesh, true));
    if (!g.acyclic) {
      ASSERT_FALSE(g.witness.empty());
      EXPECT_EQ(g.witness.back().to, g.witness.front().from);
    }
  }
}

}  // namespace
}  // namespace dpmnoc
