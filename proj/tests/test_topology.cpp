#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <queue>
#include <set>

#include "memchar/topology.hpp"

using namespace memchar;
using nlohmann::json;

namespace {

std::string fixture(const std::string& name) { return std::string(MEMCHAR_FIXTURES) + "/" + name; }

json read_json(const std::string& path) {
  std::ifstream in(path);
  return json::parse(in);
}

int mc_of(const TopologyGraph& g, int numa) { return g.numa_nodes[numa].memory_controller; }
int core_node(const TopologyGraph& g, int core) { return g.core_node[core]; }

int switch_hops(const TopologyGraph& g, int a, int b) {
  auto t = count_traversals(route(g, a, b));
  return t.count(LinkClass::if_switch_hop) ? t[LinkClass::if_switch_hop] : 0;
}

json grid_doc(int rows, int cols) {
  json tiles = json::array();
  std::vector<int> cores;
  for (int r = 0; r < rows; ++r) {
    json row = json::array();
    for (int c = 0; c < cols; ++c) {
      row.push_back(std::to_string(r * cols + c));
      cores.push_back(r * cols + c);
    }
    tiles.push_back(row);
  }
  return {{"kind", "mesh_2d"},
          {"frequencies", {{"core_mhz", 2000}, {"uncore_mhz", 2000}}},
          {"link_costs", {{"mesh_hop", "2@uncore"}}},
          {"sockets", {{{"id", 0},
                        {"grid", {{"rows", rows}, {"cols", cols}, {"tiles", tiles}}},
                        {"numa_nodes", {{{"id", 0}, {"cores", cores}}}}}}}};
}

// Shortest path length when only vertical moves are allowed before the first horizontal one.
int yx_bfs(int rows, int cols, int r0, int c0, int r1, int c1) {
  std::vector<int> dist(rows * cols * 2, -1);
  auto idx = [&](int r, int c, int ph) { return (r * cols + c) * 2 + ph; };
  std::queue<std::tuple<int, int, int>> q;
  dist[idx(r0, c0, 0)] = 0;
  q.push({r0, c0, 0});
  while (!q.empty()) {
    auto [r, c, ph] = q.front();
    q.pop();
    int d = dist[idx(r, c, ph)];
    if (r == r1 && c == c1) return d;
    std::vector<std::tuple<int, int, int>> next;
    if (ph == 0) {
      if (r > 0) next.push_back({r - 1, c, 0});
      if (r + 1 < rows) next.push_back({r + 1, c, 0});
    }
    if (c > 0) next.push_back({r, c - 1, 1});
    if (c + 1 < cols) next.push_back({r, c + 1, 1});
    for (auto [nr, nc, np] : next)
      if (dist[idx(nr, nc, np)] == -1) {
        dist[idx(nr, nc, np)] = d + 1;
        q.push({nr, nc, np});
      }
  }
  return -1;
}

}  // namespace

TEST(Topology, RomeFixtureShape) {
  auto g = load_topology_file(fixture("rome_2s.json"));
  EXPECT_EQ(g.kind, GraphKind::chiplet_if);
  EXPECT_EQ(g.core_count(), 128);
  EXPECT_EQ(g.socket_count, 2);
  EXPECT_EQ(g.numa_nodes.size(), 8u);
  EXPECT_EQ(g.l3_domains.size(), 32u);
  EXPECT_EQ(g.ccds.size(), 16u);
  for (const auto& d : g.l3_domains) EXPECT_EQ(d.cores.size(), 4u);
}

TEST(Topology, SingleCoreDegenerate) {
  auto g = load_topology_file(fixture("single_core.json"));
  EXPECT_EQ(g.core_count(), 1);
  int interconnect = 0;
  for (const auto& e : g.edges) interconnect += e.cls != LinkClass::local;
  EXPECT_EQ(interconnect, 0);
}

TEST(Topology, ClxFixtureShape) {
  auto g = load_topology_file(fixture("clx_2s.json"));
  EXPECT_EQ(g.kind, GraphKind::mesh_2d);
  EXPECT_EQ(g.core_count(), 40);
  for (int s = 0; s < 2; ++s) {
    int cores = 0, mcs = 0;
    for (const auto& n : g.nodes) {
      if (n.socket != s) continue;
      cores += n.role == NodeRole::core;
      mcs += n.role == NodeRole::memory_controller;
    }
    EXPECT_EQ(cores, 20);
    EXPECT_EQ(mcs, 2);
  }
  // SNCs split the socket by column halves
  for (int c = 0; c < 40; ++c) {
    const auto& n = g.nodes[g.core_node[c]];
    EXPECT_EQ(g.core_numa[c], 2 * n.socket + (n.col >= 3 ? 1 : 0)) << "core " << c;
  }
}

TEST(Topology, MeshRouteExamples) {
  auto g = load_topology_file(fixture("clx_2s.json"));
  const auto& grid = g.grids[0];
  EXPECT_TRUE(mesh_route(g, grid.tile[3][3], grid.tile[3][3]).empty());
  EXPECT_EQ(mesh_route(g, grid.tile[0][0], grid.tile[4][5]).size(), 9u);
  EXPECT_EQ(mesh_diameter(g, 0), 9);
  EXPECT_EQ(mesh_diameter(g, 1), 9);
  EXPECT_THROW(mesh_route(g, core_node(g, 0), core_node(g, 20)), ConfigError);
}

TEST(Topology, MeshRouteMatchesYxBfsOnAllGridsUpTo8x8) {
  for (int rows = 1; rows <= 8; ++rows)
    for (int cols = 1; cols <= 8; ++cols) {
      auto g = load_topology(grid_doc(rows, cols));
      const auto& grid = g.grids[0];
      for (int a = 0; a < rows * cols; ++a)
        for (int b = 0; b < rows * cols; ++b) {
          int r0 = a / cols, c0 = a % cols, r1 = b / cols, c1 = b % cols;
          auto rt = mesh_route(g, grid.tile[r0][c0], grid.tile[r1][c1]);
          ASSERT_EQ(static_cast<int>(rt.size()), yx_bfs(rows, cols, r0, c0, r1, c1));
          ASSERT_EQ(static_cast<int>(rt.size()), std::abs(r1 - r0) + std::abs(c1 - c0));
          ASSERT_EQ(rt.size(), mesh_route(g, grid.tile[r1][c1], grid.tile[r0][c0]).size());
          bool horizontal = false;
          for (const auto& h : rt) {
            bool is_h = g.nodes[h.from].row == g.nodes[h.to].row;
            ASSERT_FALSE(horizontal && !is_h) << "vertical move after horizontal";
            horizontal = horizontal || is_h;
          }
        }
    }
}

TEST(Topology, RomeLocalPathHasNoInterconnect) {
  auto g = load_topology_file(fixture("rome_2s.json"));
  auto rt = if_path(g, core_node(g, 0), g.l3_domains[g.core_l3[0]].node);
  EXPECT_TRUE(count_traversals(rt).empty());
}

TEST(Topology, RomeSwitchHopsFromNode0) {
  auto g = load_topology_file(fixture("rome_2s.json"));
  std::vector<int> expect = {0, 1, 3, 4};
  for (int n = 0; n < 4; ++n) EXPECT_EQ(switch_hops(g, core_node(g, 0), mc_of(g, n)), expect[n]) << "node " << n;
  EXPECT_EQ(switch_hops(g, mc_of(g, 1), mc_of(g, 2)), 4);
  EXPECT_EQ(switch_hops(g, mc_of(g, 1), mc_of(g, 3)), 3);
}

TEST(Topology, RomeInterSocketUsesOneXgmiAndMinimalSwitches) {
  auto g = load_topology_file(fixture("rome_2s.json"));
  int best = 1 << 30, worst = 0;
  for (int a = 0; a < 4; ++a)
    for (int b = 4; b < 8; ++b) {
      auto t = count_traversals(route(g, core_node(g, g.numa_nodes[a].cores[0]), mc_of(g, b)));
      EXPECT_EQ(t[LinkClass::xgmi], 1);
      best = std::min(best, t[LinkClass::if_switch_hop]);
      worst = std::max(worst, t[LinkClass::if_switch_hop]);
    }
  auto sw = [&](int a, int b) { return switch_hops(g, core_node(g, g.numa_nodes[a].cores[0]), mc_of(g, b)); };
  EXPECT_EQ(sw(0, 6), best);
  EXPECT_EQ(sw(2, 4), best);
  EXPECT_EQ(sw(1, 5), worst);
  EXPECT_EQ(sw(3, 7), worst);
  EXPECT_LT(best, worst);
}

TEST(Topology, RomePathsNeverBypassIoDie) {
  auto g = load_topology_file(fixture("rome_2s.json"));
  std::vector<int> ends;
  for (int c = 0; c < g.core_count(); c += 3) ends.push_back(core_node(g, c));
  for (const auto& n : g.numa_nodes) ends.push_back(n.memory_controller);
  for (int a : ends)
    for (int b : ends) {
      auto rt = route(g, a, b);
      auto back = route(g, b, a);
      auto ta = count_traversals(rt), tb = count_traversals(back);
      ASSERT_EQ(ta, tb);
      bool switch_seen = false;
      for (const auto& h : rt) {
        auto ra = g.nodes[h.from].role, rb = g.nodes[h.to].role;
        ASSERT_FALSE(ra == NodeRole::l3_domain && rb == NodeRole::l3_domain);
        ASSERT_FALSE(ra == NodeRole::core && rb == NodeRole::core);
        switch_seen = switch_seen || ra == NodeRole::if_switch || rb == NodeRole::if_switch;
      }
      const auto &na = g.nodes[a], &nb = g.nodes[b];
      if (na.role == NodeRole::core && nb.role == NodeRole::core && g.core_l3[std::stoi(na.id.substr(4))] !=
                                                                         g.core_l3[std::stoi(nb.id.substr(4))])
        ASSERT_TRUE(switch_seen) << na.id << " -> " << nb.id;
    }
}

TEST(Topology, ClxHopCountSymmetric) {
  auto g = load_topology_file(fixture("clx_2s.json"));
  for (int a = 0; a < 40; ++a)
    for (int b = 0; b < 40; ++b)
      ASSERT_EQ(route(g, core_node(g, a), core_node(g, b)).size(), route(g, core_node(g, b), core_node(g, a)).size());
}

TEST(Topology, SerializeRoundTripIsIdentity) {
  for (auto name : {"rome_2s.json", "clx_2s.json", "single_core.json"}) {
    auto g = load_topology_file(fixture(name));
    auto again = load_topology(serialize_topology(g));
    EXPECT_TRUE(g == again) << name;
    EXPECT_EQ(serialize_topology(again), serialize_topology(g)) << name;
  }
}

TEST(Topology, ValidationErrorsNameTheOffender) {
  auto doc = read_json(fixture("rome_2s.json"));
  auto bad = doc;
  bad["sockets"][0]["numa_nodes"][0]["ccds"][0]["ccxs"].push_back({200});
  try {
    load_topology(bad);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("expected exactly 2"), std::string::npos);
  }

  bad = doc;
  bad["sockets"][0]["links"] = json::array();
  try {
    load_topology(bad);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("disconnected"), std::string::npos);
  }

  auto clx = read_json(fixture("clx_2s.json"));
  clx["sockets"][0]["numa_nodes"][0]["l3_tile"] = {1, 0};  // core 0 sits there
  try {
    load_topology(clx);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate coordinate"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("core0"), std::string::npos);
  }

  auto missing = doc;
  missing.erase("kind");
  EXPECT_THROW(load_topology(missing), ConfigError);
}

TEST(Topology, EnumeratePlacements) {
  auto g = load_topology_file(fixture("rome_2s.json"));
  auto ccx = enumerate_placements(g, PlacementScope::same_ccx);
  ASSERT_EQ(ccx.size(), 16u);
  EXPECT_EQ(ccx.front(), (Placement{0, 0, 0}));
  EXPECT_EQ(ccx.back(), (Placement{3, 3, 0}));
  for (const auto& p : enumerate_placements(g, PlacementScope::local)) EXPECT_EQ(p.requester, p.owner);
  auto all = enumerate_placements(g, PlacementScope::all_pairs);
  EXPECT_EQ(all.size(), 64u);
  std::set<std::pair<int, int>> node_pairs;
  for (const auto& p : all) node_pairs.insert({g.core_numa[p.requester], p.home});
  EXPECT_EQ(node_pairs.size(), 64u);
  EXPECT_EQ(enumerate_placements(g, PlacementScope::inter_socket).size(), 32u);
  EXPECT_EQ(enumerate_placements(g, PlacementScope::same_ccd).size(), 32u);
  EXPECT_EQ(enumerate_placements(g, PlacementScope::all_pairs), all);

  auto clx = load_topology_file(fixture("clx_2s.json"));
  EXPECT_EQ(enumerate_placements(clx, PlacementScope::same_ccx).size(), 100u);
  EXPECT_THROW(enumerate_placements(clx, PlacementScope::same_ccd), ConfigError);
}
