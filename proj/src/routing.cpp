#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "memchar/topology.hpp"

namespace memchar {

namespace {

std::pair<int, int> coord_of(const TopologyGraph& g, int n) {
  const auto& node = g.nodes.at(n);
  if (node.row < 0 || node.col < 0) throw ConfigError("node '" + node.id + "' has no grid coordinate");
  return {node.row, node.col};
}

bool transit_allowed(NodeRole r) {
  return r != NodeRole::core && r != NodeRole::memory_controller;
}

std::int64_t edge_weight(const TopologyGraph& g, LinkClass c) {
  // integer picoseconds keep tie detection exact
  return std::llround(g.link_cost_ns(c) * 1000.0);
}

}  // namespace

Route mesh_route(const TopologyGraph& g, int a, int b) {
  if (g.kind != GraphKind::mesh_2d) throw ConfigError("mesh_route needs a mesh_2d graph");
  const auto& na = g.nodes.at(a);
  const auto& nb = g.nodes.at(b);
  if (na.socket != nb.socket)
    throw ConfigError("mesh_route: '" + na.id + "' and '" + nb.id + "' are on different sockets");
  const auto& grid = g.grids.at(na.socket);
  auto [r, c] = coord_of(g, a);
  auto [r1, c1] = coord_of(g, b);
  Route out;
  auto step = [&](int nr, int nc) {
    out.push_back({grid.tile[r][c], grid.tile[nr][nc], LinkClass::mesh_hop});
    r = nr;
    c = nc;
  };
  while (r != r1) step(r + (r1 > r ? 1 : -1), c);
  while (c != c1) step(r, c + (c1 > c ? 1 : -1));
  return out;
}

Route if_path(const TopologyGraph& g, int a, int b) {
  if (g.kind != GraphKind::chiplet_if) throw ConfigError("if_path needs a chiplet_if graph");
  if (a == b) return {};
  using Key = std::pair<std::int64_t, int>;  // (cost, hops)
  const Key inf{std::numeric_limits<std::int64_t>::max(), 0};
  std::vector<Key> dist(g.nodes.size(), inf);
  std::priority_queue<std::pair<Key, int>, std::vector<std::pair<Key, int>>, std::greater<>> pq;
  dist[b] = {0, 0};
  pq.push({dist[b], b});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d != dist[u]) continue;
    if (u != b && !transit_allowed(g.nodes[u].role)) continue;
    for (int e : g.adjacency[u]) {
      int v = g.other_endpoint(e, u);
      Key nd{d.first + edge_weight(g, g.edges[e].cls), d.second + 1};
      if (nd < dist[v]) {
        dist[v] = nd;
        pq.push({nd, v});
      }
    }
  }
  if (dist[a] == inf) throw ConfigError("no path between '" + g.nodes[a].id + "' and '" + g.nodes[b].id + "'");

  Route out;
  int cur = a;
  while (cur != b) {
    int best = -1;
    int best_edge = -1;
    for (int e : g.adjacency[cur]) {
      int v = g.other_endpoint(e, cur);
      if (v != b && !transit_allowed(g.nodes[v].role)) continue;
      if (dist[v] == inf) continue;
      Key via{dist[v].first + edge_weight(g, g.edges[e].cls), dist[v].second + 1};
      if (via != dist[cur]) continue;
      if (best == -1 || g.nodes[v].id < g.nodes[best].id) {
        best = v;
        best_edge = e;
      }
    }
    out.push_back({cur, best, g.edges[best_edge].cls});
    cur = best;
  }
  return out;
}

Route route(const TopologyGraph& g, int a, int b) {
  if (g.kind == GraphKind::chiplet_if) return if_path(g, a, b);
  int sa = g.nodes.at(a).socket, sb = g.nodes.at(b).socket;
  if (sa == sb) return mesh_route(g, a, b);
  int ua = g.grids.at(sa).upi, ub = g.grids.at(sb).upi;
  if (ua == -1 || ub == -1) throw ConfigError("mesh sockets have no UPI tile");
  LinkClass cls = LinkClass::upi;
  bool linked = false;
  for (int e : g.adjacency[ua])
    if (g.other_endpoint(e, ua) == ub) {
      cls = g.edges[e].cls;
      linked = true;
    }
  if (!linked) throw ConfigError("UPI ports of the two sockets are not linked");
  Route out = mesh_route(g, a, ua);
  out.push_back({ua, ub, cls});
  Route tail = mesh_route(g, ub, b);
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

std::map<LinkClass, int> count_traversals(const Route& r) {
  std::map<LinkClass, int> out;
  for (const auto& h : r)
    if (h.cls != LinkClass::local) ++out[h.cls];
  return out;
}

int mesh_diameter(const TopologyGraph& g, int socket) {
  const auto& grid = g.grids.at(socket);
  std::vector<int> rows;
  for (int r = 0; r < grid.rows; ++r)
    if (std::find(grid.io_rows.begin(), grid.io_rows.end(), r) == grid.io_rows.end()) rows.push_back(r);
  int best = 0;
  for (int r0 : rows)
    for (int c0 = 0; c0 < grid.cols; ++c0)
      for (int r1 : rows)
        for (int c1 = 0; c1 < grid.cols; ++c1)
          best = std::max(best, static_cast<int>(mesh_route(g, grid.tile[r0][c0], grid.tile[r1][c1]).size()));
  return best;
}

std::vector<Placement> enumerate_placements(const TopologyGraph& g, PlacementScope scope, int anchor) {
  if (anchor < 0 || anchor >= g.core_count()) throw ConfigError("anchor core out of range");
  std::vector<Placement> out;
  auto first_core = [&](int numa) { return g.numa_nodes.at(numa).cores.front(); };
  switch (scope) {
    case PlacementScope::local:
      for (int c = 0; c < g.core_count(); ++c) out.push_back({c, c, g.core_numa[c]});
      break;
    case PlacementScope::same_ccx: {
      const auto& cores = g.l3_domains[g.core_l3[anchor]].cores;
      for (int r : cores)
        for (int o : cores) out.push_back({r, o, g.core_numa[o]});
      break;
    }
    case PlacementScope::same_ccd: {
      if (g.kind != GraphKind::chiplet_if) throw ConfigError("scope same_ccd needs a chiplet_if topology");
      const auto& ccd = g.ccds[g.l3_domains[g.core_l3[anchor]].ccd];
      for (int dr : ccd.l3_domains)
        for (int r : g.l3_domains[dr].cores)
          for (int dov : ccd.l3_domains)
            if (dov != dr)
              for (int o : g.l3_domains[dov].cores) out.push_back({r, o, g.core_numa[o]});
      break;
    }
    case PlacementScope::intra_socket:
      for (int o = 0; o < g.core_count(); ++o)
        if (g.core_socket(o) == g.core_socket(anchor)) out.push_back({anchor, o, g.core_numa[o]});
      break;
    case PlacementScope::inter_socket:
      if (g.socket_count < 2) throw ConfigError("scope inter_socket needs two sockets");
      for (const auto& rn : g.numa_nodes)
        for (const auto& hn : g.numa_nodes)
          if (rn.socket != hn.socket) out.push_back({first_core(rn.id), first_core(hn.id), hn.id});
      break;
    case PlacementScope::all_pairs:
      for (const auto& rn : g.numa_nodes)
        for (const auto& hn : g.numa_nodes) out.push_back({first_core(rn.id), first_core(hn.id), hn.id});
      break;
  }
  return out;
}

}  // namespace memchar
