#include "memchar/topology.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

namespace memchar {

using nlohmann::json;

std::string_view to_string(GraphKind k) { return k == GraphKind::chiplet_if ? "chiplet_if" : "mesh_2d"; }

std::string_view to_string(NodeRole r) {
  switch (r) {
    case NodeRole::core: return "core";
    case NodeRole::l3_domain: return "l3_domain";
    case NodeRole::if_switch: return "if_switch";
    case NodeRole::if_repeater: return "if_repeater";
    case NodeRole::memory_controller: return "memory_controller";
    case NodeRole::xgmi_port: return "xgmi_port";
    case NodeRole::upi_port: return "upi_port";
    case NodeRole::mesh_tile: return "mesh_tile";
  }
  return "?";
}

std::string_view to_string(LinkClass c) {
  switch (c) {
    case LinkClass::if_switch_hop: return "if_switch_hop";
    case LinkClass::if_repeater_hop: return "if_repeater_hop";
    case LinkClass::mesh_hop: return "mesh_hop";
    case LinkClass::xgmi: return "xgmi";
    case LinkClass::upi: return "upi";
    case LinkClass::local: return "local";
  }
  return "?";
}

std::string_view to_string(FreqDomain d) {
  switch (d) {
    case FreqDomain::core_clk: return "core";
    case FreqDomain::fclk: return "fclk";
    case FreqDomain::uncore_clk: return "uncore";
  }
  return "?";
}

LinkClass parse_link_class(std::string_view s) {
  for (auto c : kAllLinkClasses)
    if (to_string(c) == s) return c;
  throw ConfigError("unknown link class '" + std::string(s) + "'");
}

NodeRole parse_node_role(std::string_view s) {
  for (auto r : {NodeRole::core, NodeRole::l3_domain, NodeRole::if_switch, NodeRole::if_repeater,
                 NodeRole::memory_controller, NodeRole::xgmi_port, NodeRole::upi_port, NodeRole::mesh_tile})
    if (to_string(r) == s) return r;
  throw ConfigError("unknown node role '" + std::string(s) + "'");
}

std::string_view to_string(PlacementScope s) {
  switch (s) {
    case PlacementScope::local: return "local";
    case PlacementScope::same_ccx: return "same_ccx";
    case PlacementScope::same_ccd: return "same_ccd";
    case PlacementScope::intra_socket: return "intra_socket";
    case PlacementScope::inter_socket: return "inter_socket";
    case PlacementScope::all_pairs: return "all_pairs";
  }
  return "?";
}

PlacementScope parse_scope(std::string_view s) {
  for (auto v : {PlacementScope::local, PlacementScope::same_ccx, PlacementScope::same_ccd,
                 PlacementScope::intra_socket, PlacementScope::inter_socket, PlacementScope::all_pairs})
    if (to_string(v) == s) return v;
  throw ConfigError("unknown placement scope '" + std::string(s) + "'");
}

namespace {

FreqDomain parse_domain(std::string_view s) {
  if (s == "core") return FreqDomain::core_clk;
  if (s == "fclk") return FreqDomain::fclk;
  if (s == "uncore") return FreqDomain::uncore_clk;
  throw ConfigError("unknown frequency domain '" + std::string(s) + "'");
}

// "2@fclk"
LinkCost parse_cost(const std::string& text) {
  auto at = text.find('@');
  if (at == std::string::npos) throw ConfigError("link cost '" + text + "' is not of the form cycles@domain");
  LinkCost c;
  try {
    std::size_t used = 0;
    c.cycles = std::stod(text.substr(0, at), &used);
    if (used != at) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw ConfigError("link cost '" + text + "' has a malformed cycle count");
  }
  if (c.cycles < 0) throw ConfigError("link cost '" + text + "' is negative");
  c.domain = parse_domain(text.substr(at + 1));
  return c;
}

std::string format_number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string format_cost(const LinkCost& c) {
  return format_number(c.cycles) + "@" + std::string(to_string(c.domain));
}

FreqDomain domain_for(NodeRole r, GraphKind k) {
  switch (r) {
    case NodeRole::core: return FreqDomain::core_clk;
    case NodeRole::l3_domain: return k == GraphKind::chiplet_if ? FreqDomain::core_clk : FreqDomain::uncore_clk;
    case NodeRole::if_switch:
    case NodeRole::if_repeater:
    case NodeRole::xgmi_port: return FreqDomain::fclk;
    default: return k == GraphKind::chiplet_if ? FreqDomain::fclk : FreqDomain::uncore_clk;
  }
}

template <class T>
T req(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + ": field '" + key + "' has the wrong type");
  }
}

class Builder {
 public:
  explicit Builder(TopologyGraph& g) : g_(g) {}

  int add_node(TopoNode n) {
    if (g_.find_node(n.id)) throw ConfigError("duplicate node id '" + n.id + "'");
    n.frequency_domain = domain_for(n.role, g_.kind);
    g_.nodes.push_back(std::move(n));
    g_.adjacency.emplace_back();
    return static_cast<int>(g_.nodes.size()) - 1;
  }

  void add_edge(int a, int b, LinkClass c) {
    if (a == b) throw ConfigError("self loop on node '" + g_.nodes[a].id + "'");
    int e = static_cast<int>(g_.edges.size());
    g_.edges.push_back({a, b, c});
    g_.adjacency[a].push_back(e);
    g_.adjacency[b].push_back(e);
  }

  void add_core(int core, int node, int numa, int l3) {
    if (core < 0) throw ConfigError("negative core id");
    if (static_cast<std::size_t>(core) >= g_.core_node.size()) {
      g_.core_node.resize(core + 1, -1);
      g_.core_numa.resize(core + 1, -1);
      g_.core_l3.resize(core + 1, -1);
    }
    if (g_.core_node[core] != -1)
      throw ConfigError("core " + std::to_string(core) + " belongs to more than one NUMA node");
    g_.core_node[core] = node;
    g_.core_numa[core] = numa;
    g_.core_l3[core] = l3;
  }

  NumaInfo& numa(int id, int socket) {
    if (id < 0) throw ConfigError("negative NUMA id");
    if (static_cast<std::size_t>(id) >= g_.numa_nodes.size()) g_.numa_nodes.resize(id + 1, NumaInfo{-1, 0, -1, {}});
    auto& n = g_.numa_nodes[id];
    if (n.id != -1) throw ConfigError("NUMA node " + std::to_string(id) + " declared twice");
    n.id = id;
    n.socket = socket;
    return n;
  }

 private:
  TopologyGraph& g_;
};

void load_chiplet_socket(TopologyGraph& g, Builder& b, const json& sj, int socket) {
  std::string where = "socket " + std::to_string(socket);
  for (const auto& fj : req<json>(sj, "fabric", where)) {
    TopoNode n;
    n.id = req<std::string>(fj, "id", where + " fabric");
    n.role = parse_node_role(req<std::string>(fj, "role", n.id));
    if (n.role != NodeRole::if_switch && n.role != NodeRole::if_repeater && n.role != NodeRole::xgmi_port)
      throw ConfigError("fabric node '" + n.id + "' has role " + std::string(to_string(n.role)) +
                        ", expected if_switch, if_repeater or xgmi_port");
    n.socket = socket;
    b.add_node(n);
  }
  for (const auto& nj : req<json>(sj, "numa_nodes", where)) {
    int id = req<int>(nj, "id", where + " numa node");
    std::string nw = "NUMA node " + std::to_string(id);
    auto& info = b.numa(id, socket);
    if (nj.contains("memory_controller")) {
      const auto& mj = nj.at("memory_controller");
      TopoNode mc;
      mc.id = req<std::string>(mj, "id", nw + " memory_controller");
      mc.role = NodeRole::memory_controller;
      mc.socket = socket;
      mc.numa = id;
      int m = b.add_node(mc);
      b.add_edge(m, g.node_index(req<std::string>(mj, "attach", mc.id)), LinkClass::local);
      g.numa_nodes[id].memory_controller = m;
    }
    int ccd_local = 0;
    for (const auto& cj : req<json>(nj, "ccds", nw)) {
      CcdInfo ccd;
      ccd.index = static_cast<int>(g.ccds.size());
      ccd.numa = id;
      ccd.attach = g.node_index(req<std::string>(cj, "attach", nw + " ccd"));
      auto ccxs = req<std::vector<std::vector<int>>>(cj, "ccxs", nw + " ccd");
      if (ccxs.size() != 2)
        throw ConfigError(nw + " ccd " + std::to_string(ccd_local) + " has " + std::to_string(ccxs.size()) +
                          " CCXs, expected exactly 2");
      for (std::size_t x = 0; x < ccxs.size(); ++x) {
        if (ccxs[x].empty() || ccxs[x].size() > 4)
          throw ConfigError(nw + " ccd " + std::to_string(ccd_local) + " ccx " + std::to_string(x) + " has " +
                            std::to_string(ccxs[x].size()) + " cores, expected 1-4");
        L3DomainInfo dom;
        dom.index = static_cast<int>(g.l3_domains.size());
        dom.socket = socket;
        dom.numa = id;
        dom.ccd = ccd.index;
        TopoNode l3;
        l3.id = "l3." + std::to_string(dom.index);
        l3.role = NodeRole::l3_domain;
        l3.socket = socket;
        l3.numa = id;
        l3.ccd = ccd.index;
        l3.ccx = static_cast<int>(x);
        dom.node = b.add_node(l3);
        b.add_edge(dom.node, ccd.attach, LinkClass::local);
        int ci = 0;
        for (int core : ccxs[x]) {
          TopoNode c;
          c.id = "core" + std::to_string(core);
          c.role = NodeRole::core;
          c.socket = socket;
          c.numa = id;
          c.ccd = ccd.index;
          c.ccx = static_cast<int>(x);
          c.core_index = ci++;
          int cn = b.add_node(c);
          b.add_edge(cn, dom.node, LinkClass::local);
          b.add_core(core, cn, id, dom.index);
          dom.cores.push_back(core);
          info.cores.push_back(core);
        }
        ccd.l3_domains.push_back(dom.index);
        g.l3_domains.push_back(std::move(dom));
      }
      g.ccds.push_back(std::move(ccd));
      ++ccd_local;
    }
  }
  for (const auto& lj : sj.value("links", json::array())) {
    if (!lj.is_array() || lj.size() != 3) throw ConfigError(where + ": links entries must be [a, b, class]");
    int a = g.node_index(lj[0].get<std::string>());
    int c = g.node_index(lj[1].get<std::string>());
    b.add_edge(a, c, parse_link_class(lj[2].get<std::string>()));
  }
}

std::pair<int, int> parse_coord(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(where + ": coordinate must be [row, col]");
  return {j[0].get<int>(), j[1].get<int>()};
}

void load_mesh_socket(TopologyGraph& g, Builder& b, const json& sj, int socket) {
  std::string where = "socket " + std::to_string(socket);
  const auto& gj = req<json>(sj, "grid", where);
  MeshGrid grid;
  grid.rows = req<int>(gj, "rows", where + " grid");
  grid.cols = req<int>(gj, "cols", where + " grid");
  grid.io_rows = gj.value("io_rows", std::vector<int>{});
  grid.tokens = req<std::vector<std::vector<std::string>>>(gj, "tiles", where + " grid");
  if (grid.rows <= 0 || grid.cols <= 0) throw ConfigError(where + ": grid dimensions must be positive");
  if (static_cast<int>(grid.tokens.size()) != grid.rows) throw ConfigError(where + ": tile rows do not match 'rows'");
  for (const auto& row : grid.tokens)
    if (static_cast<int>(row.size()) != grid.cols) throw ConfigError(where + ": tile columns do not match 'cols'");

  std::string pfx = "s" + std::to_string(socket) + ".";
  grid.tile.assign(grid.rows, std::vector<int>(grid.cols, -1));
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c) {
      TopoNode t;
      t.id = pfx + "t" + std::to_string(r) + "." + std::to_string(c);
      t.role = NodeRole::mesh_tile;
      t.socket = socket;
      t.row = r;
      t.col = c;
      grid.tile[r][c] = b.add_node(t);
    }
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c) {
      if (r + 1 < grid.rows) b.add_edge(grid.tile[r][c], grid.tile[r + 1][c], LinkClass::mesh_hop);
      if (c + 1 < grid.cols) b.add_edge(grid.tile[r][c], grid.tile[r][c + 1], LinkClass::mesh_hop);
    }

  std::set<std::pair<int, int>> used;  // coordinates of core/cache/controller nodes
  auto claim = [&](int r, int c, const std::string& who) {
    if (r < 0 || r >= grid.rows || c < 0 || c >= grid.cols)
      throw ConfigError(who + " at (" + std::to_string(r) + "," + std::to_string(c) + ") lies outside the grid");
    if (!used.insert({r, c}).second)
      throw ConfigError("duplicate coordinate (" + std::to_string(r) + "," + std::to_string(c) + ") for " + who);
  };

  std::map<int, std::pair<int, int>> core_pos;
  std::set<std::pair<int, int>> mc_tokens;
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c) {
      const auto& tok = grid.tokens[r][c];
      if (tok == "X" || tok == "IO") continue;
      if (tok == "MC") {
        mc_tokens.insert({r, c});
        continue;
      }
      if (tok == "UPI") {
        if (grid.upi != -1) throw ConfigError(where + ": more than one UPI tile");
        TopoNode u;
        u.id = pfx + "upi";
        u.role = NodeRole::upi_port;
        u.socket = socket;
        u.row = r;
        u.col = c;
        claim(r, c, u.id);
        grid.upi = b.add_node(u);
        b.add_edge(grid.upi, grid.tile[r][c], LinkClass::local);
        continue;
      }
      int core = 0;
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), core);
      if (ec != std::errc{} || p != tok.data() + tok.size())
        throw ConfigError(where + ": unknown tile token '" + tok + "'");
      if (!core_pos.emplace(core, std::make_pair(r, c)).second)
        throw ConfigError(where + ": core " + tok + " placed on two tiles");
    }

  std::set<std::pair<int, int>> mc_seen;
  for (const auto& nj : req<json>(sj, "numa_nodes", where)) {
    int id = req<int>(nj, "id", where + " numa node");
    std::string nw = "NUMA node " + std::to_string(id);
    auto& info = b.numa(id, socket);
    L3DomainInfo dom;
    dom.index = static_cast<int>(g.l3_domains.size());
    dom.socket = socket;
    dom.numa = id;
    if (nj.contains("memory_controller")) {
      auto [r, c] = parse_coord(nj.at("memory_controller"), nw);
      if (!mc_tokens.count({r, c}))
        throw ConfigError(nw + ": memory_controller (" + std::to_string(r) + "," + std::to_string(c) +
                          ") is not an MC tile");
      mc_seen.insert({r, c});
      TopoNode mc;
      mc.id = pfx + "imc" + std::to_string(id);
      mc.role = NodeRole::memory_controller;
      mc.socket = socket;
      mc.numa = id;
      mc.row = r;
      mc.col = c;
      claim(r, c, mc.id);
      int m = b.add_node(mc);
      b.add_edge(m, grid.tile[r][c], LinkClass::local);
      g.numa_nodes[id].memory_controller = m;
    }
    if (nj.contains("l3_tile")) {
      auto [r, c] = parse_coord(nj.at("l3_tile"), nw);
      TopoNode l3;
      l3.id = "l3." + std::to_string(dom.index);
      l3.role = NodeRole::l3_domain;
      l3.socket = socket;
      l3.numa = id;
      l3.row = r;
      l3.col = c;
      claim(r, c, l3.id);
      dom.node = b.add_node(l3);
      b.add_edge(dom.node, grid.tile[r][c], LinkClass::local);
    }
    for (int core : req<std::vector<int>>(nj, "cores", nw)) {
      auto it = core_pos.find(core);
      if (it == core_pos.end()) throw ConfigError(nw + ": core " + std::to_string(core) + " has no tile");
      auto [r, c] = it->second;
      TopoNode cn;
      cn.id = "core" + std::to_string(core);
      cn.role = NodeRole::core;
      cn.socket = socket;
      cn.numa = id;
      cn.row = r;
      cn.col = c;
      claim(r, c, cn.id);
      int n = b.add_node(cn);
      b.add_edge(n, grid.tile[r][c], LinkClass::local);
      b.add_core(core, n, id, dom.index);
      dom.cores.push_back(core);
      info.cores.push_back(core);
      core_pos.erase(it);
    }
    g.l3_domains.push_back(std::move(dom));
  }
  if (!core_pos.empty())
    throw ConfigError(where + ": core " + std::to_string(core_pos.begin()->first) + " is not in any NUMA node");
  if (mc_seen.size() != mc_tokens.size()) throw ConfigError(where + ": MC tile not owned by any NUMA node");
  if (static_cast<int>(g.grids.size()) != socket) throw ConfigError("mesh sockets must be listed in id order");
  g.grids.push_back(std::move(grid));
}

void validate(const TopologyGraph& g) {
  if (g.nodes.empty()) throw ConfigError("topology has no nodes");
  for (std::size_t c = 0; c < g.core_node.size(); ++c)
    if (g.core_node[c] == -1) throw ConfigError("core ids are not contiguous: core " + std::to_string(c) + " missing");
  for (const auto& n : g.numa_nodes)
    if (n.id == -1) throw ConfigError("NUMA ids are not contiguous");
  for (const auto& e : g.edges) {
    auto ra = g.nodes[e.a].role, rb = g.nodes[e.b].role;
    if (ra == NodeRole::l3_domain && rb == NodeRole::l3_domain)
      throw ConfigError("direct L3-to-L3 edge between '" + g.nodes[e.a].id + "' and '" + g.nodes[e.b].id + "'");
    if (ra == NodeRole::core && rb == NodeRole::core)
      throw ConfigError("direct core-to-core edge between '" + g.nodes[e.a].id + "' and '" + g.nodes[e.b].id + "'");
    if (g.nodes[e.a].socket != g.nodes[e.b].socket && e.cls != LinkClass::xgmi && e.cls != LinkClass::upi)
      throw ConfigError("inter-socket edge '" + g.nodes[e.a].id + "'-'" + g.nodes[e.b].id +
                        "' must be of class xgmi or upi");
    if (g.kind == GraphKind::mesh_2d && (e.cls == LinkClass::if_switch_hop || e.cls == LinkClass::if_repeater_hop))
      throw ConfigError("IF link class used in a mesh graph");
  }
  for (const auto& [cls, cost] : g.link_costs)
    if (cls == LinkClass::if_switch_hop && cost.domain == FreqDomain::fclk && cost.cycles < 2)
      throw ConfigError("if_switch_hop must cost at least 2 FCLK cycles");
  std::vector<char> seen(g.nodes.size(), 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  while (!q.empty()) {
    int n = q.front();
    q.pop();
    for (int e : g.adjacency[n]) {
      int m = g.other_endpoint(e, n);
      if (!seen[m]) {
        seen[m] = 1;
        q.push(m);
      }
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (!seen[i]) throw ConfigError("topology is disconnected: node '" + g.nodes[i].id + "' unreachable");
  if (g.frequencies.core_mhz <= 0) throw ConfigError("frequencies.core_mhz must be positive");
}

}  // namespace

std::optional<int> TopologyGraph::find_node(const std::string& id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].id == id) return static_cast<int>(i);
  return std::nullopt;
}

int TopologyGraph::node_index(const std::string& id) const {
  auto n = find_node(id);
  if (!n) throw ConfigError("unknown node id '" + id + "'");
  return *n;
}

double TopologyGraph::domain_mhz(FreqDomain d) const {
  switch (d) {
    case FreqDomain::core_clk: return frequencies.core_mhz;
    case FreqDomain::fclk: return frequencies.fclk_mhz;
    case FreqDomain::uncore_clk: return frequencies.uncore_mhz;
  }
  return 0;
}

double TopologyGraph::link_cost_ns(LinkClass c) const {
  auto it = link_costs.find(c);
  if (it == link_costs.end() || it->second.cycles == 0) return 0;
  double mhz = domain_mhz(it->second.domain);
  if (mhz <= 0) throw ConfigError("link class " + std::string(to_string(c)) + " uses a domain without frequency");
  return it->second.cycles * 1000.0 / mhz;
}

int TopologyGraph::other_endpoint(int edge, int node) const {
  const auto& e = edges[edge];
  return e.a == node ? e.b : e.a;
}

bool TopologyGraph::operator==(const TopologyGraph& o) const {
  auto node_eq = [](const TopoNode& a, const TopoNode& b) {
    return a.id == b.id && a.role == b.role && a.socket == b.socket && a.numa == b.numa && a.ccd == b.ccd &&
           a.ccx == b.ccx && a.core_index == b.core_index && a.row == b.row && a.col == b.col &&
           a.frequency_domain == b.frequency_domain;
  };
  if (kind != o.kind || name != o.name || socket_count != o.socket_count || protocol != o.protocol) return false;
  if (frequencies.core_mhz != o.frequencies.core_mhz || frequencies.fclk_mhz != o.frequencies.fclk_mhz ||
      frequencies.uncore_mhz != o.frequencies.uncore_mhz ||
      frequencies.bandwidth_core_mhz != o.frequencies.bandwidth_core_mhz)
    return false;
  if (caches.l1_bytes != o.caches.l1_bytes || caches.l2_bytes != o.caches.l2_bytes ||
      caches.l3_bytes != o.caches.l3_bytes)
    return false;
  if (link_costs.size() != o.link_costs.size()) return false;
  for (const auto& [k, v] : link_costs) {
    auto it = o.link_costs.find(k);
    if (it == o.link_costs.end() || it->second.cycles != v.cycles || it->second.domain != v.domain) return false;
  }
  if (nodes.size() != o.nodes.size() || edges.size() != o.edges.size()) return false;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (!node_eq(nodes[i], o.nodes[i])) return false;
  auto key = [](const TopologyGraph& g, const Edge& e) {
    auto a = g.nodes[e.a].id, b = g.nodes[e.b].id;
    if (b < a) std::swap(a, b);
    return std::make_tuple(a, b, e.cls);
  };
  std::multiset<std::tuple<std::string, std::string, LinkClass>> ea, eb;
  for (const auto& e : edges) ea.insert(key(*this, e));
  for (const auto& e : o.edges) eb.insert(key(o, e));
  if (ea != eb) return false;
  return core_node == o.core_node && core_numa == o.core_numa && core_l3 == o.core_l3 &&
         latency_model_section == o.latency_model_section && bandwidth_section == o.bandwidth_section;
}

TopologyGraph load_topology(const json& doc) {
  if (!doc.is_object()) throw ConfigError("topology document must be an object");
  TopologyGraph g;
  auto kind = req<std::string>(doc, "kind", "topology");
  if (kind == "chiplet_if")
    g.kind = GraphKind::chiplet_if;
  else if (kind == "mesh_2d")
    g.kind = GraphKind::mesh_2d;
  else
    throw ConfigError("unknown topology kind '" + kind + "'");
  g.name = doc.value("name", std::string{});
  g.protocol = parse_protocol(doc.value("protocol", std::string(g.kind == GraphKind::chiplet_if ? "MOESI" : "MESIF")));

  const auto& fj = req<json>(doc, "frequencies", "topology");
  g.frequencies.core_mhz = req<double>(fj, "core_mhz", "frequencies");
  g.frequencies.fclk_mhz = fj.value("fclk_mhz", 0.0);
  g.frequencies.uncore_mhz = fj.value("uncore_mhz", 0.0);
  g.frequencies.bandwidth_core_mhz = fj.value("bandwidth_core_mhz", g.frequencies.core_mhz);

  if (doc.contains("caches")) {
    const auto& cj = doc.at("caches");
    g.caches.l1_bytes = cj.value("l1_bytes", std::uint64_t{0});
    g.caches.l2_bytes = cj.value("l2_bytes", std::uint64_t{0});
    g.caches.l3_bytes = cj.value("l3_bytes", std::uint64_t{0});
  }
  const json costs = req<json>(doc, "link_costs", "topology");
  for (const auto& [k, v] : costs.items()) g.link_costs[parse_link_class(k)] = parse_cost(v.get<std::string>());

  Builder b(g);
  const auto& sockets = req<json>(doc, "sockets", "topology");
  if (!sockets.is_array() || sockets.empty()) throw ConfigError("topology needs at least one socket");
  if (sockets.size() > 2) throw ConfigError("at most 2 sockets are supported");
  g.socket_count = static_cast<int>(sockets.size());
  for (std::size_t s = 0; s < sockets.size(); ++s) {
    int id = req<int>(sockets[s], "id", "socket");
    if (id != static_cast<int>(s)) throw ConfigError("socket ids must be 0..n-1 in order");
    if (g.kind == GraphKind::chiplet_if)
      load_chiplet_socket(g, b, sockets[s], id);
    else
      load_mesh_socket(g, b, sockets[s], id);
  }
  for (const auto& lj : doc.value("inter_socket_links", json::array())) {
    if (!lj.is_array() || lj.size() != 3) throw ConfigError("inter_socket_links entries must be [a, b, class]");
    int a = g.node_index(lj[0].get<std::string>());
    int c = g.node_index(lj[1].get<std::string>());
    b.add_edge(a, c, parse_link_class(lj[2].get<std::string>()));
  }
  g.latency_model_section = doc.value("latency_model", json());
  g.bandwidth_section = doc.value("bandwidth", json());
  validate(g);
  return g;
}

TopologyGraph load_topology_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open topology file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("topology file '" + path + "' is not valid JSON: " + e.what());
  }
  return load_topology(doc);
}

json serialize_topology(const TopologyGraph& g) {
  json doc;
  doc["schema"] = "memchar-topology/1";
  doc["name"] = g.name;
  doc["kind"] = std::string(to_string(g.kind));
  doc["protocol"] = std::string(to_string(g.protocol));
  doc["frequencies"] = {{"core_mhz", g.frequencies.core_mhz},
                        {"fclk_mhz", g.frequencies.fclk_mhz},
                        {"uncore_mhz", g.frequencies.uncore_mhz},
                        {"bandwidth_core_mhz", g.frequencies.bandwidth_core_mhz}};
  doc["caches"] = {{"l1_bytes", g.caches.l1_bytes}, {"l2_bytes", g.caches.l2_bytes}, {"l3_bytes", g.caches.l3_bytes}};
  json costs = json::object();
  for (const auto& [k, v] : g.link_costs) costs[std::string(to_string(k))] = format_cost(v);
  doc["link_costs"] = costs;

  auto is_fabric = [](NodeRole r) {
    return r == NodeRole::if_switch || r == NodeRole::if_repeater || r == NodeRole::xgmi_port;
  };
  json sockets = json::array();
  for (int s = 0; s < g.socket_count; ++s) {
    json sj;
    sj["id"] = s;
    json numas = json::array();
    for (const auto& n : g.numa_nodes) {
      if (n.socket != s) continue;
      json nj;
      nj["id"] = n.id;
      if (g.kind == GraphKind::chiplet_if) {
        if (n.memory_controller != -1) {
          int mc = n.memory_controller;
          int attach = -1;
          for (int e : g.adjacency[mc]) attach = g.other_endpoint(e, mc);
          nj["memory_controller"] = {{"id", g.nodes[mc].id}, {"attach", g.nodes[attach].id}};
        }
        json ccds = json::array();
        for (const auto& ccd : g.ccds) {
          if (ccd.numa != n.id) continue;
          json ccxs = json::array();
          for (int d : ccd.l3_domains) ccxs.push_back(g.l3_domains[d].cores);
          ccds.push_back({{"attach", g.nodes[ccd.attach].id}, {"ccxs", ccxs}});
        }
        nj["ccds"] = ccds;
      } else {
        if (n.memory_controller != -1) {
          const auto& mc = g.nodes[n.memory_controller];
          nj["memory_controller"] = {mc.row, mc.col};
        }
        for (const auto& d : g.l3_domains)
          if (d.numa == n.id && d.node != -1) nj["l3_tile"] = {g.nodes[d.node].row, g.nodes[d.node].col};
        nj["cores"] = n.cores;
      }
      numas.push_back(nj);
    }
    sj["numa_nodes"] = numas;
    if (g.kind == GraphKind::chiplet_if) {
      json fabric = json::array();
      for (const auto& n : g.nodes)
        if (n.socket == s && is_fabric(n.role))
          fabric.push_back({{"id", n.id}, {"role", std::string(to_string(n.role))}});
      sj["fabric"] = fabric;
      json links = json::array();
      for (const auto& e : g.edges) {
        const auto &a = g.nodes[e.a], &c = g.nodes[e.b];
        if (a.socket == s && c.socket == s && is_fabric(a.role) && is_fabric(c.role))
          links.push_back({a.id, c.id, std::string(to_string(e.cls))});
      }
      sj["links"] = links;
    } else {
      const auto& grid = g.grids[s];
      sj["grid"] = {{"rows", grid.rows}, {"cols", grid.cols}, {"io_rows", grid.io_rows}, {"tiles", grid.tokens}};
    }
    sockets.push_back(sj);
  }
  doc["sockets"] = sockets;
  json inter = json::array();
  for (const auto& e : g.edges)
    if (g.nodes[e.a].socket != g.nodes[e.b].socket)
      inter.push_back({g.nodes[e.a].id, g.nodes[e.b].id, std::string(to_string(e.cls))});
  doc["inter_socket_links"] = inter;
  if (!g.latency_model_section.is_null()) doc["latency_model"] = g.latency_model_section;
  if (!g.bandwidth_section.is_null()) doc["bandwidth"] = g.bandwidth_section;
  return doc;
}

}  // namespace memchar
