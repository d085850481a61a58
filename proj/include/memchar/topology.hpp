#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "memchar/types.hpp"

namespace memchar {

enum class GraphKind { chiplet_if, mesh_2d };
enum class NodeRole { core, l3_domain, if_switch, if_repeater, memory_controller, xgmi_port, upi_port, mesh_tile };
enum class LinkClass { if_switch_hop, if_repeater_hop, mesh_hop, xgmi, upi, local };
enum class FreqDomain { core_clk, fclk, uncore_clk };

inline constexpr std::array<LinkClass, 6> kAllLinkClasses = {
    LinkClass::if_switch_hop, LinkClass::if_repeater_hop, LinkClass::mesh_hop,
    LinkClass::xgmi, LinkClass::upi, LinkClass::local};

std::string_view to_string(GraphKind k);
std::string_view to_string(NodeRole r);
std::string_view to_string(LinkClass c);
std::string_view to_string(FreqDomain d);
LinkClass parse_link_class(std::string_view s);
NodeRole parse_node_role(std::string_view s);

struct TopoNode {
  std::string id;
  NodeRole role = NodeRole::core;
  int socket = 0;
  // chiplet scope; -1 where not applicable
  int numa = -1;
  int ccd = -1;
  int ccx = -1;
  int core_index = -1;
  // mesh scope
  int row = -1;
  int col = -1;
  FreqDomain frequency_domain = FreqDomain::core_clk;
};

struct Edge {
  int a = 0;
  int b = 0;
  LinkClass cls = LinkClass::local;
};

struct LinkCost {
  double cycles = 0;
  FreqDomain domain = FreqDomain::core_clk;
};

struct Frequencies {
  double core_mhz = 0;
  double fclk_mhz = 0;
  double uncore_mhz = 0;
  double bandwidth_core_mhz = 0;  // operator-pinned clock used for bandwidth runs
  bool operator==(const Frequencies&) const = default;
};

struct CacheSizes {
  std::uint64_t l1_bytes = 0;
  std::uint64_t l2_bytes = 0;
  std::uint64_t l3_bytes = 0;  // per L3 domain
};

struct NumaInfo {
  int id = 0;
  int socket = 0;
  int memory_controller = -1;  // node index, -1 if none
  std::vector<int> cores;
};

struct L3DomainInfo {
  int index = 0;
  int node = -1;  // node index, -1 if the domain has no fabric anchor
  int socket = 0;
  int numa = 0;
  int ccd = -1;  // global CCD index (chiplet only)
  std::vector<int> cores;
};

struct CcdInfo {
  int index = 0;
  int numa = 0;
  int attach = -1;  // fabric node the CCD's IFOP link lands on
  std::vector<int> l3_domains;
};

struct MeshGrid {
  int rows = 0;
  int cols = 0;
  std::vector<int> io_rows;
  std::vector<std::vector<std::string>> tokens;  // as written in the document
  std::vector<std::vector<int>> tile;            // node index per (row, col)
  int upi = -1;                                  // upi port node, -1 if none
};

struct Hop {
  int from = 0;
  int to = 0;
  LinkClass cls = LinkClass::local;
};
using Route = std::vector<Hop>;

struct Placement {
  int requester = 0;
  int owner = 0;
  int home = 0;
  bool operator==(const Placement&) const = default;
};

enum class PlacementScope { local, same_ccx, same_ccd, intra_socket, inter_socket, all_pairs };
std::string_view to_string(PlacementScope s);
PlacementScope parse_scope(std::string_view s);

class TopologyGraph {
 public:
  GraphKind kind = GraphKind::chiplet_if;
  std::string name;
  int socket_count = 0;
  Frequencies frequencies;
  CacheSizes caches;
  Protocol protocol = Protocol::MOESI;
  std::map<LinkClass, LinkCost> link_costs;

  std::vector<TopoNode> nodes;
  std::vector<Edge> edges;
  std::vector<std::vector<int>> adjacency;  // edge indices per node

  std::vector<NumaInfo> numa_nodes;       // indexed by NUMA id
  std::vector<L3DomainInfo> l3_domains;   // indexed by domain index
  std::vector<CcdInfo> ccds;              // chiplet only
  std::vector<MeshGrid> grids;            // mesh only, per socket

  // per core id
  std::vector<int> core_node;
  std::vector<int> core_numa;
  std::vector<int> core_l3;

  // Sections owned by other modules, carried through load/serialize untouched.
  nlohmann::json latency_model_section;
  nlohmann::json bandwidth_section;

  int core_count() const { return static_cast<int>(core_node.size()); }
  int core_socket(int core) const { return nodes[core_node.at(core)].socket; }
  std::optional<int> find_node(const std::string& id) const;
  int node_index(const std::string& id) const;  // throws ConfigError
  double link_cost_ns(LinkClass c) const;
  double domain_mhz(FreqDomain d) const;
  int other_endpoint(int edge, int node) const;

  bool operator==(const TopologyGraph& o) const;
};

TopologyGraph load_topology(const nlohmann::json& doc);
TopologyGraph load_topology_file(const std::string& path);
nlohmann::json serialize_topology(const TopologyGraph& g);

// Y-then-X route between the tiles hosting a and b (same socket).
Route mesh_route(const TopologyGraph& g, int a, int b);
// Minimum-cost path over the fabric; ties go to the lexicographically smaller node id.
Route if_path(const TopologyGraph& g, int a, int b);
// Dispatches on graph kind; mesh routes cross sockets through the UPI tiles.
Route route(const TopologyGraph& g, int a, int b);

std::map<LinkClass, int> count_traversals(const Route& r);

// Largest YX distance between core-area tiles (I/O rows excluded).
int mesh_diameter(const TopologyGraph& g, int socket);

std::vector<Placement> enumerate_placements(const TopologyGraph& g, PlacementScope scope, int anchor_core = 0);

}  // namespace memchar
