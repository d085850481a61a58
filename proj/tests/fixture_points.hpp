#pragma once

#include <set>
#include <tuple>
#include <vector>

#include "memchar/harness.hpp"

namespace memchar::fixture {

// Placements anchored at core 0 over every scope the topology supports.
inline std::vector<Placement> anchor_placements(const TopologyGraph& g) {
  std::vector<Placement> out;
  std::set<std::tuple<int, int, int>> seen;
  auto add = [&](const Placement& p) {
    if (seen.insert({p.requester, p.owner, p.home}).second) out.push_back(p);
  };
  add({0, 0, g.core_numa.at(0)});
  for (auto s : {PlacementScope::same_ccx, PlacementScope::same_ccd, PlacementScope::intra_socket,
                 PlacementScope::inter_socket}) {
    std::vector<Placement> ps;
    try {
      ps = enumerate_placements(g, s, 0);
    } catch (const ConfigError&) {
      continue;  // scope does not exist on this topology
    }
    for (const auto& p : ps) add(p);
  }
  return out;
}

inline std::vector<LatencyPoint> anchor_points(const TopologyGraph& g) {
  std::vector<LatencyPoint> out;
  for (const auto& p : anchor_placements(g))
    for (auto s : {CoherenceState::M, CoherenceState::O, CoherenceState::E, CoherenceState::S, CoherenceState::F,
                   CoherenceState::I}) {
      if (!state_valid_for(s, g.protocol)) continue;
      for (auto l : {CacheLevel::L1, CacheLevel::L2, CacheLevel::L3, CacheLevel::RAM}) out.push_back({p, s, l});
    }
  return out;
}

inline LatencyQuery query_for(const LatencyPoint& pt) {
  LatencyQuery q{pt.placement.requester, pt.placement.home, std::nullopt, pt.state, pt.level};
  if (pt.placement.owner != pt.placement.requester) q.forwarder = pt.placement.owner;
  return q;
}

}  // namespace memchar::fixture
