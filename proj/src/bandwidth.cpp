#include "memchar/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace memchar {

std::string_view to_string(IsaWidth w) {
  switch (w) {
    case IsaWidth::w128: return "w128";
    case IsaWidth::w256: return "w256";
    case IsaWidth::w512: return "w512";
  }
  return "?";
}

IsaWidth parse_width(std::string_view s) {
  if (s == "w128") return IsaWidth::w128;
  if (s == "w256") return IsaWidth::w256;
  if (s == "w512") return IsaWidth::w512;
  throw ConfigError("unknown vector width '" + std::string(s) + "'");
}

std::size_t ThroughputKernel::bytes_per_iteration() const {
  std::size_t bits = isa_width == IsaWidth::w128 ? 128 : isa_width == IsaWidth::w256 ? 256 : 512;
  return bits / 8 * static_cast<std::size_t>(burst_registers);
}

ThroughputKernel ThroughputKernel::for_width(IsaWidth w) {
  switch (w) {
    case IsaWidth::w128: return {w, 8};
    case IsaWidth::w256: return {w, 16};
    case IsaWidth::w512: return {w, 32};
  }
  return {};
}

kernels::Isa ThroughputKernel::isa() const {
  switch (isa_width) {
    case IsaWidth::w128: return kernels::Isa::sse;
    case IsaWidth::w256: return kernels::Isa::avx2;
    case IsaWidth::w512: return kernels::Isa::avx512;
  }
  return kernels::Isa::scalar;
}

KernelChoice parse_kernel_name(std::string_view s) {
  if (s == "read128") return {false, false, IsaWidth::w128};
  if (s == "read256") return {false, false, IsaWidth::w256};
  if (s == "read512") return {false, false, IsaWidth::w512};
  if (s == "triad") return {true, false, IsaWidth::w256};
  if (s == "triad-nt") return {true, true, IsaWidth::w256};
  throw ConfigError("unknown kernel '" + std::string(s) + "' (read128, read256, read512, triad, triad-nt)");
}

std::string kernel_name(const KernelChoice& k) {
  if (k.triad) return k.nontemporal ? "triad-nt" : "triad";
  return k.width == IsaWidth::w128 ? "read128" : k.width == IsaWidth::w256 ? "read256" : "read512";
}

void set_from_cycles(BandwidthRecord& r, double bytes, double cycles, double freq_mhz) {
  if (!(cycles > 0)) throw BackendError("elapsed cycles must be positive");
  if (!(freq_mhz > 0)) throw ConfigError("frequency must be positive");
  r.bytes_moved = bytes;
  r.elapsed_cycles = cycles;
  r.frequency_mhz = freq_mhz;
  r.bytes_per_cycle = bytes / cycles;
  r.bandwidth_gbps = r.bytes_per_cycle * freq_mhz / 1000.0;
}

void set_from_rate(BandwidthRecord& r, double bytes, double bytes_per_cycle, double freq_mhz) {
  if (!(bytes_per_cycle > 0)) throw BackendError("bandwidth must be positive");
  if (!(freq_mhz > 0)) throw ConfigError("frequency must be positive");
  r.bytes_moved = bytes;
  r.elapsed_cycles = bytes / bytes_per_cycle;
  r.frequency_mhz = freq_mhz;
  r.bytes_per_cycle = bytes_per_cycle;
  r.bandwidth_gbps = bytes_per_cycle * freq_mhz / 1000.0;
}

CacheLevel classify_level(const TopologyGraph& g, std::uint64_t footprint, const std::vector<int>& set, int core) {
  const auto& c = g.caches;
  if (footprint <= c.l1_bytes) return CacheLevel::L1;
  if (footprint <= c.l2_bytes) return CacheLevel::L2;
  std::uint64_t sharing = 0;
  for (int k : set) sharing += g.core_l3.at(k) == g.core_l3.at(core);
  if (sharing == 0) sharing = 1;
  if (footprint <= c.l3_bytes / sharing) return CacheLevel::L3;
  return CacheLevel::RAM;
}

std::vector<std::uint64_t> preset_sizes(const TopologyGraph& g, CacheLevel level) {
  const auto& c = g.caches;
  std::uint64_t cap = level == CacheLevel::L1 ? c.l1_bytes : level == CacheLevel::L2 ? c.l2_bytes : c.l3_bytes;
  if (cap == 0) throw ConfigError("cache size for " + std::string(to_string(level)) + " is unknown");
  if (level == CacheLevel::RAM) return {2 * cap, 4 * cap, 8 * cap, 16 * cap};
  return {cap / 4, cap / 2, cap, 2 * cap};
}

void validate_core_set(const TopologyGraph& g, const std::vector<int>& cores, bool single_node) {
  if (cores.empty()) throw ConfigError("core set is empty");
  std::set<int> seen;
  for (int k : cores) {
    if (k < 0 || k >= g.core_count()) throw ConfigError("core " + std::to_string(k) + " out of range");
    if (!seen.insert(k).second) throw ConfigError("core " + std::to_string(k) + " listed twice");
  }
  if (!single_node) return;
  for (int k : cores) {
    if (g.core_socket(k) != g.core_socket(cores[0]))
      throw ConfigError("core set crosses sockets in single-node mode");
    if (g.core_numa[k] != g.core_numa[cores[0]])
      throw ConfigError("core set spans NUMA nodes in single-node mode");
  }
}

BandwidthRecord run_throughput(const ThroughputKernel& k, std::uint64_t dataset_bytes, const std::vector<int>& cores,
                               const BandwidthPolicy& policy, BandwidthBackend& backend) {
  return backend.run_throughput(k, dataset_bytes, cores, policy);
}

BandwidthRecord run_triad(std::uint64_t array_bytes, const std::vector<int>& cores, bool nontemporal,
                          const BandwidthPolicy& policy, BandwidthBackend& backend) {
  return backend.run_triad(array_bytes, cores, nontemporal, policy);
}

BandwidthTables BandwidthTables::from_topology(const TopologyGraph& g) {
  BandwidthTables t;
  const auto& j = g.bandwidth_section;
  if (j.is_null()) return t;
  auto levels = [](const nlohmann::json& o, const std::string& where) {
    std::map<CacheLevel, double> out;
    for (auto& [k, v] : o.items()) {
      if (!v.is_number() || v.get<double>() <= 0) throw ConfigError(where + "." + k + ": expected a positive number");
      out[parse_level(k)] = v.get<double>();
    }
    return out;
  };
  if (j.contains("read"))
    for (auto& [w, o] : j["read"].items()) t.read[parse_width(w)] = levels(o, "bandwidth.read." + w);
  if (j.contains("triad")) t.triad = levels(j["triad"], "bandwidth.triad");
  if (j.contains("caps"))
    for (auto& [kind, scopes] : j["caps"].items()) {
      if (kind != "read" && kind != "triad") throw ConfigError("bandwidth.caps: unknown kind '" + kind + "'");
      for (auto& [scope, o] : scopes.items()) {
        if (scope != "l3_domain" && scope != "ccd" && scope != "numa_node")
          throw ConfigError("bandwidth.caps." + kind + ": unknown scope '" + scope + "'");
        t.caps[kind][scope] = levels(o, "bandwidth.caps." + kind + "." + scope);
      }
    }
  return t;
}

double aggregate_rate(const TopologyGraph& g, const BandwidthTables& t, const std::string& kind,
                      const std::vector<int>& cores, const std::vector<CacheLevel>& levels,
                      const std::vector<double>& per_core) {
  auto cap_of = [&](const char* scope, CacheLevel l) -> std::optional<double> {
    auto k = t.caps.find(kind);
    if (k == t.caps.end()) return std::nullopt;
    auto s = k->second.find(scope);
    if (s == k->second.end()) return std::nullopt;
    auto v = s->second.find(l);
    if (v == s->second.end()) return std::nullopt;
    return v->second;
  };
  // (domain, level) -> rate, then (ccd, level), then (numa, level)
  std::map<std::pair<int, CacheLevel>, double> dom;
  for (std::size_t i = 0; i < cores.size(); ++i) dom[{g.core_l3.at(cores[i]), levels[i]}] += per_core[i];
  std::map<std::pair<int, CacheLevel>, double> ccd;
  for (auto& [key, v] : dom) {
    double r = v;
    if (auto c = cap_of("l3_domain", key.second)) r = std::min(r, *c);
    const auto& d = g.l3_domains.at(key.first);
    // Without CCDs every domain stands alone at this step.
    ccd[{d.ccd >= 0 ? d.ccd : -1 - d.index, key.second}] += r;
  }
  std::map<std::pair<int, CacheLevel>, double> node;
  for (auto& [key, v] : ccd) {
    double r = v;
    if (key.first >= 0)
      if (auto c = cap_of("ccd", key.second)) r = std::min(r, *c);
    int numa = key.first >= 0 ? g.ccds.at(key.first).numa : g.l3_domains.at(-1 - key.first).numa;
    node[{numa, key.second}] += r;
  }
  double total = 0;
  for (auto& [key, v] : node) {
    double r = v;
    if (auto c = cap_of("numa_node", key.second)) r = std::min(r, *c);
    total += r;
  }
  return total;
}

namespace {

std::uint64_t passes_for(const BandwidthPolicy& p, std::uint64_t bytes) {
  if (p.passes > 0) return static_cast<std::uint64_t>(p.passes);
  return std::max<std::uint64_t>(1, (p.min_bytes + bytes - 1) / bytes);
}

double bandwidth_mhz(const TopologyGraph& g, const BandwidthPolicy& p) {
  if (p.frequency_mhz) return *p.frequency_mhz;
  if (g.frequencies.bandwidth_core_mhz > 0) return g.frequencies.bandwidth_core_mhz;
  return g.frequencies.core_mhz;
}

CacheLevel outermost(const std::vector<CacheLevel>& ls) { return *std::max_element(ls.begin(), ls.end()); }

}  // namespace

SimulatedBandwidth::SimulatedBandwidth(const TopologyGraph& g) : g_(g), t_(BandwidthTables::from_topology(g)) {}

BandwidthRecord SimulatedBandwidth::run_throughput(const ThroughputKernel& k, std::uint64_t dataset_bytes,
                                                   const std::vector<int>& cores, const BandwidthPolicy& policy) {
  if (dataset_bytes == 0) throw ConfigError("dataset size must be positive");
  validate_core_set(g_, cores, policy.single_node);
  if (t_.read.empty()) throw ConfigError("topology has no read bandwidth table");
  BandwidthRecord r;
  r.kernel = kernel_name({false, false, k.isa_width});
  IsaWidth used = k.isa_width;
  if (!t_.read.count(used)) {
    // Widest narrower width the table has, else the narrowest wider one.
    auto it = t_.read.lower_bound(used);
    used = it == t_.read.begin() ? it->first : std::prev(it)->first;
    r.degraded = true;
  }
  r.kernel_used = kernel_name({false, false, used});
  r.dataset_bytes = dataset_bytes;
  r.core_set = cores;
  r.backend = BackendKind::simulated;
  std::vector<CacheLevel> levels;
  std::vector<double> rates;
  for (int c : cores) {
    auto l = classify_level(g_, dataset_bytes, cores, c);
    auto it = t_.read.at(used).find(l);
    if (it == t_.read.at(used).end())
      throw ConfigError("no read bandwidth for " + std::string(to_string(used)) + " at " + std::string(to_string(l)));
    levels.push_back(l);
    rates.push_back(it->second);
  }
  r.level = outermost(levels);
  double rate = aggregate_rate(g_, t_, "read", cores, levels, rates);
  double bytes = static_cast<double>(dataset_bytes) * static_cast<double>(cores.size()) *
                 static_cast<double>(passes_for(policy, dataset_bytes));
  set_from_rate(r, bytes, rate, bandwidth_mhz(g_, policy));
  r.samples_bpc.assign(std::max(1, policy.repeats), rate);
  return r;
}

BandwidthRecord SimulatedBandwidth::run_triad(std::uint64_t array_bytes, const std::vector<int>& cores,
                                              bool nontemporal, const BandwidthPolicy& policy) {
  if (array_bytes < sizeof(double)) throw ConfigError("triad arrays need at least one element");
  validate_core_set(g_, cores, policy.single_node);
  if (t_.triad.empty()) throw ConfigError("topology has no triad bandwidth table");

  // Every core's stream holds the same data, so one computed copy stands for all.
  std::size_t n = array_bytes / sizeof(double);
  std::vector<double> a(n), b(n), c(n);
  for (std::size_t i = 0; i < n; ++i) {
    b[i] = 1.0 + static_cast<double>(i % 7);
    c[i] = 2.0 + static_cast<double>(i % 5);
  }
  const double s = 3.0;
  auto isa = kernels::widest_supported();
  kernels::triad_kernel(isa)(a.data(), b.data(), c.data(), s, n, nontemporal);
  for (std::size_t i = 0; i < n; ++i)
    if (a[i] != b[i] + s * c[i])
      throw VerificationError("triad mismatch at index " + std::to_string(i));

  BandwidthRecord r;
  r.kernel = nontemporal ? "triad-nt" : "triad";
  r.kernel_used = r.kernel;
  r.dataset_bytes = array_bytes;
  r.core_set = cores;
  r.backend = BackendKind::simulated;
  std::vector<CacheLevel> levels;
  std::vector<double> rates;
  for (int k : cores) {
    auto l = classify_level(g_, 3 * array_bytes, cores, k);
    auto it = t_.triad.find(l);
    if (it == t_.triad.end()) throw ConfigError("no triad bandwidth at " + std::string(to_string(l)));
    levels.push_back(l);
    rates.push_back(it->second);
  }
  r.level = outermost(levels);
  double rate = aggregate_rate(g_, t_, "triad", cores, levels, rates);
  double bytes = 3.0 * static_cast<double>(array_bytes) * static_cast<double>(cores.size()) *
                 static_cast<double>(passes_for(policy, 3 * array_bytes));
  set_from_rate(r, bytes, rate, bandwidth_mhz(g_, policy));
  r.samples_bpc.assign(std::max(1, policy.repeats), rate);
  return r;
}

int saturation_point(const std::vector<double>& v, double tolerance) {
  if (v.empty()) return 0;
  double mx = *std::max_element(v.begin(), v.end());
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] >= (1.0 - tolerance) * mx) return static_cast<int>(i) + 1;
  return static_cast<int>(v.size());
}

namespace {

std::vector<int> first_cores(const L3DomainInfo& d, int k) {
  return {d.cores.begin(), d.cores.begin() + std::min<std::size_t>(k, d.cores.size())};
}

}  // namespace

std::vector<ScalingRung> node_ladder(const TopologyGraph& g, int numa_node) {
  if (numa_node < 0 || numa_node >= static_cast<int>(g.numa_nodes.size())) throw ConfigError("NUMA node out of range");
  std::vector<const L3DomainInfo*> doms;
  for (const auto& d : g.l3_domains)
    if (d.numa == numa_node && !d.cores.empty()) doms.push_back(&d);
  if (doms.empty()) throw ConfigError("NUMA node has no cores");
  std::size_t per = doms[0]->cores.size();

  struct Group {
    std::string name;
    std::vector<const L3DomainInfo*> doms;
  };
  std::vector<Group> groups{{"1 domain", {doms[0]}}};
  // two domains on one CCD, one domain on each of two CCDs
  std::map<int, std::vector<const L3DomainInfo*>> by_ccd;
  for (auto* d : doms)
    if (d->ccd >= 0) by_ccd[d->ccd].push_back(d);
  for (auto& [ccd, ds] : by_ccd)
    if (ds.size() >= 2) {
      groups.push_back({"2 domains, 1 CCD", {ds[0], ds[1]}});
      break;
    }
  if (by_ccd.size() >= 2) {
    auto it = by_ccd.begin();
    auto* a = it->second[0];
    auto* b = (++it)->second[0];
    groups.push_back({"2 CCDs", {a, b}});
  }
  if (doms.size() > 1) groups.push_back({std::to_string(doms.size()) + " domains", doms});

  std::vector<ScalingRung> out;
  std::set<std::vector<int>> seen;
  for (std::size_t k = 1; k <= per; ++k)
    for (const auto& gr : groups) {
      ScalingRung r;
      r.label = gr.name + " x " + std::to_string(k);
      for (auto* d : gr.doms)
        for (int c : first_cores(*d, static_cast<int>(k))) r.cores.push_back(c);
      auto key = r.cores;
      std::sort(key.begin(), key.end());
      if (seen.insert(key).second) out.push_back(std::move(r));
    }
  std::stable_sort(out.begin(), out.end(),
                   [](const ScalingRung& a, const ScalingRung& b) { return a.cores.size() < b.cores.size(); });
  return out;
}

std::vector<ScalingRung> core_ladder(const TopologyGraph& g, int numa_node) {
  if (numa_node < 0 || numa_node >= static_cast<int>(g.numa_nodes.size())) throw ConfigError("NUMA node out of range");
  const auto& cores = g.numa_nodes[numa_node].cores;
  std::vector<ScalingRung> out;
  for (std::size_t k = 1; k <= cores.size(); ++k)
    out.push_back({std::to_string(k) + " cores", {cores.begin(), cores.begin() + k}});
  return out;
}

ScalingSeries scaling_series(const std::vector<ScalingRung>& ladder, const KernelChoice& k,
                             std::uint64_t dataset_bytes, const BandwidthPolicy& policy, BandwidthBackend& backend) {
  ScalingSeries s;
  s.rungs = ladder;
  for (const auto& r : ladder) {
    auto rec = k.triad ? backend.run_triad(dataset_bytes, r.cores, k.nontemporal, policy)
                       : backend.run_throughput(ThroughputKernel::for_width(k.width), dataset_bytes, r.cores, policy);
    s.gbps.push_back(rec.bandwidth_gbps);
    s.records.push_back(std::move(rec));
  }
  s.saturation = saturation_point(s.gbps);
  return s;
}

}  // namespace memchar
