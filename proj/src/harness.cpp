#include "memchar/harness.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include "memchar/text.hpp"

namespace memchar {

std::string_view to_string(BackendKind b) { return b == BackendKind::native ? "native" : "sim"; }

std::string_view to_string(Reducer r) {
  switch (r) {
    case Reducer::min: return "min";
    case Reducer::max: return "max";
    case Reducer::median: return "median";
  }
  return "?";
}

BackendKind parse_backend(std::string_view s) {
  if (s == "native") return BackendKind::native;
  if (s == "sim" || s == "simulated") return BackendKind::simulated;
  throw ConfigError("unknown backend '" + std::string(s) + "'");
}

Reducer parse_reducer(std::string_view s) {
  if (s == "min") return Reducer::min;
  if (s == "max") return Reducer::max;
  if (s == "median") return Reducer::median;
  throw ConfigError("unknown reducer '" + std::string(s) + "'");
}

void MeasurementPolicy::validate() const {
  if (inner_repeats < 1 || outer_repeats < 1 || sizes_per_level < 1)
    throw ConfigError("repeat counts and sizes per level must be at least 1");
  if (alignment < 64 || (alignment & (alignment - 1)) != 0)
    throw ConfigError("alignment must be a power of two >= 64");
  for (auto l : flush_levels)
    if (l == CacheLevel::RAM) throw ConfigError("RAM is not a flushable level");
}

namespace {

bool env_flag(const char* name, bool fallback) {
  const char* v = std::getenv(name);
  if (!v || !*v) return fallback;
  std::string s(trim(v));
  if (s == "1" || s == "on" || s == "true" || s == "yes") return true;
  if (s == "0" || s == "off" || s == "false" || s == "no") return false;
  throw ConfigError(std::string(name) + ": expected 0/1/on/off, got '" + s + "'");
}

}  // namespace

MeasurementPolicy MeasurementPolicy::from_environment() {
  MeasurementPolicy p;
  if (const char* a = std::getenv("MEMCHAR_ALIGNMENT"); a && *a) {
    long long v = parse_int(a, "MEMCHAR_ALIGNMENT");
    if (v <= 0) throw ConfigError("MEMCHAR_ALIGNMENT must be positive");
    p.alignment = static_cast<std::size_t>(v);
  }
  p.flush_levels.clear();
  if (env_flag("MEMCHAR_FLUSH_L1", true)) p.flush_levels.push_back(CacheLevel::L1);
  if (env_flag("MEMCHAR_FLUSH_L2", true)) p.flush_levels.push_back(CacheLevel::L2);
  if (env_flag("MEMCHAR_FLUSH_L3", true)) p.flush_levels.push_back(CacheLevel::L3);
  p.huge_pages = env_flag("MEMCHAR_HUGEPAGES", true);
  p.validate();
  return p;
}

Reducer default_reducer(const Placement& p, CacheLevel level) {
  return (level == CacheLevel::L1 && p.owner != p.requester) ? Reducer::median : Reducer::min;
}

SampleStats aggregate(const std::vector<double>& samples, const MeasurementPolicy& policy) {
  if (samples.empty()) throw ConfigError("no samples to aggregate");
  auto expected = static_cast<std::size_t>(policy.samples_per_point());
  if (samples.size() != expected)
    throw ConfigError("expected " + std::to_string(expected) + " samples, got " + std::to_string(samples.size()));
  std::vector<double> v = samples;
  std::sort(v.begin(), v.end());
  return {v.front(), v.back(), v[(v.size() - 1) / 2]};
}

double reduce(const SampleStats& s, Reducer r) {
  switch (r) {
    case Reducer::min: return s.min;
    case Reducer::max: return s.max;
    case Reducer::median: return s.median;
  }
  return s.min;
}

FlushPlan flush_plan(const TopologyGraph& g, const std::vector<CacheLevel>& levels) {
  FlushPlan plan;
  std::uint64_t sum = 0;
  for (auto l : {CacheLevel::L1, CacheLevel::L2, CacheLevel::L3}) {
    if (std::find(levels.begin(), levels.end(), l) == levels.end()) continue;
    std::uint64_t cap = l == CacheLevel::L1 ? g.caches.l1_bytes : l == CacheLevel::L2 ? g.caches.l2_bytes
                                                                                      : g.caches.l3_bytes;
    if (cap == 0) throw ConfigError("cache size for " + std::string(to_string(l)) + " is unknown");
    plan.levels.push_back(l);
    sum += cap;
  }
  for (auto l : levels)
    if (l == CacheLevel::RAM) throw ConfigError("RAM is not a flushable level");
  plan.scratch_bytes = static_cast<std::size_t>(2 * sum);
  return plan;
}

void apply_flush_plan(const FlushPlan& plan, Simulator& sim, int requester, std::uint64_t line) {
  // Streaming the scratch buffer pushes the line down one level at a time.
  for (auto l : plan.levels) sim.apply(requester, Action::evict, line, l);
}

std::vector<std::size_t> latency_sizes(const TopologyGraph& g, CacheLevel level, int count, std::size_t alignment) {
  if (count < 1) throw ConfigError("need at least one size per level");
  if (alignment == 0) throw ConfigError("alignment must be positive");
  const auto& c = g.caches;
  std::uint64_t lo = 0, hi = 0;
  switch (level) {
    case CacheLevel::L1: lo = 0, hi = c.l1_bytes; break;
    case CacheLevel::L2: lo = c.l1_bytes, hi = c.l2_bytes; break;
    case CacheLevel::L3: lo = c.l2_bytes, hi = c.l3_bytes; break;
    case CacheLevel::RAM: lo = c.l3_bytes, hi = c.l3_bytes; break;
  }
  if (hi == 0) throw ConfigError("cache size for " + std::string(to_string(level)) + " is unknown");
  std::vector<std::size_t> out;
  for (int k = 1; k <= count; ++k) {
    std::uint64_t b = level == CacheLevel::RAM ? hi * static_cast<std::uint64_t>(k + 1)
                                               : lo + (hi - lo) * static_cast<std::uint64_t>(k) / (count + 1);
    b -= b % alignment;
    out.push_back(static_cast<std::size_t>(std::max<std::uint64_t>(b, alignment)));
  }
  return out;
}

double calibrate_overhead(LatencyBackend& backend, int repeats) {
  if (repeats < 1) throw ConfigError("overhead calibration needs at least one repeat");
  long double best = backend.empty_timing();
  for (int i = 1; i < repeats; ++i) best = std::min(best, backend.empty_timing());
  if (best < 0) throw BackendError("negative timer overhead");
  return static_cast<double>(best);
}

CoherenceScript plan_for(const TopologyGraph& g, const LatencyPoint& pt) {
  const auto& p = pt.placement;
  int n = g.core_count();
  if (p.requester < 0 || p.requester >= n || p.owner < 0 || p.owner >= n)
    throw ConfigError("placement core out of range");
  if (p.home < 0 || p.home >= static_cast<int>(g.numa_nodes.size())) throw ConfigError("home node out of range");
  auto m = ProtocolModel::from_topology(g);
  std::optional<int> helper;
  if (needs_helper(pt.state)) {
    helper = choose_helper(m, p.requester, p.owner);
    if (!helper) throw ConfigError("state " + std::string(to_string(pt.state)) + " needs a third core");
  }
  return plan_state(pt.state, m, p.requester, p.owner, helper, pt.level);
}

MeasurementRecord measure_latency(const TopologyGraph& g, const std::vector<ChainSpec>& chains,
                                  const CoherenceScript& script, const LatencyPoint& pt,
                                  const MeasurementPolicy& policy, LatencyBackend& backend, double overhead) {
  policy.validate();
  const auto& p = pt.placement;
  if (chains.size() != static_cast<std::size_t>(policy.sizes_per_level))
    throw ConfigError("policy wants " + std::to_string(policy.sizes_per_level) + " sizes, got " +
                      std::to_string(chains.size()));
  if (script.requester != p.requester || script.owner != p.owner)
    throw ConfigError("script is bound to different cores than the placement");
  for (const auto& c : chains)
    if (c.elements() == 0) throw ConfigError("chain has no elements");

  MeasurementRecord rec;
  rec.backend = backend.kind();
  rec.requester = p.requester;
  rec.owner = p.owner;
  rec.home = p.home;
  if (p.owner != p.requester) rec.forwarder = g.core_numa.at(p.owner);
  rec.state = pt.state;
  rec.level = pt.level;
  for (const auto& c : chains) rec.bytes.push_back(c.bytes);
  rec.reducer = policy.reducer;
  rec.freq_mhz = backend.frequency_mhz();
  rec.alignment = policy.alignment;
  rec.huge_pages = policy.huge_pages;
  rec.seed = policy.seed;
  rec.overhead_cycles = overhead;

  rec.samples.reserve(policy.samples_per_point());
  for (int o = 0; o < policy.outer_repeats; ++o)
    for (const auto& c : chains)
      for (int i = 0; i < policy.inner_repeats; ++i) {
        long double elapsed = backend.timed_run(c, script, p, policy);
        long double lat = (elapsed - static_cast<long double>(overhead)) / static_cast<long double>(c.elements());
        rec.samples.push_back(static_cast<double>(std::max<long double>(lat, 0)));
      }
  rec.stats = aggregate(rec.samples, policy);
  rec.latency_cycles = reduce(rec.stats, policy.reducer);
  return rec;
}

MeasurementRecord measure_point(const TopologyGraph& g, const LatencyPoint& pt, const MeasurementPolicy& policy,
                                LatencyBackend& backend, double overhead) {
  auto script = plan_for(g, pt);
  std::vector<ChainSpec> chains;
  for (auto b : latency_sizes(g, pt.level, policy.sizes_per_level, policy.alignment))
    chains.push_back({b, policy.alignment, policy.seed, policy.huge_pages, pt.placement.home});
  return measure_latency(g, chains, script, pt, policy, backend, overhead);
}

SimulatedBackend::SimulatedBackend(const TopologyGraph& g, LatencyModel model)
    : g_(g), model_(std::move(model)), protocol_(ProtocolModel::from_topology(g)) {
  if (!(model_.frequencies.core_mhz > 0)) throw ConfigError("latency model has no core frequency");
}

long double SimulatedBackend::timed_run(const ChainSpec& chain, const CoherenceScript& script, const Placement& p,
                                        const MeasurementPolicy& policy) {
  Simulator sim(protocol_);
  apply_flush_plan(flush_plan(g_, policy.flush_levels), sim, p.requester);
  for (const auto& st : script.steps) sim.apply(script.core_of(st.worker), st.action, 0, st.level);
  last_source_ = sim.apply(p.requester, Action::read);

  auto key = std::make_tuple(p.requester, p.owner, p.home, static_cast<int>(script.target_state),
                             static_cast<int>(script.target.level), static_cast<int>(last_source_.kind),
                             last_source_.index * 8 + static_cast<int>(last_source_.level));
  auto it = price_memo_.find(key);
  if (it == price_memo_.end()) {
    LatencyQuery q{p.requester, p.home, std::nullopt, script.target_state, script.target.level};
    if (p.owner != p.requester) q.forwarder = p.owner;
    it = price_memo_.emplace(key, path_cycles(model_, price_path(g_, q, last_source_))).first;
  }
  return static_cast<long double>(it->second) * static_cast<long double>(chain.elements());
}

}  // namespace memchar
