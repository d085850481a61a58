#include <gtest/gtest.h>

#include <cstdlib>

#include "fixture_points.hpp"
#include "memchar/harness.hpp"

using namespace memchar;
using CS = CoherenceState;
using CL = CacheLevel;

namespace {

std::string fx(const std::string& f) { return std::string(MEMCHAR_FIXTURES) + "/" + f; }

const TopologyGraph& rome() {
  static TopologyGraph g = load_topology_file(fx("rome_2s.json"));
  return g;
}
const TopologyGraph& clx() {
  static TopologyGraph g = load_topology_file(fx("clx_2s.json"));
  return g;
}

// Brute-force order statistics: x is the k-th smallest when fewer than k+1
// values are below it and at least k+1 are at or below it.
double brute_kth(const std::vector<double>& v, std::size_t k) {
  for (double x : v) {
    std::size_t below = 0, at_or_below = 0;
    for (double y : v) {
      below += y < x;
      at_or_below += y <= x;
    }
    if (below <= k && at_or_below >= k + 1) return x;
  }
  return -1;
}

MeasurementRecord sim_measure(const TopologyGraph& g, const LatencyPoint& pt, MeasurementPolicy pol = {}) {
  SimulatedBackend b(g, LatencyModel::from_topology(g));
  return measure_point(g, pt, pol, b, calibrate_overhead(b, 10));
}

}  // namespace

TEST(Aggregate, ReducersMatchBruteForce) {
  MeasurementPolicy pol;
  Xorshift64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> v(10 * 4 * 3);
    // Small integer range so ties are common.
    for (auto& x : v) x = static_cast<double>(rng.below(trial % 2 ? 20 : 1000)) + 0.25 * rng.below(4);
    auto s = aggregate(v, pol);
    double lo = v[0], hi = v[0];
    for (double x : v) lo = x < lo ? x : lo, hi = x > hi ? x : hi;
    ASSERT_EQ(s.min, lo);
    ASSERT_EQ(s.max, hi);
    ASSERT_EQ(s.median, brute_kth(v, (v.size() - 1) / 2));
  }
}

TEST(Aggregate, MedianTakesLowerMiddle) {
  MeasurementPolicy pol;
  pol.outer_repeats = 1, pol.sizes_per_level = 1, pol.inner_repeats = 4;
  auto s = aggregate({4, 1, 3, 2}, pol);
  EXPECT_EQ(s.median, 2);
  EXPECT_EQ(s.min, 1);
  EXPECT_EQ(s.max, 4);
}

TEST(Aggregate, BimodalMedianIsDominantMode) {
  MeasurementPolicy pol;
  std::vector<double> v;
  for (int i = 0; i < 120; ++i) v.push_back(i % 3 == 0 ? 140 : 78);
  EXPECT_EQ(aggregate(v, pol).median, 78);
  EXPECT_EQ(aggregate(v, pol).min, 78);
}

TEST(Aggregate, EmptyAndMiscountedRejected) {
  MeasurementPolicy pol;
  EXPECT_THROW(aggregate({}, pol), ConfigError);
  EXPECT_THROW(aggregate({1, 2, 3}, pol), ConfigError);
}

TEST(Harness, CyclesToNs) {
  EXPECT_DOUBLE_EQ(cycles_to_ns(220, 2000), 110);
  EXPECT_DOUBLE_EQ(cycles_to_ns(54, 2500), 21.6);
}

TEST(Harness, CalibrateOverhead) {
  SimulatedBackend sim(rome(), LatencyModel::from_topology(rome()));
  EXPECT_EQ(calibrate_overhead(sim, 10), 0);
  SyntheticBackend syn(5, 30);
  EXPECT_EQ(calibrate_overhead(syn, 10), 30);
  EXPECT_THROW(calibrate_overhead(syn, 0), ConfigError);
}

TEST(Harness, RomeLocalLevels) {
  auto l1 = sim_measure(rome(), {{0, 0, 0}, CS::M, CL::L1});
  EXPECT_EQ(l1.latency_cycles, 4);
  EXPECT_EQ(l1.samples.size(), 120u);
  EXPECT_EQ(l1.overhead_cycles, 0);
  EXPECT_EQ(l1.freq_mhz, 2000);
  auto ram = sim_measure(rome(), {{0, 0, 0}, CS::I, CL::RAM});
  EXPECT_NEAR(ram.latency_cycles, 220, 1);
  EXPECT_NEAR(ram.latency_ns(), 110, 0.5);
}

TEST(Harness, SyntheticCostSurvivesAnyOverhead) {
  const auto& g = rome();
  Xorshift64 rng(7);
  MeasurementPolicy pol;
  pol.outer_repeats = 2;
  for (int i = 0; i < 200; ++i) {
    double c = 1 + static_cast<double>(rng.below(400));
    double o = static_cast<double>(rng.below(10001));
    SyntheticBackend b(c, o);
    double cal = calibrate_overhead(b, 5);
    ASSERT_EQ(cal, o);
    auto r = measure_point(g, {{0, 1, 0}, CS::M, CL::L2}, pol, b, cal);
    ASSERT_EQ(r.latency_cycles, c);
  }
}

TEST(Harness, OverheadFuzzNeverNegative) {
  const auto& g = rome();
  Xorshift64 rng(11);
  MeasurementPolicy pol;
  pol.outer_repeats = 1;
  for (int i = 0; i < 300; ++i) {
    // Calibrated overhead anywhere in [0, 1e4], independent of what the timer charges.
    double overhead = static_cast<double>(rng.below(10001));
    SyntheticBackend b(static_cast<double>(rng.below(3)), static_cast<double>(rng.below(10001)));
    auto r = measure_point(g, {{0, 0, 0}, CS::E, CL::L1}, pol, b, overhead);
    for (double s : r.samples) ASSERT_GE(s, 0);
    ASSERT_GE(r.latency_cycles, 0);
  }
}

TEST(Harness, SimulatedEqualsPredictExhaustively) {
  for (const TopologyGraph* g : {&rome(), &clx()}) {
    auto model = LatencyModel::from_topology(*g);
    SimulatedBackend b(*g, model);
    MeasurementPolicy pol;
    double oh = calibrate_overhead(b, 10);
    auto pts = fixture::anchor_points(*g);
    ASSERT_GT(pts.size(), 500u);
    for (const auto& pt : pts) {
      auto r = measure_point(*g, pt, pol, b, oh);
      double want = predict(*g, model, fixture::query_for(pt));
      ASSERT_EQ(r.latency_cycles, want) << g->name << " r=" << pt.placement.requester << " o=" << pt.placement.owner
                                        << " h=" << pt.placement.home << " " << to_string(pt.state) << " "
                                        << to_string(pt.level) << " via " << describe(b.last_source());
      for (double s : r.samples) ASSERT_EQ(s, want);
    }
  }
}

TEST(Harness, ScriptPlacementMismatch) {
  const auto& g = rome();
  SimulatedBackend b(g, LatencyModel::from_topology(g));
  MeasurementPolicy pol;
  LatencyPoint pt{{0, 1, 0}, CS::M, CL::L1};
  auto script = plan_for(g, {{0, 2, 0}, CS::M, CL::L1});
  std::vector<ChainSpec> chains(4, ChainSpec{4096, 512, 1, false, 0});
  EXPECT_THROW(measure_latency(g, chains, script, pt, pol, b, 0), ConfigError);
  chains.pop_back();
  EXPECT_THROW(measure_latency(g, chains, plan_for(g, pt), pt, pol, b, 0), ConfigError);
}

TEST(Harness, LocalStatesNeedThirdCore) {
  auto g = load_topology_file(fx("single_core.json"));
  EXPECT_THROW(plan_for(g, {{0, 0, 0}, CS::S, CL::L1}), ConfigError);
  EXPECT_NO_THROW(plan_for(g, {{0, 0, 0}, CS::E, CL::L3}));
}

TEST(FlushPlan, Examples) {
  const auto& g = rome();
  auto none = flush_plan(g, {});
  EXPECT_TRUE(none.levels.empty());
  EXPECT_EQ(none.scratch_bytes, 0u);
  auto all = flush_plan(g, {CL::L1, CL::L2, CL::L3});
  EXPECT_EQ(all.levels, (std::vector<CL>{CL::L1, CL::L2, CL::L3}));
  EXPECT_GE(all.scratch_bytes, 2u * (32768 + 524288 + 16777216));
  EXPECT_THROW(flush_plan(g, {CL::RAM}), ConfigError);
  TopologyGraph blank = g;
  blank.caches.l2_bytes = 0;
  EXPECT_THROW(flush_plan(blank, {CL::L2}), ConfigError);
}

TEST(FlushPlan, LineLeavesTargetedLevels) {
  for (const TopologyGraph* g : {&rome(), &clx()}) {
    auto m = ProtocolModel::from_topology(*g);
    int d = m.core_domain[0];
    {
      Simulator sim(m);
      sim.apply(0, Action::read);
      apply_flush_plan(flush_plan(*g, {CL::L1}), sim, 0);
      EXPECT_NE(sim.line(0).core[0].level, CL::L1);
    }
    {
      Simulator sim(m);
      sim.apply(0, Action::write);
      apply_flush_plan(flush_plan(*g, {CL::L1, CL::L2, CL::L3}), sim, 0);
      EXPECT_EQ(sim.line(0).core[0].state, CS::I);
      EXPECT_EQ(sim.line(0).l3[d].state, CS::I);
      // The dirty copy went back to memory on the way out.
      EXPECT_EQ(sim.line(0).memory_version, sim.latest_write(0));
    }
  }
}

TEST(Sizes, FitTheirLevel) {
  for (const TopologyGraph* g : {&rome(), &clx()}) {
    const auto& c = g->caches;
    std::uint64_t prev = 0;
    for (auto l : {CL::L1, CL::L2, CL::L3, CL::RAM}) {
      auto sz = latency_sizes(*g, l, 4, 512);
      ASSERT_EQ(sz.size(), 4u);
      std::uint64_t cap = l == CL::L1 ? c.l1_bytes : l == CL::L2 ? c.l2_bytes : c.l3_bytes;
      for (std::size_t i = 0; i < sz.size(); ++i) {
        EXPECT_EQ(sz[i] % 512, 0u);
        if (i) EXPECT_GT(sz[i], sz[i - 1]);
        if (l == CL::RAM) {
          EXPECT_GE(sz[i], 2 * c.l3_bytes);
        } else {
          EXPECT_GT(sz[i], prev);
          EXPECT_LE(sz[i], cap);
        }
      }
      prev = cap;
    }
  }
}

TEST(Policy, Environment) {
  setenv("MEMCHAR_ALIGNMENT", "1024", 1);
  setenv("MEMCHAR_FLUSH_L2", "0", 1);
  setenv("MEMCHAR_HUGEPAGES", "off", 1);
  auto p = MeasurementPolicy::from_environment();
  EXPECT_EQ(p.alignment, 1024u);
  EXPECT_EQ(p.flush_levels, (std::vector<CL>{CL::L1, CL::L3}));
  EXPECT_FALSE(p.huge_pages);
  setenv("MEMCHAR_ALIGNMENT", "100", 1);
  EXPECT_THROW(MeasurementPolicy::from_environment(), ConfigError);
  setenv("MEMCHAR_ALIGNMENT", "512", 1);
  setenv("MEMCHAR_FLUSH_L2", "maybe", 1);
  EXPECT_THROW(MeasurementPolicy::from_environment(), ConfigError);
  unsetenv("MEMCHAR_ALIGNMENT");
  unsetenv("MEMCHAR_FLUSH_L2");
  unsetenv("MEMCHAR_HUGEPAGES");
  auto d = MeasurementPolicy::from_environment();
  EXPECT_EQ(d.alignment, 512u);
  EXPECT_EQ(d.flush_levels.size(), 3u);
  EXPECT_TRUE(d.huge_pages);
  EXPECT_EQ(d.samples_per_point(), 120);
}

TEST(Policy, DefaultReducer) {
  EXPECT_EQ(default_reducer({0, 1, 0}, CL::L1), Reducer::median);
  EXPECT_EQ(default_reducer({0, 0, 0}, CL::L1), Reducer::min);
  EXPECT_EQ(default_reducer({0, 1, 0}, CL::L2), Reducer::min);
}

TEST(Native, HostTopologyLoads) {
  auto g = load_topology(host_topology_document());
  EXPECT_EQ(g.core_count(), host_cpu_count());
  EXPECT_GT(g.caches.l1_bytes, 0u);
}

TEST(Native, PinningOutsideHostFails) {
  const char* on = std::getenv("MEMCHAR_NATIVE");
  if (!on || std::string(on) != "1") GTEST_SKIP() << "set MEMCHAR_NATIVE=1 to run native tests";
  NativeBackend b(rome());
  MeasurementPolicy pol;
  pol.outer_repeats = 1;
  EXPECT_THROW(measure_point(rome(), {{127, 127, 7}, CS::E, CL::L1}, pol, b, 0), PinningError);
}

TEST(Native, LocalLevelsMonotone) {
  const char* on = std::getenv("MEMCHAR_NATIVE");
  if (!on || std::string(on) != "1") GTEST_SKIP() << "set MEMCHAR_NATIVE=1 to run native tests";
  auto g = load_topology(host_topology_document());
  NativeBackend b(g);
  MeasurementPolicy pol;
  pol.outer_repeats = 3;
  pol.sizes_per_level = 1;
  pol.huge_pages = false;
  double oh = calibrate_overhead(b, 100);
  EXPECT_GT(oh, 0);
  double prev = 0;
  for (auto l : {CL::L1, CL::L2, CL::L3, CL::RAM}) {
    auto r = measure_point(g, {{0, 0, 0}, CS::E, l}, pol, b, oh);
    EXPECT_GE(r.latency_cycles, prev) << to_string(l);
    prev = r.latency_cycles;
  }
}
