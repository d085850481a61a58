#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <set>

#include "memchar/bandwidth.hpp"

using namespace memchar;
using CL = CacheLevel;
namespace K = memchar::kernels;

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

std::vector<K::Isa> supported() {
  std::vector<K::Isa> out;
  for (auto i : {K::Isa::scalar, K::Isa::sse, K::Isa::avx2, K::Isa::avx512})
    if (K::isa_supported(i)) out.push_back(i);
  return out;
}

// First `per` cores of the first domain of each of the node's first two CCDs.
std::vector<int> two_ccds(const TopologyGraph& g, int node, int per) {
  std::vector<int> out;
  std::set<int> ccds;
  for (const auto& d : g.l3_domains) {
    if (d.numa != node || ccds.count(d.ccd) || ccds.size() == 2) continue;
    ccds.insert(d.ccd);
    for (int k = 0; k < per; ++k) out.push_back(d.cores[k]);
  }
  return out;
}

}  // namespace

TEST(Kernel, BurstConfiguration) {
  EXPECT_EQ(ThroughputKernel::for_width(IsaWidth::w128).burst_registers, 8);
  EXPECT_EQ(ThroughputKernel::for_width(IsaWidth::w256).burst_registers, 16);
  EXPECT_EQ(ThroughputKernel::for_width(IsaWidth::w512).burst_registers, 32);
  EXPECT_EQ(ThroughputKernel::for_width(IsaWidth::w128).bytes_per_iteration(), 128u);
  EXPECT_EQ(ThroughputKernel::for_width(IsaWidth::w256).bytes_per_iteration(), 512u);
  EXPECT_EQ(ThroughputKernel::for_width(IsaWidth::w512).bytes_per_iteration(), 2048u);
  EXPECT_EQ(K::burst_doubles(K::Isa::avx512), 256u);
}

TEST(Kernel, Names) {
  for (const char* n : {"read128", "read256", "read512", "triad", "triad-nt"})
    EXPECT_EQ(kernel_name(parse_kernel_name(n)), n);
  EXPECT_THROW(parse_kernel_name("copy"), ConfigError);
}

TEST(Kernel, ReadVariantsMatchScalar) {
  Xorshift64 rng(3);
  for (std::size_t n : {0, 1, 7, 64, 255, 256, 257, 1000, 4099}) {
    // Small integers keep every summation order exact.
    std::vector<double> v(n + 1);
    for (auto& x : v) x = static_cast<double>(rng.below(1000));
    double want = K::read_scalar(v.data() + 1, n);
    for (auto i : supported()) EXPECT_EQ(K::read_kernel(i)(v.data() + 1, n), want) << K::to_string(i) << " n=" << n;
  }
}

TEST(Kernel, TriadVariantsBitIdentical) {
  Xorshift64 rng(5);
  for (std::size_t n : {1, 2, 3, 17, 64, 1023}) {
    for (std::size_t off : {0, 1, 3}) {
      std::vector<double> b(n + off), c(n + off), ref(n + off);
      for (std::size_t i = 0; i < n + off; ++i) {
        b[i] = static_cast<double>(rng.next() >> 11) * 0x1p-53 * 1e3;
        c[i] = static_cast<double>(rng.next() >> 11) * 0x1p-53 - 0.5;
      }
      K::triad_scalar(ref.data() + off, b.data() + off, c.data() + off, 3.0, n, false);
      for (auto i : supported())
        for (bool nt : {false, true}) {
          std::vector<double> a(n + off, -1);
          K::triad_kernel(i)(a.data() + off, b.data() + off, c.data() + off, 3.0, n, nt);
          for (std::size_t j = 0; j < n; ++j)
            ASSERT_EQ(a[off + j], ref[off + j]) << K::to_string(i) << " nt=" << nt << " j=" << j;
        }
    }
  }
}

TEST(Triad, OneElement) {
  for (auto i : supported()) {
    double a = 0, b = 1, c = 2;
    K::triad_kernel(i)(&a, &b, &c, 3, 1, false);
    EXPECT_EQ(a, 7);
  }
  SimulatedBandwidth sim(rome());
  auto r = run_triad(8, {0}, false, {}, sim);
  EXPECT_GT(r.bandwidth_gbps, 0);
  EXPECT_TRUE(std::isfinite(r.bandwidth_gbps));
  EXPECT_EQ(r.level, CL::L1);
  EXPECT_THROW(run_triad(4, {0}, false, {}, sim), ConfigError);
}

TEST(Arithmetic, DefiningRelations) {
  Xorshift64 rng(9);
  for (int i = 0; i < 10000; ++i) {
    double bytes = static_cast<double>(1 + rng.below(1ull << 40));
    double cycles = static_cast<double>(1 + rng.below(1ull << 36)) / static_cast<double>(1 + rng.below(64));
    double f = 800 + static_cast<double>(rng.below(4000));
    BandwidthRecord r;
    set_from_cycles(r, bytes, cycles, f);
    ASSERT_EQ(r.bytes_per_cycle, bytes / cycles);
    ASSERT_EQ(r.bandwidth_gbps, bytes / cycles * f / 1000.0);
    double seconds = cycles / (f * 1e6);
    ASSERT_NEAR(r.bandwidth_gbps, bytes / seconds / 1e9, 1e-13 * r.bandwidth_gbps);
  }
  BandwidthRecord r;
  EXPECT_THROW(set_from_cycles(r, 1, 0, 2000), BackendError);
  EXPECT_THROW(set_from_cycles(r, 1, 1, 0), ConfigError);
}

TEST(Fixture, RomeL1Avx) {
  SimulatedBandwidth sim(rome());
  auto r = run_throughput(ThroughputKernel::for_width(IsaWidth::w256), 16384, {0}, {}, sim);
  EXPECT_EQ(r.level, CL::L1);
  EXPECT_EQ(r.bytes_per_cycle, 64);
  EXPECT_EQ(r.bandwidth_gbps, 128);
  EXPECT_EQ(r.frequency_mhz, 2000);
  EXPECT_FALSE(r.degraded);
}

TEST(Fixture, ClxL1Avx512) {
  SimulatedBandwidth sim(clx());
  auto r = run_throughput(ThroughputKernel::for_width(IsaWidth::w512), 16384, {0}, {}, sim);
  EXPECT_EQ(r.bytes_per_cycle, 116.25);
  EXPECT_EQ(r.frequency_mhz, 1600);
}

TEST(Fixture, RomeL2AndL3SingleCore) {
  SimulatedBandwidth sim(rome());
  auto k = ThroughputKernel::for_width(IsaWidth::w256);
  EXPECT_EQ(run_throughput(k, 256 << 10, {0}, {}, sim).bytes_per_cycle, 31.4);
  EXPECT_EQ(run_throughput(k, 4 << 20, {0}, {}, sim).bytes_per_cycle, 23);
  // Four cores of one CCX on L3: about 18.9 B/cycle per core, 151 GB/s.
  auto four = run_throughput(k, 2 << 20, {0, 1, 2, 3}, {}, sim);
  EXPECT_EQ(four.level, CL::L3);
  EXPECT_NEAR(four.bytes_per_cycle / 4, 18.9, 0.05);
  EXPECT_NEAR(four.bandwidth_gbps, 151, 0.5);
}

TEST(Fixture, RomeNodeTriadPlateau) {
  SimulatedBandwidth sim(rome());
  std::uint64_t big = 64ull << 20;
  auto r = run_triad(big, two_ccds(rome(), 0, 2), true, {}, sim);
  EXPECT_EQ(r.level, CL::RAM);
  EXPECT_EQ(r.bandwidth_gbps, 42.9);
  auto one = run_triad(big, two_ccds(rome(), 0, 1), true, {}, sim);
  EXPECT_EQ(one.bandwidth_gbps, 42.3);
}

TEST(Fixture, RomeSocketTriad) {
  SimulatedBandwidth sim(rome());
  std::vector<int> cores;
  for (int node = 0; node < 4; ++node)
    for (int c : two_ccds(rome(), node, 2)) cores.push_back(c);
  BandwidthPolicy pol;
  EXPECT_THROW(run_triad(64ull << 20, cores, true, pol, sim), ConfigError);
  pol.single_node = false;
  auto r = run_triad(64ull << 20, cores, true, pol, sim);
  auto node = run_triad(64ull << 20, two_ccds(rome(), 0, 2), true, {}, sim);
  EXPECT_DOUBLE_EQ(r.bandwidth_gbps, 4 * node.bandwidth_gbps);
  EXPECT_NEAR(r.bandwidth_gbps, 171, 1);
}

TEST(Fixture, CrossSocketRejected) {
  SimulatedBandwidth sim(rome());
  auto k = ThroughputKernel::for_width(IsaWidth::w256);
  EXPECT_THROW(run_throughput(k, 1 << 20, {0, 64}, {}, sim), ConfigError);
  BandwidthPolicy multi;
  multi.single_node = false;
  EXPECT_NO_THROW(run_throughput(k, 1 << 20, {0, 64}, multi, sim));
  EXPECT_THROW(run_throughput(k, 1 << 20, {}, {}, sim), ConfigError);
  EXPECT_THROW(run_throughput(k, 1 << 20, {0, 0}, {}, sim), ConfigError);
}

TEST(Fixture, ZeroDatasetRejected) {
  SimulatedBandwidth sim(rome());
  EXPECT_THROW(run_throughput(ThroughputKernel::for_width(IsaWidth::w256), 0, {0}, {}, sim), ConfigError);
}

TEST(Fixture, MissingWidthDegrades) {
  SimulatedBandwidth sim(rome());
  auto r = run_throughput(ThroughputKernel::for_width(IsaWidth::w512), 16384, {0}, {}, sim);
  EXPECT_TRUE(r.degraded);
  EXPECT_EQ(r.kernel, "read512");
  EXPECT_EQ(r.kernel_used, "read256");
  EXPECT_EQ(r.bytes_per_cycle, 64);
}

TEST(Fixture, AggregateNeverAboveCapsOrSum) {
  for (const TopologyGraph* g : {&rome(), &clx()}) {
    SimulatedBandwidth sim(*g);
    auto tables = BandwidthTables::from_topology(*g);
    Xorshift64 rng(17);
    const auto& node = g->numa_nodes[0].cores;
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<int> set;
      for (int c : node)
        if (rng.below(3) == 0) set.push_back(c);
      if (set.empty()) set.push_back(node[0]);
      std::uint64_t bytes = std::uint64_t{1} << (12 + rng.below(12));
      for (bool triad : {false, true}) {
        auto rec = triad ? run_triad(bytes, set, true, {}, sim)
                         : run_throughput(ThroughputKernel::for_width(IsaWidth::w256), bytes, set, {}, sim);
        double sum = 0;
        for (int c : set) {
          // Single-core rate at the level this core sees inside the set.
          auto l = classify_level(*g, triad ? 3 * bytes : bytes, set, c);
          sum += triad ? tables.triad.at(l) : tables.read.at(IsaWidth::w256).at(l);
        }
        ASSERT_LE(rec.bytes_per_cycle, sum * (1 + 1e-12));
        auto caps = tables.caps.at(triad ? "triad" : "read");
        bool uniform = true;
        for (int c : set) uniform = uniform && classify_level(*g, triad ? 3 * bytes : bytes, set, c) == rec.level;
        if (uniform && caps.count("numa_node") && caps.at("numa_node").count(rec.level))
          ASSERT_LE(rec.bytes_per_cycle, caps.at("numa_node").at(rec.level));
        if (rec.level == CL::L1 || rec.level == CL::L2) ASSERT_NEAR(rec.bytes_per_cycle, sum, 1e-9 * sum);
      }
    }
  }
}

TEST(Saturation, Basics) {
  EXPECT_EQ(saturation_point({5, 5, 5, 5}), 1);
  EXPECT_EQ(saturation_point({}), 0);
  EXPECT_EQ(saturation_point({1, 2, 3, 10, 9.6}), 4);
  EXPECT_EQ(saturation_point({1, 9.5, 10}), 2);
}

TEST(Saturation, RomeNodeLadder) {
  SimulatedBandwidth sim(rome());
  auto ladder = node_ladder(rome(), 0);
  ASSERT_FALSE(ladder.empty());
  auto s = scaling_series(ladder, parse_kernel_name("triad-nt"), 16ull << 20, {}, sim);
  const auto& sat = s.rungs.at(s.saturation - 1);
  EXPECT_NE(sat.label.find("2 CCDs"), std::string::npos) << sat.label;
  EXPECT_TRUE(sat.cores.size() == 2 || sat.cores.size() == 4) << sat.label;
  EXPECT_EQ(*std::max_element(s.gbps.begin(), s.gbps.end()), 42.9);
  // Read kernel, one CCX: RAM saturates at three cores.
  std::vector<ScalingRung> ccx;
  for (int k = 1; k <= 4; ++k) ccx.push_back({std::to_string(k), std::vector<int>(k)});
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 4; ++j)
      if (j <= k) ccx[k].cores[j] = j;
  auto r = scaling_series(ccx, parse_kernel_name("read256"), 16ull << 20, {}, sim);
  EXPECT_EQ(r.saturation, 3);
}

TEST(Saturation, ClxSncEightCores) {
  SimulatedBandwidth sim(clx());
  auto ladder = core_ladder(clx(), 0);
  for (const char* k : {"read512", "read256", "triad-nt"}) {
    auto s = scaling_series(ladder, parse_kernel_name(k), 32ull << 20, {}, sim);
    EXPECT_EQ(s.rungs.at(s.saturation - 1).cores.size(), 8u) << k;
  }
}

TEST(Presets, QuarterToDouble) {
  auto p = preset_sizes(rome(), CL::L2);
  EXPECT_EQ(p, (std::vector<std::uint64_t>{131072, 262144, 524288, 1048576}));
  EXPECT_EQ(classify_level(rome(), 32768, {0}, 0), CL::L1);
  EXPECT_EQ(classify_level(rome(), 32769, {0}, 0), CL::L2);
  EXPECT_EQ(classify_level(rome(), 8 << 20, {0, 1}, 0), CL::L3);
  EXPECT_EQ(classify_level(rome(), 8 << 20, {0, 1, 2}, 0), CL::RAM);
  EXPECT_EQ(classify_level(rome(), 8 << 20, {0, 4, 8}, 0), CL::L3);
}

TEST(Native, LevelsDecrease) {
  const char* on = std::getenv("MEMCHAR_NATIVE");
  if (!on || std::string(on) != "1") GTEST_SKIP() << "set MEMCHAR_NATIVE=1 to run native tests";
  auto g = load_topology(host_topology_document());
  NativeBandwidth nb(g);
  BandwidthPolicy pol;
  pol.repeats = 5;
  pol.min_bytes = 256ull << 20;
  auto k = ThroughputKernel::for_width(IsaWidth::w256);
  auto l1 = run_throughput(k, g.caches.l1_bytes / 2, {0}, pol, nb);
  auto l2 = run_throughput(k, g.caches.l2_bytes / 2, {0}, pol, nb);
  auto l3 = run_throughput(k, std::min<std::uint64_t>(g.caches.l3_bytes / 2, 64ull << 20), {0}, pol, nb);
  EXPECT_GT(l1.bytes_per_cycle, l2.bytes_per_cycle);
  EXPECT_GT(l2.bytes_per_cycle, l3.bytes_per_cycle);
  auto t = run_triad(1 << 20, {0}, true, pol, nb);
  EXPECT_GT(t.bandwidth_gbps, 0);
}
