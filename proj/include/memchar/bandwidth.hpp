#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "memchar/harness.hpp"
#include "memchar/kernels.hpp"
#include "memchar/topology.hpp"

namespace memchar {

enum class IsaWidth { w128, w256, w512 };
std::string_view to_string(IsaWidth w);
IsaWidth parse_width(std::string_view s);

struct ThroughputKernel {
  IsaWidth isa_width = IsaWidth::w256;
  int burst_registers = 16;

  std::size_t bytes_per_iteration() const;
  // 8 xmm, 16 ymm or 32 zmm registers.
  static ThroughputKernel for_width(IsaWidth w);
  kernels::Isa isa() const;
};

// CLI names: read128, read256, read512, triad, triad-nt
struct KernelChoice {
  bool triad = false;
  bool nontemporal = false;
  IsaWidth width = IsaWidth::w256;
};
KernelChoice parse_kernel_name(std::string_view s);
std::string kernel_name(const KernelChoice& k);

struct BandwidthRecord {
  std::string kernel;       // as requested
  std::string kernel_used;  // differs from `kernel` when the width was unavailable
  bool degraded = false;
  std::uint64_t dataset_bytes = 0;  // per core; per array for triad
  std::vector<int> core_set;
  CacheLevel level = CacheLevel::L1;
  double bytes_moved = 0;
  double elapsed_cycles = 0;
  double bandwidth_gbps = 0;
  double bytes_per_cycle = 0;
  double frequency_mhz = 0;
  BackendKind backend = BackendKind::simulated;
  std::vector<double> samples_bpc;  // per repeat, bytes per cycle
  bool operator==(const BandwidthRecord&) const = default;
};

// bytes_per_cycle = bytes / cycles, gbps = bytes_per_cycle * MHz / 1000.
void set_from_cycles(BandwidthRecord& r, double bytes, double cycles, double freq_mhz);
// Rate first: elapsed = bytes / rate.
void set_from_rate(BandwidthRecord& r, double bytes, double bytes_per_cycle, double freq_mhz);

struct BandwidthPolicy {
  int repeats = 10;       // reducer is max
  int passes = 0;         // 0: enough passes to move >= min_bytes per core
  std::uint64_t min_bytes = 64ull << 20;
  bool single_node = true;
  double verify_fraction = 0.01;  // native triad spot check
  std::optional<double> frequency_mhz;  // operator-pinned clock; default from topology
  std::uint64_t seed = 1;
};

// Memory level a per-core footprint lands in, sharing L3 with the other set members in its domain.
CacheLevel classify_level(const TopologyGraph& g, std::uint64_t footprint_bytes, const std::vector<int>& core_set,
                          int core);

// 1/4, 1/2, 1 and 2 times the level's capacity (L3 per domain; RAM uses 2x..16x L3).
std::vector<std::uint64_t> preset_sizes(const TopologyGraph& g, CacheLevel level);

void validate_core_set(const TopologyGraph& g, const std::vector<int>& cores, bool single_node);

class BandwidthBackend {
 public:
  virtual ~BandwidthBackend() = default;
  virtual BackendKind kind() const = 0;
  virtual BandwidthRecord run_throughput(const ThroughputKernel& k, std::uint64_t dataset_bytes,
                                         const std::vector<int>& cores, const BandwidthPolicy& policy) = 0;
  virtual BandwidthRecord run_triad(std::uint64_t array_bytes, const std::vector<int>& cores, bool nontemporal,
                                    const BandwidthPolicy& policy) = 0;
};

BandwidthRecord run_throughput(const ThroughputKernel& k, std::uint64_t dataset_bytes, const std::vector<int>& cores,
                               const BandwidthPolicy& policy, BandwidthBackend& backend);
BandwidthRecord run_triad(std::uint64_t array_bytes, const std::vector<int>& cores, bool nontemporal,
                          const BandwidthPolicy& policy, BandwidthBackend& backend);

// Per-core B/cycle tables and shared caps, read from the topology's bandwidth section.
struct BandwidthTables {
  std::map<IsaWidth, std::map<CacheLevel, double>> read;
  std::map<CacheLevel, double> triad;
  // caps[kind][scope][level]; kind "read" or "triad", scope "l3_domain", "ccd" or "numa_node"
  std::map<std::string, std::map<std::string, std::map<CacheLevel, double>>> caps;

  static BandwidthTables from_topology(const TopologyGraph& g);
};

// Sum of per-core rates, capped per L3 domain, then per CCD, then per NUMA node.
double aggregate_rate(const TopologyGraph& g, const BandwidthTables& t, const std::string& kind,
                      const std::vector<int>& cores, const std::vector<CacheLevel>& levels,
                      const std::vector<double>& per_core);

class SimulatedBandwidth : public BandwidthBackend {
 public:
  explicit SimulatedBandwidth(const TopologyGraph& g);
  BackendKind kind() const override { return BackendKind::simulated; }
  BandwidthRecord run_throughput(const ThroughputKernel& k, std::uint64_t dataset_bytes,
                                 const std::vector<int>& cores, const BandwidthPolicy& policy) override;
  BandwidthRecord run_triad(std::uint64_t array_bytes, const std::vector<int>& cores, bool nontemporal,
                            const BandwidthPolicy& policy) override;
  const BandwidthTables& tables() const { return t_; }

 private:
  const TopologyGraph& g_;
  BandwidthTables t_;
};

class NativeBandwidth : public BandwidthBackend {
 public:
  explicit NativeBandwidth(const TopologyGraph& g);
  BackendKind kind() const override { return BackendKind::native; }
  BandwidthRecord run_throughput(const ThroughputKernel& k, std::uint64_t dataset_bytes,
                                 const std::vector<int>& cores, const BandwidthPolicy& policy) override;
  BandwidthRecord run_triad(std::uint64_t array_bytes, const std::vector<int>& cores, bool nontemporal,
                            const BandwidthPolicy& policy) override;

 private:
  const TopologyGraph& g_;
  double tsc_mhz_ = 0;
};

struct ScalingRung {
  std::string label;
  std::vector<int> cores;
};

struct ScalingSeries {
  std::vector<ScalingRung> rungs;
  std::vector<BandwidthRecord> records;
  std::vector<double> gbps;
  int saturation = 0;  // 1-based rung index
};

// Smallest 1-based index whose value is within `tolerance` of the maximum.
int saturation_point(const std::vector<double>& values, double tolerance = 0.05);

// Rungs for one NUMA node: k cores of one L3 domain; k per domain on two domains of one CCD;
// k per domain on one domain of each of two CCDs; k per domain on every domain of the node.
// Ordered by core count, stable across the groups.
std::vector<ScalingRung> node_ladder(const TopologyGraph& g, int numa_node);
// 1..n cores of one NUMA node.
std::vector<ScalingRung> core_ladder(const TopologyGraph& g, int numa_node);

ScalingSeries scaling_series(const std::vector<ScalingRung>& ladder, const KernelChoice& k,
                             std::uint64_t dataset_bytes, const BandwidthPolicy& policy, BandwidthBackend& backend);

}  // namespace memchar
