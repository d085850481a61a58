#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "memchar/chain.hpp"
#include "memchar/coherence.hpp"
#include "memchar/model.hpp"
#include "memchar/topology.hpp"

namespace memchar {

enum class BackendKind { native, simulated };
enum class Reducer { min, max, median };

std::string_view to_string(BackendKind b);
std::string_view to_string(Reducer r);
BackendKind parse_backend(std::string_view s);
Reducer parse_reducer(std::string_view s);

struct MeasurementPolicy {
  int inner_repeats = 3;
  int outer_repeats = 10;
  int sizes_per_level = 4;
  Reducer reducer = Reducer::min;
  bool warmup = true;
  std::vector<CacheLevel> flush_levels{CacheLevel::L1, CacheLevel::L2, CacheLevel::L3};
  std::size_t alignment = 512;
  bool huge_pages = true;
  std::uint64_t seed = 1;

  int samples_per_point() const { return outer_repeats * sizes_per_level * inner_repeats; }
  void validate() const;
  // MEMCHAR_ALIGNMENT, MEMCHAR_FLUSH_L1/L2/L3, MEMCHAR_HUGEPAGES override the defaults.
  static MeasurementPolicy from_environment();
};

// Median for remote-L1 placements (bimodal samples), min otherwise.
Reducer default_reducer(const Placement& p, CacheLevel level);

struct TimerSample {
  std::uint64_t start_tsc = 0;
  std::uint64_t end_tsc = 0;
  bool serialized = true;
};

struct SampleStats {
  double min = 0;
  double max = 0;
  double median = 0;  // lower of the two middle values for even counts
  bool operator==(const SampleStats&) const = default;
};

SampleStats aggregate(const std::vector<double>& samples, const MeasurementPolicy& policy);
double reduce(const SampleStats& s, Reducer r);

struct MeasurementRecord {
  BackendKind backend = BackendKind::simulated;
  int requester = 0;
  int owner = 0;
  int home = 0;
  std::optional<int> forwarder;  // NUMA node of the owner when it is not the requester
  CoherenceState state = CoherenceState::I;
  CacheLevel level = CacheLevel::RAM;
  std::vector<std::uint64_t> bytes;  // dataset sizes, one per size step
  std::vector<double> samples;       // outer x sizes x inner order
  SampleStats stats;
  Reducer reducer = Reducer::min;
  double latency_cycles = 0;
  double freq_mhz = 0;
  std::size_t alignment = 0;
  bool huge_pages = false;
  std::uint64_t seed = 0;
  double overhead_cycles = 0;

  double latency_ns() const { return cycles_to_ns(latency_cycles, freq_mhz); }
  bool operator==(const MeasurementRecord&) const = default;
};

struct ChainSpec {
  std::size_t bytes = 0;
  std::size_t alignment = 512;
  std::uint64_t seed = 1;
  bool huge_pages = true;
  int numa_node = -1;
  std::size_t elements() const { return alignment ? bytes / alignment : 0; }
};

struct FlushPlan {
  std::vector<CacheLevel> levels;  // L1 -> L3 order
  std::size_t scratch_bytes = 0;
};

// Scratch is twice the summed capacities of the targeted levels on the requester's path.
FlushPlan flush_plan(const TopologyGraph& g, const std::vector<CacheLevel>& levels);
void apply_flush_plan(const FlushPlan& plan, Simulator& sim, int requester, std::uint64_t line = 0);

// Dataset sizes that place a chain in `level`: spread over (previous capacity, capacity],
// RAM uses 2x..(n+1)x the L3 domain size. Rounded down to the alignment.
std::vector<std::size_t> latency_sizes(const TopologyGraph& g, CacheLevel level, int count, std::size_t alignment);

class LatencyBackend {
 public:
  virtual ~LatencyBackend() = default;
  virtual BackendKind kind() const = 0;
  virtual double frequency_mhz() const = 0;
  // One run of the timing routine without memory accesses.
  virtual long double empty_timing() = 0;
  // Flush, prepare the line with `script`, then time one traversal by the requester.
  virtual long double timed_run(const ChainSpec& chain, const CoherenceScript& script, const Placement& p,
                                const MeasurementPolicy& policy) = 0;
};

// Minimum of `repeats` empty timings.
double calibrate_overhead(LatencyBackend& backend, int repeats);

struct LatencyPoint {
  Placement placement;
  CoherenceState state = CoherenceState::I;
  CacheLevel level = CacheLevel::RAM;
};

// Binds requester/owner/helper for a point and plans the state script.
CoherenceScript plan_for(const TopologyGraph& g, const LatencyPoint& pt);

MeasurementRecord measure_latency(const TopologyGraph& g, const std::vector<ChainSpec>& chains,
                                  const CoherenceScript& script, const LatencyPoint& pt,
                                  const MeasurementPolicy& policy, LatencyBackend& backend, double overhead);

// Convenience: sizes from latency_sizes(), script from plan_for().
MeasurementRecord measure_point(const TopologyGraph& g, const LatencyPoint& pt, const MeasurementPolicy& policy,
                                LatencyBackend& backend, double overhead);

// Protocol simulator plus latency model; elapsed = modeled cost x element count.
class SimulatedBackend : public LatencyBackend {
 public:
  SimulatedBackend(const TopologyGraph& g, LatencyModel model);
  BackendKind kind() const override { return BackendKind::simulated; }
  double frequency_mhz() const override { return model_.frequencies.core_mhz; }
  long double empty_timing() override { return 0; }
  long double timed_run(const ChainSpec& chain, const CoherenceScript& script, const Placement& p,
                        const MeasurementPolicy& policy) override;
  // Per-access cost of the last run and where the data came from.
  const DataSource& last_source() const { return last_source_; }

 private:
  const TopologyGraph& g_;
  LatencyModel model_;
  ProtocolModel protocol_;
  DataSource last_source_;
  std::map<std::tuple<int, int, int, int, int, int, int>, double> price_memo_;
};

// Fixed cost per access plus a fixed timer charge per timing; for tests and dry runs.
class SyntheticBackend : public LatencyBackend {
 public:
  SyntheticBackend(double per_access, double timer_cycles, double freq_mhz = 2000)
      : per_access_(per_access), timer_(timer_cycles), freq_(freq_mhz) {}
  BackendKind kind() const override { return BackendKind::simulated; }
  double frequency_mhz() const override { return freq_; }
  long double empty_timing() override { return timer_; }
  long double timed_run(const ChainSpec& chain, const CoherenceScript&, const Placement&,
                        const MeasurementPolicy&) override {
    return static_cast<long double>(timer_) + static_cast<long double>(per_access_) * chain.elements();
  }

 private:
  double per_access_;
  double timer_;
  double freq_;
};

// Real hardware: pinned workers, fenced TSC, dependent-load chase.
class NativeBackend : public LatencyBackend {
 public:
  explicit NativeBackend(const TopologyGraph& g);
  ~NativeBackend() override;
  BackendKind kind() const override { return BackendKind::native; }
  double frequency_mhz() const override { return tsc_mhz_; }
  long double empty_timing() override;
  long double timed_run(const ChainSpec& chain, const CoherenceScript& script, const Placement& p,
                        const MeasurementPolicy& policy) override;

  struct Impl;

 private:
  const TopologyGraph& g_;
  double tsc_mhz_ = 0;
  std::unique_ptr<Impl> impl_;
};

// TSC ticks per microsecond, measured against the steady clock.
double measure_tsc_mhz();
int host_cpu_count();
// Single-socket, single-node mesh sized from sysconf; cores in one row.
nlohmann::json host_topology_document();

}  // namespace memchar
