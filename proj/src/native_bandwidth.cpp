#include <pthread.h>
#include <sched.h>

#include <algorithm>
#include <barrier>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <thread>

#include "memchar/bandwidth.hpp"
#include "memchar/chain.hpp"
#include "tsc.hpp"

namespace memchar {

namespace {

volatile double g_sink;

struct FreeDeleter {
  void operator()(double* p) const { std::free(p); }
};
using Buffer = std::unique_ptr<double[], FreeDeleter>;

Buffer alloc_doubles(std::size_t n) {
  void* p = nullptr;
  if (posix_memalign(&p, 64, std::max<std::size_t>(n, 1) * sizeof(double)) != 0)
    throw BackendError("allocation of " + std::to_string(n * sizeof(double)) + " bytes failed");
  return Buffer(static_cast<double*>(p));
}

void pin_self(int cpu) {
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(cpu, &set);
  int rc = pthread_setaffinity_np(pthread_self(), sizeof(set), &set);
  if (rc != 0) throw PinningError("cannot pin to cpu " + std::to_string(cpu) + ": " + std::strerror(rc));
}

std::uint64_t passes_for(const BandwidthPolicy& p, std::uint64_t bytes) {
  if (p.passes > 0) return static_cast<std::uint64_t>(p.passes);
  return std::max<std::uint64_t>(1, (p.min_bytes + bytes - 1) / bytes);
}

// One thread per core behind a common barrier; each times its own stream.
// Returns ticks per repeat as the max over workers.
template <class Setup, class Body>
std::vector<std::uint64_t> run_workers(const std::vector<int>& cores, int repeats, Setup setup, Body body) {
  const int host = host_cpu_count();
  for (int c : cores)
    if (c >= host) throw PinningError("core " + std::to_string(c) + " does not exist on this host");
  std::size_t n = cores.size();
  std::vector<std::vector<std::uint64_t>> ticks(n, std::vector<std::uint64_t>(repeats, 0));
  std::vector<std::exception_ptr> errors(n);
  std::barrier sync(static_cast<std::ptrdiff_t>(n));
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < n; ++w)
    threads.emplace_back([&, w] {
      bool ok = true;
      try {
        pin_self(cores[w]);
        setup(w);
      } catch (...) {
        errors[w] = std::current_exception();
        ok = false;
      }
      for (int r = 0; r < repeats; ++r) {
        sync.arrive_and_wait();
        if (!ok) continue;
        try {
          std::uint64_t t0 = tsc::begin();
          body(w);
          std::uint64_t t1 = tsc::end();
          if (t1 < t0) throw BackendError("timer went backwards");
          ticks[w][r] = t1 - t0;
        } catch (...) {
          errors[w] = std::current_exception();
          ok = false;
        }
      }
    });
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<std::uint64_t> out(repeats, 0);
  for (int r = 0; r < repeats; ++r)
    for (std::size_t w = 0; w < n; ++w) out[r] = std::max(out[r], ticks[w][r]);
  return out;
}

double pinned_mhz(const TopologyGraph& g, const BandwidthPolicy& p, double tsc_mhz) {
  if (p.frequency_mhz) return *p.frequency_mhz;
  if (g.frequencies.bandwidth_core_mhz > 0) return g.frequencies.bandwidth_core_mhz;
  if (g.frequencies.core_mhz > 0) return g.frequencies.core_mhz;
  return tsc_mhz;
}

// Best repeat; TSC ticks converted to cycles of the pinned core clock.
void finish(BandwidthRecord& r, const std::vector<std::uint64_t>& ticks, double bytes, double core_mhz,
            double tsc_mhz) {
  double best = 0;
  std::uint64_t best_ticks = 0;
  for (auto t : ticks) {
    if (t == 0) throw BackendError("stream finished in zero ticks");
    double cycles = static_cast<double>(t) * core_mhz / tsc_mhz;
    double bpc = bytes / cycles;
    r.samples_bpc.push_back(bpc);
    if (bpc > best) best = bpc, best_ticks = t;
  }
  set_from_cycles(r, bytes, static_cast<double>(best_ticks) * core_mhz / tsc_mhz, core_mhz);
}

}  // namespace

NativeBandwidth::NativeBandwidth(const TopologyGraph& g) : g_(g), tsc_mhz_(measure_tsc_mhz()) {}

BandwidthRecord NativeBandwidth::run_throughput(const ThroughputKernel& k, std::uint64_t dataset_bytes,
                                                const std::vector<int>& cores, const BandwidthPolicy& policy) {
  if (dataset_bytes == 0) throw ConfigError("dataset size must be positive");
  validate_core_set(g_, cores, policy.single_node);
  BandwidthRecord r;
  r.kernel = kernel_name({false, false, k.isa_width});
  auto isa = k.isa();
  if (!kernels::isa_supported(isa)) {
    isa = kernels::widest_supported();
    if (isa > k.isa()) isa = k.isa();
    while (!kernels::isa_supported(isa)) isa = static_cast<kernels::Isa>(static_cast<int>(isa) - 1);
    r.degraded = true;
  }
  r.kernel_used = isa == kernels::Isa::avx512 ? "read512"
                  : isa == kernels::Isa::avx2 ? "read256"
                  : isa == kernels::Isa::sse  ? "read128"
                                              : "read-scalar";
  r.dataset_bytes = dataset_bytes;
  r.core_set = cores;
  r.backend = BackendKind::native;
  std::vector<CacheLevel> levels;
  for (int c : cores) levels.push_back(classify_level(g_, dataset_bytes, cores, c));
  r.level = *std::max_element(levels.begin(), levels.end());

  auto fn = kernels::read_kernel(isa);
  std::size_t n = dataset_bytes / sizeof(double);
  if (n == 0) throw ConfigError("dataset smaller than one element");
  auto passes = passes_for(policy, dataset_bytes);
  std::vector<Buffer> bufs(cores.size());
  auto ticks = run_workers(
      cores, std::max(1, policy.repeats),
      [&](std::size_t w) {
        // First touch on the pinned core places pages on its node.
        bufs[w] = alloc_doubles(n);
        for (std::size_t i = 0; i < n; ++i) bufs[w][i] = static_cast<double>(i & 7);
        g_sink = fn(bufs[w].get(), n);
      },
      [&](std::size_t w) {
        double s = 0;
        for (std::uint64_t p = 0; p < passes; ++p) s += fn(bufs[w].get(), n);
        g_sink = s;
      });
  double bytes = static_cast<double>(n * sizeof(double)) * static_cast<double>(cores.size()) *
                 static_cast<double>(passes);
  finish(r, ticks, bytes, pinned_mhz(g_, policy, tsc_mhz_), tsc_mhz_);
  return r;
}

BandwidthRecord NativeBandwidth::run_triad(std::uint64_t array_bytes, const std::vector<int>& cores, bool nontemporal,
                                           const BandwidthPolicy& policy) {
  if (array_bytes < sizeof(double)) throw ConfigError("triad arrays need at least one element");
  validate_core_set(g_, cores, policy.single_node);
  BandwidthRecord r;
  r.kernel = nontemporal ? "triad-nt" : "triad";
  r.kernel_used = r.kernel;
  r.dataset_bytes = array_bytes;
  r.core_set = cores;
  r.backend = BackendKind::native;
  std::vector<CacheLevel> levels;
  for (int c : cores) levels.push_back(classify_level(g_, 3 * array_bytes, cores, c));
  r.level = *std::max_element(levels.begin(), levels.end());

  auto fn = kernels::triad_kernel(kernels::widest_supported());
  const double s = 3.0;
  std::size_t n = array_bytes / sizeof(double);
  auto passes = passes_for(policy, 3 * array_bytes);
  struct Arrays {
    Buffer a, b, c;
  };
  std::vector<Arrays> arr(cores.size());
  auto ticks = run_workers(
      cores, std::max(1, policy.repeats),
      [&](std::size_t w) {
        arr[w] = {alloc_doubles(n), alloc_doubles(n), alloc_doubles(n)};
        for (std::size_t i = 0; i < n; ++i) {
          arr[w].a[i] = 0;
          arr[w].b[i] = 1.0 + static_cast<double>(i % 7);
          arr[w].c[i] = 2.0 + static_cast<double>(i % 5);
        }
      },
      [&](std::size_t w) {
        for (std::uint64_t p = 0; p < passes; ++p) fn(arr[w].a.get(), arr[w].b.get(), arr[w].c.get(), s, n, nontemporal);
      });

  // Spot check about 1% of each core's result, always including both ends.
  Xorshift64 rng(policy.seed);
  std::size_t checks = std::max<std::size_t>(2, static_cast<std::size_t>(policy.verify_fraction * n));
  for (const auto& x : arr)
    for (std::size_t j = 0; j < checks; ++j) {
      std::size_t i = j == 0 ? 0 : j == 1 ? n - 1 : rng.below(n);
      if (x.a[i] != x.b[i] + s * x.c[i]) throw VerificationError("triad mismatch at index " + std::to_string(i));
    }

  double bytes = 3.0 * static_cast<double>(n * sizeof(double)) * static_cast<double>(cores.size()) *
                 static_cast<double>(passes);
  finish(r, ticks, bytes, pinned_mhz(g_, policy, tsc_mhz_), tsc_mhz_);
  return r;
}

}  // namespace memchar
