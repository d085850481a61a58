#include <pthread.h>
#include <sched.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <functional>
#include <map>
#include <mutex>
#include <thread>

#include "memchar/harness.hpp"
#include "tsc.hpp"

namespace memchar {

namespace {

volatile std::uintptr_t g_sink;

using tsc::flush_line;
using tsc::fence;
inline std::uint64_t tsc_begin() { return tsc::begin(); }
inline std::uint64_t tsc_end() { return tsc::end(); }

long double elapsed(const TimerSample& s) {
  if (s.end_tsc < s.start_tsc) throw BackendError("timer went backwards");
  return static_cast<long double>(s.end_tsc - s.start_tsc);
}

// Dependent loads: each address comes from the previous load.
__attribute__((noinline)) TimerSample chase(void* start, std::size_t n) {
  TimerSample s;
  void* p = start;
  s.start_tsc = tsc_begin();
  asm volatile("" ::: "memory");
  for (std::size_t i = 0; i < n; ++i) p = *static_cast<void* volatile*>(p);
  asm volatile("" ::: "memory");
  s.end_tsc = tsc_end();
  g_sink = reinterpret_cast<std::uintptr_t>(p);
  return s;
}

// One pinned thread that runs tasks handed to it, one at a time.
class PinnedWorker {
 public:
  explicit PinnedWorker(int cpu) : cpu_(cpu), thread_([this] { loop(); }) {
    std::unique_lock lk(mu_);
    cv_.wait(lk, [this] { return started_; });
    if (!pin_error_.empty()) {
      lk.unlock();
      stop();
      throw PinningError(pin_error_);
    }
  }
  ~PinnedWorker() { stop(); }

  void run(const std::function<void()>& fn) {
    std::unique_lock lk(mu_);
    task_ = &fn;
    error_ = nullptr;
    cv_.notify_all();
    cv_.wait(lk, [this] { return task_ == nullptr; });
    if (error_) std::rethrow_exception(error_);
  }

 private:
  void stop() {
    {
      std::lock_guard lk(mu_);
      quit_ = true;
      cv_.notify_all();
    }
    if (thread_.joinable()) thread_.join();
  }

  void loop() {
    cpu_set_t set;
    CPU_ZERO(&set);
    CPU_SET(cpu_, &set);
    int rc = pthread_setaffinity_np(pthread_self(), sizeof(set), &set);
    std::unique_lock lk(mu_);
    if (rc != 0) pin_error_ = "cannot pin to cpu " + std::to_string(cpu_) + ": " + std::strerror(rc);
    started_ = true;
    cv_.notify_all();
    if (rc != 0) return;
    for (;;) {
      cv_.wait(lk, [this] { return quit_ || task_ != nullptr; });
      if (quit_) return;
      try {
        (*task_)();
      } catch (...) {
        error_ = std::current_exception();
      }
      task_ = nullptr;
      cv_.notify_all();
    }
  }

  int cpu_;
  std::mutex mu_;
  std::condition_variable cv_;
  const std::function<void()>* task_ = nullptr;
  std::exception_ptr error_;
  bool started_ = false;
  bool quit_ = false;
  std::string pin_error_;
  std::thread thread_;
};

}  // namespace

int host_cpu_count() { return static_cast<int>(sysconf(_SC_NPROCESSORS_ONLN)); }

double measure_tsc_mhz() {
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  std::uint64_t c0 = tsc_begin();
  while (clock::now() - t0 < std::chrono::milliseconds(50)) {
  }
  std::uint64_t c1 = tsc_end();
  auto t1 = clock::now();
  double us = std::chrono::duration<double, std::micro>(t1 - t0).count();
  if (!(us > 0) || c1 <= c0) throw BackendError("cannot measure the TSC frequency");
  return static_cast<double>(c1 - c0) / us;
}

struct NativeBackend::Impl {
  std::map<int, std::unique_ptr<PinnedWorker>> workers;
  std::map<std::tuple<std::size_t, std::size_t, std::uint64_t, bool, int>, ChainBuffer> chains;
  std::vector<char> scratch;

  PinnedWorker& worker(int core) {
    auto it = workers.find(core);
    if (it == workers.end()) {
      if (core < 0 || core >= host_cpu_count())
        throw PinningError("core " + std::to_string(core) + " does not exist on this host");
      it = workers.emplace(core, std::make_unique<PinnedWorker>(core)).first;
    }
    return *it->second;
  }

  ChainBuffer& chain(const ChainSpec& c, int requester) {
    auto key = std::make_tuple(c.bytes, c.alignment, c.seed, c.huge_pages, c.numa_node);
    auto it = chains.find(key);
    if (it != chains.end()) return it->second;
    if (chains.size() >= 8) chains.clear();
    ChainOptions opts;
    opts.huge_pages = c.huge_pages;
    if (c.numa_node >= 0) opts.numa_node = c.numa_node;
    auto buf = generate_chain(c.bytes, c.alignment, c.seed, opts);
    auto& b = chains.emplace(key, std::move(buf)).first->second;
    // Warm-up: touch every page, then one untimed traversal on the requester.
    worker(requester).run([&] {
      for (std::size_t i = 0; i < b.element_count(); ++i) g_sink = reinterpret_cast<std::uintptr_t>(*b.element(i));
      chase(b.element(0), b.element_count());
    });
    return b;
  }

  void touch_scratch(std::size_t bytes) {
    if (scratch.size() < bytes) scratch.assign(bytes, 0);
    for (std::size_t i = 0; i < bytes; i += 64) scratch[i] = static_cast<char>(scratch[i] + 1);
  }
};

nlohmann::json host_topology_document() {
  int n = host_cpu_count();
  auto cache = [](int name, std::uint64_t fallback) {
    long v = sysconf(name);
    return v > 0 ? static_cast<std::uint64_t>(v) : fallback;
  };
  nlohmann::json row = nlohmann::json::array();
  std::vector<int> cores;
  for (int c = 0; c < n; ++c) {
    row.push_back(std::to_string(c));
    cores.push_back(c);
  }
  double mhz = measure_tsc_mhz();
  return {{"schema", "memchar-topology/1"},
          {"name", "host"},
          {"kind", "mesh_2d"},
          {"protocol", "MESIF"},
          {"frequencies", {{"core_mhz", mhz}, {"uncore_mhz", mhz}}},
          {"caches",
           {{"l1_bytes", cache(_SC_LEVEL1_DCACHE_SIZE, 32768)},
            {"l2_bytes", cache(_SC_LEVEL2_CACHE_SIZE, 1 << 20)},
            {"l3_bytes", cache(_SC_LEVEL3_CACHE_SIZE, 8 << 20)}}},
          {"link_costs", {{"mesh_hop", "1@uncore"}, {"local", "0@core"}}},
          {"sockets",
           {{{"id", 0},
             {"grid", {{"rows", 1}, {"cols", n}, {"io_rows", nlohmann::json::array()}, {"tiles", {row}}}},
             {"numa_nodes", {{{"id", 0}, {"cores", cores}}}}}}}};
}

NativeBackend::NativeBackend(const TopologyGraph& g) : g_(g), impl_(std::make_unique<Impl>()) {
  tsc_mhz_ = measure_tsc_mhz();
}

NativeBackend::~NativeBackend() = default;

long double NativeBackend::empty_timing() {
  TimerSample s;
  s.start_tsc = tsc_begin();
  asm volatile("" ::: "memory");
  s.end_tsc = tsc_end();
  return elapsed(s);
}

long double NativeBackend::timed_run(const ChainSpec& spec, const CoherenceScript& script, const Placement& p,
                                     const MeasurementPolicy& policy) {
  auto& b = impl_->chain(spec, p.requester);
  const std::size_t n = b.element_count();
  auto flush_all = [&] {
    for (std::size_t i = 0; i < n; ++i) flush_line(b.element(i));
    fence();
  };

  auto plan = flush_plan(g_, policy.flush_levels);
  if (!plan.levels.empty())
    impl_->worker(p.requester).run([&] {
      flush_all();
      impl_->touch_scratch(plan.scratch_bytes);
    });

  for (const auto& st : script.steps) {
    int core = script.core_of(st.worker);
    impl_->worker(core).run([&] {
      switch (st.action) {
        case Action::read:
          for (std::size_t i = 0; i < n; ++i) g_sink = reinterpret_cast<std::uintptr_t>(*b.element(i));
          break;
        case Action::write:
          // Store the successor back in place so the chain stays intact.
          for (std::size_t i = 0; i < n; ++i) *static_cast<void* volatile*>(b.element(i)) = *b.element(i);
          break;
        case Action::flush: flush_all(); break;
        case Action::evict: {
          std::size_t bytes = 2 * g_.caches.l1_bytes;
          if (st.level != CacheLevel::L1) bytes += 2 * g_.caches.l2_bytes;
          if (st.level == CacheLevel::L3)
            flush_all();
          else
            impl_->touch_scratch(bytes);
          break;
        }
      }
    });
  }

  TimerSample s;
  impl_->worker(p.requester).run([&] { s = chase(b.element(0), n); });
  return elapsed(s);
}

}  // namespace memchar
