#pragma once

#include <atomic>
#include <cstdint>

#if defined(__x86_64__)
#include <x86intrin.h>
#endif

#include "memchar/types.hpp"

namespace memchar::tsc {

#if defined(__x86_64__)
inline std::uint64_t begin() {
  _mm_mfence();
  _mm_lfence();
  std::uint64_t t = __rdtsc();
  _mm_lfence();
  return t;
}

inline std::uint64_t end() {
  unsigned aux;
  std::uint64_t t = __rdtscp(&aux);
  _mm_lfence();
  return t;
}

inline void flush_line(const void* p) { _mm_clflush(p); }
inline void fence() { _mm_mfence(); }
#else
[[noreturn]] inline std::uint64_t unsupported() { throw BackendError("native backend needs an x86-64 TSC"); }
inline std::uint64_t begin() { unsupported(); }
inline std::uint64_t end() { unsupported(); }
inline void flush_line(const void*) {}
inline void fence() { std::atomic_thread_fence(std::memory_order_seq_cst); }
#endif

}  // namespace memchar::tsc
