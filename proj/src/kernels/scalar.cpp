#include "memchar/kernels.hpp"

#include "memchar/types.hpp"

namespace memchar::kernels {

std::string_view to_string(Isa i) {
  switch (i) {
    case Isa::scalar: return "scalar";
    case Isa::sse: return "sse";
    case Isa::avx2: return "avx2";
    case Isa::avx512: return "avx512";
  }
  return "?";
}

bool isa_supported(Isa i) {
#if defined(__x86_64__)
  __builtin_cpu_init();
  switch (i) {
    case Isa::scalar: return true;
    case Isa::sse: return __builtin_cpu_supports("sse2");
    case Isa::avx2: return __builtin_cpu_supports("avx2");
    case Isa::avx512: return __builtin_cpu_supports("avx512f");
  }
  return false;
#else
  return i == Isa::scalar;
#endif
}

Isa widest_supported() {
  for (auto i : {Isa::avx512, Isa::avx2, Isa::sse})
    if (isa_supported(i)) return i;
  return Isa::scalar;
}

int burst_registers(Isa i) {
  switch (i) {
    case Isa::scalar: return 8;
    case Isa::sse: return 8;
    case Isa::avx2: return 16;
    case Isa::avx512: return 32;
  }
  return 1;
}

std::size_t burst_doubles(Isa i) {
  std::size_t lanes = i == Isa::avx512 ? 8 : i == Isa::avx2 ? 4 : i == Isa::sse ? 2 : 1;
  return lanes * static_cast<std::size_t>(burst_registers(i));
}

double read_scalar(const double* p, std::size_t n) {
  double acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (int k = 0; k < 8; ++k) acc[k] += p[i + k];
  for (; i < n; ++i) acc[0] += p[i];
  double s = 0;
  for (double a : acc) s += a;
  return s;
}

void triad_scalar(double* a, const double* b, const double* c, double s, std::size_t n, bool) {
  for (std::size_t i = 0; i < n; ++i) a[i] = b[i] + s * c[i];
}

ReadFn read_kernel(Isa i) {
  if (!isa_supported(i)) throw BackendError("instruction set " + std::string(to_string(i)) + " not available");
  switch (i) {
#if defined(__x86_64__)
    case Isa::sse: return read_sse;
    case Isa::avx2: return read_avx2;
    case Isa::avx512: return read_avx512;
#endif
    default: return read_scalar;
  }
}

TriadFn triad_kernel(Isa i) {
  if (!isa_supported(i)) throw BackendError("instruction set " + std::string(to_string(i)) + " not available");
  switch (i) {
#if defined(__x86_64__)
    case Isa::sse: return triad_sse;
    case Isa::avx2: return triad_avx2;
    case Isa::avx512: return triad_avx512;
#endif
    default: return triad_scalar;
  }
}

}  // namespace memchar::kernels
