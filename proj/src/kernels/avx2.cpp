#include <immintrin.h>

#include <cstdint>

#include "memchar/kernels.hpp"

namespace memchar::kernels {

namespace {
constexpr int R = 16;
constexpr std::size_t L = 4;
}  // namespace

double read_avx2(const double* p, std::size_t n) {
  __m256d acc[R];
  for (int k = 0; k < R; ++k) acc[k] = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + R * L <= n; i += R * L) {
#pragma GCC unroll 32
    for (int k = 0; k < R; ++k) acc[k] = _mm256_add_pd(acc[k], _mm256_loadu_pd(p + i + k * L));
  }
  alignas(64) double lanes[L];
  double s = 0;
  for (int k = 0; k < R; ++k) {
    _mm256_storeu_pd(lanes, acc[k]);
    for (std::size_t j = 0; j < L; ++j) s += lanes[j];
  }
  for (; i < n; ++i) s += p[i];
  return s;
}

void triad_avx2(double* a, const double* b, const double* c, double s, std::size_t n, bool nontemporal) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  if (nontemporal) {
    // Streaming stores need aligned targets: peel until a is aligned.
    while (i < n && (reinterpret_cast<std::uintptr_t>(a + i) % (L * 8)) != 0) {
      a[i] = b[i] + s * c[i];
      ++i;
    }
    for (; i + L <= n; i += L) _mm256_stream_pd(a + i, _mm256_add_pd(_mm256_loadu_pd(b + i), _mm256_mul_pd(vs, _mm256_loadu_pd(c + i))));
    _mm_sfence();
  } else {
    for (; i + L <= n; i += L) _mm256_storeu_pd(a + i, _mm256_add_pd(_mm256_loadu_pd(b + i), _mm256_mul_pd(vs, _mm256_loadu_pd(c + i))));
  }
  for (; i < n; ++i) a[i] = b[i] + s * c[i];
}

}  // namespace memchar::kernels
