#include <immintrin.h>

#include <cstdint>

#include "memchar/kernels.hpp"

namespace memchar::kernels {

namespace {
constexpr int R = 8;
constexpr std::size_t L = 2;
}  // namespace

double read_sse(const double* p, std::size_t n) {
  __m128d acc[R];
  for (int k = 0; k < R; ++k) acc[k] = _mm_setzero_pd();
  std::size_t i = 0;
  for (; i + R * L <= n; i += R * L) {
#pragma GCC unroll 32
    for (int k = 0; k < R; ++k) acc[k] = _mm_add_pd(acc[k], _mm_loadu_pd(p + i + k * L));
  }
  alignas(64) double lanes[L];
  double s = 0;
  for (int k = 0; k < R; ++k) {
    _mm_storeu_pd(lanes, acc[k]);
    for (std::size_t j = 0; j < L; ++j) s += lanes[j];
  }
  for (; i < n; ++i) s += p[i];
  return s;
}

void triad_sse(double* a, const double* b, const double* c, double s, std::size_t n, bool nontemporal) {
  const __m128d vs = _mm_set1_pd(s);
  std::size_t i = 0;
  if (nontemporal) {
    // Streaming stores need aligned targets: peel until a is aligned.
    while (i < n && (reinterpret_cast<std::uintptr_t>(a + i) % (L * 8)) != 0) {
      a[i] = b[i] + s * c[i];
      ++i;
    }
    for (; i + L <= n; i += L) _mm_stream_pd(a + i, _mm_add_pd(_mm_loadu_pd(b + i), _mm_mul_pd(vs, _mm_loadu_pd(c + i))));
    _mm_sfence();
  } else {
    for (; i + L <= n; i += L) _mm_storeu_pd(a + i, _mm_add_pd(_mm_loadu_pd(b + i), _mm_mul_pd(vs, _mm_loadu_pd(c + i))));
  }
  for (; i < n; ++i) a[i] = b[i] + s * c[i];
}

}  // namespace memchar::kernels
