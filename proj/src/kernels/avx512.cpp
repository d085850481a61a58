#include <immintrin.h>

#include <cstdint>

#include "memchar/kernels.hpp"

namespace memchar::kernels {

namespace {
constexpr int R = 32;
constexpr std::size_t L = 8;
}  // namespace

double read_avx512(const double* p, std::size_t n) {
  __m512d acc[R];
  for (int k = 0; k < R; ++k) acc[k] = _mm512_setzero_pd();
  std::size_t i = 0;
  for (; i + R * L <= n; i += R * L) {
#pragma GCC unroll 32
    for (int k = 0; k < R; ++k) acc[k] = _mm512_add_pd(acc[k], _mm512_loadu_pd(p + i + k * L));
  }
  alignas(64) double lanes[L];
  double s = 0;
  for (int k = 0; k < R; ++k) {
    _mm512_storeu_pd(lanes, acc[k]);
    for (std::size_t j = 0; j < L; ++j) s += lanes[j];
  }
  for (; i < n; ++i) s += p[i];
  return s;
}

void triad_avx512(double* a, const double* b, const double* c, double s, std::size_t n, bool nontemporal) {
  const __m512d vs = _mm512_set1_pd(s);
  std::size_t i = 0;
  if (nontemporal) {
    // Streaming stores need aligned targets: peel until a is aligned.
    while (i < n && (reinterpret_cast<std::uintptr_t>(a + i) % (L * 8)) != 0) {
      a[i] = b[i] + s * c[i];
      ++i;
    }
    for (; i + L <= n; i += L) _mm512_stream_pd(a + i, _mm512_add_pd(_mm512_loadu_pd(b + i), _mm512_mul_pd(vs, _mm512_loadu_pd(c + i))));
    _mm_sfence();
  } else {
    for (; i + L <= n; i += L) _mm512_storeu_pd(a + i, _mm512_add_pd(_mm512_loadu_pd(b + i), _mm512_mul_pd(vs, _mm512_loadu_pd(c + i))));
  }
  for (; i < n; ++i) a[i] = b[i] + s * c[i];
}

}  // namespace memchar::kernels
