#include <immintrin.h>

#include "kernels_impl.hpp"

namespace qgd::kernels::avx2 {

// Two complex values per register: [re0, im0, re1, im1].
void multiply(cplx* psi, const cplx* phase, std::size_t n) {
  double* a = reinterpret_cast<double*>(psi);
  const double* b = reinterpret_cast<const double*>(phase);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d va = _mm256_loadu_pd(a + 2 * i);
    const __m256d vb = _mm256_loadu_pd(b + 2 * i);
    const __m256d b_re = _mm256_movedup_pd(vb);
    const __m256d b_im = _mm256_permute_pd(vb, 0xF);
    const __m256d a_sw = _mm256_permute_pd(va, 0x5);
    const __m256d r = _mm256_fmaddsub_pd(va, b_re, _mm256_mul_pd(a_sw, b_im));
    _mm256_storeu_pd(a + 2 * i, r);
  }
  if (i < n) scalar::multiply(psi + i, phase + i, n - i);
}

void scale(cplx* psi, double s, std::size_t n) {
  double* a = reinterpret_cast<double*>(psi);
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    _mm256_storeu_pd(a + 2 * i, _mm256_mul_pd(_mm256_loadu_pd(a + 2 * i), vs));
  }
  if (i < n) scalar::scale(psi + i, s, n - i);
}

namespace {
double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}
}  // namespace

Moments moments(const cplx* psi, const double* w1, const double* w2, const double* w3,
                std::size_t n) {
  const double* a = reinterpret_cast<const double*>(psi);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(a + 2 * i);
    const __m256d y = _mm256_loadu_pd(a + 2 * i + 4);
    // hadd gives [d0, d2, d1, d3]; reorder to [d0, d1, d2, d3].
    const __m256d h = _mm256_hadd_pd(_mm256_mul_pd(x, x), _mm256_mul_pd(y, y));
    const __m256d d = _mm256_permute4x64_pd(h, 0xD8);
    acc0 = _mm256_add_pd(acc0, d);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(w1 + i), d, acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(w2 + i), d, acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(w3 + i), d, acc3);
  }
  Moments m;
  m.s0 = hsum(acc0);
  m.s1 = hsum(acc1);
  m.s2 = hsum(acc2);
  m.s3 = hsum(acc3);
  if (i < n) {
    const Moments tail = scalar::moments(psi + i, w1 + i, w2 + i, w3 + i, n - i);
    m.s0 += tail.s0;
    m.s1 += tail.s1;
    m.s2 += tail.s2;
    m.s3 += tail.s3;
  }
  return m;
}

}  // namespace qgd::kernels::avx2
