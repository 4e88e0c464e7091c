// AVX2 variants. Compiled with a per-function target attribute so the rest of
// the build stays baseline x86-64; callers must check avx2_supported() first.
// FMA is deliberately not enabled: argmin must reproduce the scalar rounding.

#include "hvsim/simd/kernels.hpp"

#if HVSIM_HAVE_AVX2_KERNELS

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <limits>

#define HVSIM_AVX2 __attribute__((target("avx2")))

namespace hvsim::simd::avx2 {

namespace {

HVSIM_AVX2 inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

HVSIM_AVX2 inline __m256d abs_pd(__m256d v) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

}  // namespace

HVSIM_AVX2 double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

HVSIM_AVX2 ResidualSums residual_sums(const double* pred, const double* truth, std::size_t n) {
  __m256d sq = _mm256_setzero_pd();
  __m256d ab = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_sub_pd(_mm256_loadu_pd(pred + i), _mm256_loadu_pd(truth + i));
    sq = _mm256_add_pd(sq, _mm256_mul_pd(r, r));
    ab = _mm256_add_pd(ab, abs_pd(r));
  }
  ResidualSums out{hsum(sq), hsum(ab)};
  for (; i < n; ++i) {
    const double r = pred[i] - truth[i];
    out.sum_sq += r * r;
    out.sum_abs += std::fabs(r);
  }
  return out;
}

HVSIM_AVX2 std::size_t argmin_sq_dist(const double* xs, const double* ys, std::size_t n, double px, double py) {
  if (n == 0) return 0;
  const __m256d vx = _mm256_set1_pd(px);
  const __m256d vy = _mm256_set1_pd(py);
  __m256d best = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(vx, _mm256_loadu_pd(xs + i));
    const __m256d dy = _mm256_sub_pd(vy, _mm256_loadu_pd(ys + i));
    const __m256d d = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
    best = _mm256_min_pd(best, d);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, best);
  double best_d = std::min(std::min(lanes[0], lanes[1]), std::min(lanes[2], lanes[3]));
  for (std::size_t k = i; k < n; ++k) {
    const double dx = px - xs[k];
    const double dy = py - ys[k];
    best_d = std::min(best_d, dx * dx + dy * dy);
  }
  // Second pass locates the first index attaining the minimum.
  const __m256d target = _mm256_set1_pd(best_d);
  i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(vx, _mm256_loadu_pd(xs + i));
    const __m256d dy = _mm256_sub_pd(vy, _mm256_loadu_pd(ys + i));
    const __m256d d = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
    const int mask = _mm256_movemask_pd(_mm256_cmp_pd(d, target, _CMP_EQ_OQ));
    if (mask != 0) return i + static_cast<std::size_t>(__builtin_ctz(static_cast<unsigned>(mask)));
  }
  for (; i < n; ++i) {
    const double dx = px - xs[i];
    const double dy = py - ys[i];
    if (dx * dx + dy * dy == best_d) return i;
  }
  // Only reachable when every distance is NaN.
  return 0;
}

}  // namespace hvsim::simd::avx2

#endif
