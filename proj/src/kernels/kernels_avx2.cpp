// AVX2 variants. This translation unit is built with -mavx2 (no -mfma) and is
// only entered after the dispatcher has confirmed CPU support.

#include <immintrin.h>

#include <bit>

#include "geofb/kernels.hpp"

namespace geofb::kernels::avx2 {

namespace {

inline std::uint64_t hsum_epi64(__m256i v) {
  alignas(32) std::uint64_t lanes[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), v);
  return lanes[0] + lanes[1] + lanes[2] + lanes[3];
}

inline double hsum_pd(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Squared difference of 8 floats widened to two 4-wide double vectors.
inline void sq_diff_pd(__m256 a, __m256 b, __m256d& lo, __m256d& hi) {
  const __m256d dlo = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(a)),
                                    _mm256_cvtps_pd(_mm256_castps256_ps128(b)));
  const __m256d dhi = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(a, 1)),
                                    _mm256_cvtps_pd(_mm256_extractf128_ps(b, 1)));
  lo = _mm256_mul_pd(dlo, dlo);
  hi = _mm256_mul_pd(dhi, dhi);
}

}  // namespace

Confusion confusion(const std::uint8_t* pred, const std::uint8_t* ref, std::size_t n) {
  const __m256i zero = _mm256_setzero_si256();
  __m256i acc_tp = zero, acc_p = zero, acc_r = zero;
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i p = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(pred + i));
    const __m256i r = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(ref + i));
    acc_tp = _mm256_add_epi64(acc_tp, _mm256_sad_epu8(_mm256_and_si256(p, r), zero));
    acc_p = _mm256_add_epi64(acc_p, _mm256_sad_epu8(p, zero));
    acc_r = _mm256_add_epi64(acc_r, _mm256_sad_epu8(r, zero));
  }
  std::uint64_t tp = hsum_epi64(acc_tp), np = hsum_epi64(acc_p), nr = hsum_epi64(acc_r);
  for (; i < n; ++i) {
    tp += pred[i] & ref[i];
    np += pred[i];
    nr += ref[i];
  }
  return {tp, np - tp, nr - tp, n - (np + nr - tp)};
}

MaskedSquares masked_sq_diff(const float* a, const float* b, const std::uint8_t* mask,
                             std::size_t n) {
  const __m256 fzero = _mm256_setzero_ps();
  const __m256i izero = _mm256_setzero_si256();
  __m256d acc_lo = _mm256_setzero_pd(), acc_hi = _mm256_setzero_pd();
  std::uint64_t count = 0;
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 va = _mm256_loadu_ps(a + i);
    const __m256 vb = _mm256_loadu_ps(b + i);
    const __m256i m32 =
        _mm256_cvtepu8_epi32(_mm_loadl_epi64(reinterpret_cast<const __m128i*>(mask + i)));
    const __m256 mset = _mm256_castsi256_ps(
        _mm256_xor_si256(_mm256_cmpeq_epi32(m32, izero), _mm256_set1_epi32(-1)));
    const __m256 valid = _mm256_and_ps(
        mset, _mm256_and_ps(_mm256_cmp_ps(va, fzero, _CMP_GT_OQ), _mm256_cmp_ps(vb, fzero, _CMP_GT_OQ)));
    const int bits = _mm256_movemask_ps(valid);
    if (bits == 0) continue;
    count += static_cast<std::uint64_t>(std::popcount(static_cast<unsigned>(bits)));
    const __m256i vi = _mm256_castps_si256(valid);
    const __m256d mlo = _mm256_castsi256_pd(_mm256_cvtepi32_epi64(_mm256_castsi256_si128(vi)));
    const __m256d mhi = _mm256_castsi256_pd(_mm256_cvtepi32_epi64(_mm256_extracti128_si256(vi, 1)));
    __m256d lo, hi;
    sq_diff_pd(va, vb, lo, hi);
    acc_lo = _mm256_add_pd(acc_lo, _mm256_and_pd(lo, mlo));
    acc_hi = _mm256_add_pd(acc_hi, _mm256_and_pd(hi, mhi));
  }
  MaskedSquares r;
  r.sum_sq = hsum_pd(_mm256_add_pd(acc_lo, acc_hi));
  r.count = count;
  for (; i < n; ++i) {
    if (mask[i] != 0 && a[i] > 0.0f && b[i] > 0.0f) {
      const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
      r.sum_sq += d * d;
      ++r.count;
    }
  }
  return r;
}

double sq_diff_sum(const float* a, const float* b, std::size_t n) {
  __m256d acc_lo = _mm256_setzero_pd(), acc_hi = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d lo, hi;
    sq_diff_pd(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), lo, hi);
    acc_lo = _mm256_add_pd(acc_lo, lo);
    acc_hi = _mm256_add_pd(acc_hi, hi);
  }
  double acc = hsum_pd(_mm256_add_pd(acc_lo, acc_hi));
  for (; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc;
}

void axpby(float alpha, const float* x, float beta, const float* y, float* out, std::size_t n) {
  const __m256 va = _mm256_set1_ps(alpha);
  const __m256 vb = _mm256_set1_ps(beta);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 p = _mm256_mul_ps(va, _mm256_loadu_ps(x + i));
    const __m256 q = _mm256_mul_ps(vb, _mm256_loadu_ps(y + i));
    _mm256_storeu_ps(out + i, _mm256_add_ps(p, q));
  }
  for (; i < n; ++i) {
    const float p = alpha * x[i];
    const float q = beta * y[i];
    out[i] = p + q;
  }
}

void threshold(const float* x, float thresh, std::uint8_t* out, std::size_t n) {
  const __m256 vt = _mm256_set1_ps(thresh);
  const __m256i one = _mm256_set1_epi32(1);
  const __m256i order = _mm256_setr_epi32(0, 4, 1, 5, 2, 6, 3, 7);
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    __m256i c[4];
    for (int j = 0; j < 4; ++j) {
      const __m256 gt = _mm256_cmp_ps(_mm256_loadu_ps(x + i + 8 * j), vt, _CMP_GT_OQ);
      c[j] = _mm256_and_si256(_mm256_castps_si256(gt), one);
    }
    const __m256i p01 = _mm256_packs_epi32(c[0], c[1]);
    const __m256i p23 = _mm256_packs_epi32(c[2], c[3]);
    const __m256i bytes = _mm256_permutevar8x32_epi32(_mm256_packus_epi16(p01, p23), order);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i), bytes);
  }
  for (; i < n; ++i) out[i] = x[i] > thresh ? 1 : 0;
}

std::uint64_t count_nonzero(const std::uint8_t* x, std::size_t n) {
  const __m256i zero = _mm256_setzero_si256();
  std::uint64_t c = 0;
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(x + i));
    const auto zeros = static_cast<unsigned>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(v, zero)));
    c += 32 - static_cast<std::uint64_t>(std::popcount(zeros));
  }
  for (; i < n; ++i) c += x[i] != 0;
  return c;
}

}  // namespace geofb::kernels::avx2
