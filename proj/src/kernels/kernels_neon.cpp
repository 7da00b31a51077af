// NEON variants for aarch64, where Advanced SIMD is part of the baseline ISA.

#include <arm_neon.h>

#include "geofb/kernels.hpp"

namespace geofb::kernels::neon {

Confusion confusion(const std::uint8_t* pred, const std::uint8_t* ref, std::size_t n) {
  std::uint64_t tp = 0, np = 0, nr = 0;
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    const uint8x16_t p = vld1q_u8(pred + i);
    const uint8x16_t r = vld1q_u8(ref + i);
    tp += vaddlvq_u8(vandq_u8(p, r));
    np += vaddlvq_u8(p);
    nr += vaddlvq_u8(r);
  }
  for (; i < n; ++i) {
    tp += pred[i] & ref[i];
    np += pred[i];
    nr += ref[i];
  }
  return {tp, np - tp, nr - tp, n - (np + nr - tp)};
}

MaskedSquares masked_sq_diff(const float* a, const float* b, const std::uint8_t* mask,
                             std::size_t n) {
  const float32x4_t zero = vdupq_n_f32(0.0f);
  float64x2_t acc0 = vdupq_n_f64(0.0), acc1 = vdupq_n_f64(0.0);
  std::uint64_t count = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t va = vld1q_f32(a + i);
    const float32x4_t vb = vld1q_f32(b + i);
    const uint32x4_t m = {mask[i] ? 0xFFFFFFFFu : 0u, mask[i + 1] ? 0xFFFFFFFFu : 0u,
                          mask[i + 2] ? 0xFFFFFFFFu : 0u, mask[i + 3] ? 0xFFFFFFFFu : 0u};
    const uint32x4_t valid = vandq_u32(m, vandq_u32(vcgtq_f32(va, zero), vcgtq_f32(vb, zero)));
    count += vaddvq_u32(vshrq_n_u32(valid, 31));
    const float64x2_t dlo = vsubq_f64(vcvt_f64_f32(vget_low_f32(va)), vcvt_f64_f32(vget_low_f32(vb)));
    const float64x2_t dhi = vsubq_f64(vcvt_high_f64_f32(va), vcvt_high_f64_f32(vb));
    const uint64x2_t mlo = vmovl_u32(vget_low_u32(valid));
    const uint64x2_t mhi = vmovl_high_u32(valid);
    const uint64x2_t wlo = vreinterpretq_u64_s64(vnegq_s64(vreinterpretq_s64_u64(vshrq_n_u64(mlo, 31))));
    const uint64x2_t whi = vreinterpretq_u64_s64(vnegq_s64(vreinterpretq_s64_u64(vshrq_n_u64(mhi, 31))));
    acc0 = vaddq_f64(acc0, vreinterpretq_f64_u64(vandq_u64(vreinterpretq_u64_f64(vmulq_f64(dlo, dlo)), wlo)));
    acc1 = vaddq_f64(acc1, vreinterpretq_f64_u64(vandq_u64(vreinterpretq_u64_f64(vmulq_f64(dhi, dhi)), whi)));
  }
  MaskedSquares r;
  r.sum_sq = vaddvq_f64(vaddq_f64(acc0, acc1));
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
  float64x2_t acc0 = vdupq_n_f64(0.0), acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t va = vld1q_f32(a + i);
    const float32x4_t vb = vld1q_f32(b + i);
    const float64x2_t dlo = vsubq_f64(vcvt_f64_f32(vget_low_f32(va)), vcvt_f64_f32(vget_low_f32(vb)));
    const float64x2_t dhi = vsubq_f64(vcvt_high_f64_f32(va), vcvt_high_f64_f32(vb));
    acc0 = vaddq_f64(acc0, vmulq_f64(dlo, dlo));
    acc1 = vaddq_f64(acc1, vmulq_f64(dhi, dhi));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc;
}

void axpby(float alpha, const float* x, float beta, const float* y, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    // vmulq + vaddq, never vfmaq: must match the scalar rounding exactly.
    const float32x4_t p = vmulq_n_f32(vld1q_f32(x + i), alpha);
    const float32x4_t q = vmulq_n_f32(vld1q_f32(y + i), beta);
    vst1q_f32(out + i, vaddq_f32(p, q));
  }
  for (; i < n; ++i) {
    const float p = alpha * x[i];
    const float q = beta * y[i];
    out[i] = p + q;
  }
}

void threshold(const float* x, float thresh, std::uint8_t* out, std::size_t n) {
  const float32x4_t vt = vdupq_n_f32(thresh);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const uint32x4_t c0 = vshrq_n_u32(vcgtq_f32(vld1q_f32(x + i), vt), 31);
    const uint32x4_t c1 = vshrq_n_u32(vcgtq_f32(vld1q_f32(x + i + 4), vt), 31);
    const uint16x8_t h = vcombine_u16(vmovn_u32(c0), vmovn_u32(c1));
    vst1_u8(out + i, vmovn_u16(h));
  }
  for (; i < n; ++i) out[i] = x[i] > thresh ? 1 : 0;
}

std::uint64_t count_nonzero(const std::uint8_t* x, std::size_t n) {
  std::uint64_t c = 0;
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    const uint8x16_t nz = vshrq_n_u8(vtstq_u8(vld1q_u8(x + i), vld1q_u8(x + i)), 7);
    c += vaddlvq_u8(nz);
  }
  for (; i < n; ++i) c += x[i] != 0;
  return c;
}

}  // namespace geofb::kernels::neon
