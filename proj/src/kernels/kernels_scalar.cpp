#include "geofb/kernels.hpp"

namespace geofb::kernels::scalar {

Confusion confusion(const std::uint8_t* pred, const std::uint8_t* ref, std::size_t n) {
  std::uint64_t tp = 0, np = 0, nr = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tp += pred[i] & ref[i];
    np += pred[i];
    nr += ref[i];
  }
  return {tp, np - tp, nr - tp, n - (np + nr - tp)};
}

MaskedSquares masked_sq_diff(const float* a, const float* b, const std::uint8_t* mask,
                             std::size_t n) {
  MaskedSquares r;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i] != 0 && a[i] > 0.0f && b[i] > 0.0f) {
      const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
      r.sum_sq += d * d;
      ++r.count;
    }
  }
  return r;
}

double sq_diff_sum(const float* a, const float* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc;
}

void axpby(float alpha, const float* x, float beta, const float* y, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const float p = alpha * x[i];
    const float q = beta * y[i];
    out[i] = p + q;
  }
}

void threshold(const float* x, float thresh, std::uint8_t* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > thresh ? 1 : 0;
}

std::uint64_t count_nonzero(const std::uint8_t* x, std::size_t n) {
  std::uint64_t c = 0;
  for (std::size_t i = 0; i < n; ++i) c += x[i] != 0;
  return c;
}

}  // namespace geofb::kernels::scalar
