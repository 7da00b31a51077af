#pragma once

// Data-parallel inner loops used by the reward, metric, and latent code.
//
// Every kernel has a scalar reference implementation plus optional AVX2
// (x86-64) and NEON (aarch64) variants. The variant is picked once at
// first use from the running CPU; GEOFB_ISA=scalar|avx2|neon in the
// environment overrides the choice. Integer kernels and axpby/threshold are
// bit-identical across variants; double-accumulating reductions agree to
// rounding (summation order differs).

#include <cstddef>
#include <cstdint>
#include <span>

namespace geofb::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

const char* to_string(Isa isa);

// The ISA currently used by the dispatching entry points below.
Isa active_isa();
// Whether `isa` is compiled in and supported by this CPU.
bool isa_available(Isa isa);
// Pin dispatch to `isa` (tests). Throws InvalidArgumentError if unavailable.
void force_isa(Isa isa);
void reset_isa();

// Pixel/voxel confusion counts for {0,1}-valued inputs of equal length.
struct Confusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

// Squared-difference sum over positions where mask != 0 and both a > 0 and
// b > 0 (0 is the "undefined depth" sentinel).
struct MaskedSquares {
  double sum_sq = 0.0;
  std::uint64_t count = 0;
};

Confusion confusion(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> ref);
MaskedSquares masked_sq_diff(std::span<const float> a, std::span<const float> b,
                             std::span<const std::uint8_t> mask);
double sq_diff_sum(std::span<const float> a, std::span<const float> b);
// out = alpha * x + beta * y, evaluated as two rounded products and one
// rounded sum (no FMA) so every variant produces identical bits.
void axpby(float alpha, std::span<const float> x, float beta, std::span<const float> y,
           std::span<float> out);
// out[i] = x[i] > thresh ? 1 : 0
void threshold(std::span<const float> x, float thresh, std::span<std::uint8_t> out);
std::uint64_t count_nonzero(std::span<const std::uint8_t> x);

// Per-ISA entry points. Lengths are assumed already validated.
namespace scalar {
Confusion confusion(const std::uint8_t* pred, const std::uint8_t* ref, std::size_t n);
MaskedSquares masked_sq_diff(const float* a, const float* b, const std::uint8_t* mask,
                             std::size_t n);
double sq_diff_sum(const float* a, const float* b, std::size_t n);
void axpby(float alpha, const float* x, float beta, const float* y, float* out, std::size_t n);
void threshold(const float* x, float thresh, std::uint8_t* out, std::size_t n);
std::uint64_t count_nonzero(const std::uint8_t* x, std::size_t n);
}  // namespace scalar

#if defined(GEOFB_HAVE_AVX2)
namespace avx2 {
Confusion confusion(const std::uint8_t* pred, const std::uint8_t* ref, std::size_t n);
MaskedSquares masked_sq_diff(const float* a, const float* b, const std::uint8_t* mask,
                             std::size_t n);
double sq_diff_sum(const float* a, const float* b, std::size_t n);
void axpby(float alpha, const float* x, float beta, const float* y, float* out, std::size_t n);
void threshold(const float* x, float thresh, std::uint8_t* out, std::size_t n);
std::uint64_t count_nonzero(const std::uint8_t* x, std::size_t n);
}  // namespace avx2
#endif

#if defined(GEOFB_HAVE_NEON)
namespace neon {
Confusion confusion(const std::uint8_t* pred, const std::uint8_t* ref, std::size_t n);
MaskedSquares masked_sq_diff(const float* a, const float* b, const std::uint8_t* mask,
                             std::size_t n);
double sq_diff_sum(const float* a, const float* b, std::size_t n);
void axpby(float alpha, const float* x, float beta, const float* y, float* out, std::size_t n);
void threshold(const float* x, float thresh, std::uint8_t* out, std::size_t n);
std::uint64_t count_nonzero(const std::uint8_t* x, std::size_t n);
}  // namespace neon
#endif

}  // namespace geofb::kernels
