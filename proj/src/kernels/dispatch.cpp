#include <atomic>
#include <cstdlib>
#include <string>
#include <string_view>

#include "geofb/error.hpp"
#include "geofb/kernels.hpp"

namespace geofb::kernels {

namespace {

struct Table {
  Confusion (*confusion)(const std::uint8_t*, const std::uint8_t*, std::size_t);
  MaskedSquares (*masked_sq_diff)(const float*, const float*, const std::uint8_t*, std::size_t);
  double (*sq_diff_sum)(const float*, const float*, std::size_t);
  void (*axpby)(float, const float*, float, const float*, float*, std::size_t);
  void (*threshold)(const float*, float, std::uint8_t*, std::size_t);
  std::uint64_t (*count_nonzero)(const std::uint8_t*, std::size_t);
};

constexpr Table kScalar{scalar::confusion, scalar::masked_sq_diff, scalar::sq_diff_sum,
                        scalar::axpby,     scalar::threshold,      scalar::count_nonzero};
#if defined(GEOFB_HAVE_AVX2)
constexpr Table kAvx2{avx2::confusion, avx2::masked_sq_diff, avx2::sq_diff_sum,
                      avx2::axpby,     avx2::threshold,      avx2::count_nonzero};
#endif
#if defined(GEOFB_HAVE_NEON)
constexpr Table kNeon{neon::confusion, neon::masked_sq_diff, neon::sq_diff_sum,
                      neon::axpby,     neon::threshold,      neon::count_nonzero};
#endif

const Table& table_for(Isa isa) {
  switch (isa) {
#if defined(GEOFB_HAVE_AVX2)
    case Isa::kAvx2: return kAvx2;
#endif
#if defined(GEOFB_HAVE_NEON)
    case Isa::kNeon: return kNeon;
#endif
    default: return kScalar;
  }
}

Isa detect() {
  if (const char* env = std::getenv("GEOFB_ISA")) {
    const std::string_view want(env);
    if (want == "scalar") return Isa::kScalar;
    if (want == "avx2" && isa_available(Isa::kAvx2)) return Isa::kAvx2;
    if (want == "neon" && isa_available(Isa::kNeon)) return Isa::kNeon;
  }
  if (isa_available(Isa::kAvx2)) return Isa::kAvx2;
  if (isa_available(Isa::kNeon)) return Isa::kNeon;
  return Isa::kScalar;
}

std::atomic<int>& current() {
  static std::atomic<int> isa{static_cast<int>(detect())};
  return isa;
}

const Table& active() { return table_for(static_cast<Isa>(current().load(std::memory_order_relaxed))); }

template <class A, class B>
void require_same(const A& a, const B& b, const char* what) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(what) + ": length mismatch " + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()));
  }
}

}  // namespace

const char* to_string(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return true;
    case Isa::kAvx2:
#if defined(GEOFB_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::kNeon:
#if defined(GEOFB_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() { return static_cast<Isa>(current().load(std::memory_order_relaxed)); }

void force_isa(Isa isa) {
  if (!isa_available(isa)) {
    throw InvalidArgumentError(std::string("ISA not available: ") + to_string(isa));
  }
  current().store(static_cast<int>(isa), std::memory_order_relaxed);
}

void reset_isa() { current().store(static_cast<int>(detect()), std::memory_order_relaxed); }

Confusion confusion(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> ref) {
  require_same(pred, ref, "confusion");
  return active().confusion(pred.data(), ref.data(), pred.size());
}

MaskedSquares masked_sq_diff(std::span<const float> a, std::span<const float> b,
                             std::span<const std::uint8_t> mask) {
  require_same(a, b, "masked_sq_diff");
  require_same(a, mask, "masked_sq_diff");
  return active().masked_sq_diff(a.data(), b.data(), mask.data(), a.size());
}

double sq_diff_sum(std::span<const float> a, std::span<const float> b) {
  require_same(a, b, "sq_diff_sum");
  return active().sq_diff_sum(a.data(), b.data(), a.size());
}

void axpby(float alpha, std::span<const float> x, float beta, std::span<const float> y,
           std::span<float> out) {
  require_same(x, y, "axpby");
  require_same(x, out, "axpby");
  active().axpby(alpha, x.data(), beta, y.data(), out.data(), x.size());
}

void threshold(std::span<const float> x, float thresh, std::span<std::uint8_t> out) {
  require_same(x, out, "threshold");
  active().threshold(x.data(), thresh, out.data(), x.size());
}

std::uint64_t count_nonzero(std::span<const std::uint8_t> x) {
  return active().count_nonzero(x.data(), x.size());
}

}  // namespace geofb::kernels
