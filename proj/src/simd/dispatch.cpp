#include "hvsim/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace hvsim::simd {

namespace {

Isa detect() {
  if (const char* env = std::getenv("HVSIM_SIMD"); env != nullptr && std::strcmp(env, "scalar") == 0) {
    return Isa::scalar;
  }
  return avx2_supported() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("simd kernel: operand lengths differ");
}

}  // namespace

bool avx2_supported() {
#if HVSIM_HAVE_AVX2_KERNELS
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported;
#else
  return false;
#endif
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

void force_isa(Isa isa) {
  if (isa == Isa::avx2 && !avx2_supported()) throw std::invalid_argument("AVX2 not supported on this CPU");
  current().store(isa, std::memory_order_relaxed);
}

double dot(std::span<const double> a, std::span<const double> b) {
  check_sizes(a.size(), b.size());
#if HVSIM_HAVE_AVX2_KERNELS
  if (active_isa() == Isa::avx2) return avx2::dot(a.data(), b.data(), a.size());
#endif
  return scalar::dot(a.data(), b.data(), a.size());
}

ResidualSums residual_sums(std::span<const double> pred, std::span<const double> truth) {
  check_sizes(pred.size(), truth.size());
#if HVSIM_HAVE_AVX2_KERNELS
  if (active_isa() == Isa::avx2) return avx2::residual_sums(pred.data(), truth.data(), pred.size());
#endif
  return scalar::residual_sums(pred.data(), truth.data(), pred.size());
}

std::size_t argmin_sq_dist(std::span<const double> xs, std::span<const double> ys, double px, double py) {
  check_sizes(xs.size(), ys.size());
  if (xs.empty()) return 0;
#if HVSIM_HAVE_AVX2_KERNELS
  if (active_isa() == Isa::avx2) return avx2::argmin_sq_dist(xs.data(), ys.data(), xs.size(), px, py);
#endif
  return scalar::argmin_sq_dist(xs.data(), ys.data(), xs.size(), px, py);
}

}  // namespace hvsim::simd
