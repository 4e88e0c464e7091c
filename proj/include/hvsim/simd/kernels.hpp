#pragma once

// Data-parallel inner loops shared by the REM, the GP derivation model and
// the metrics. Every kernel has a scalar reference implementation and an AVX2
// variant; the dispatcher picks one at runtime from CPUID.
//
// argmin_sq_dist is bit-exact across variants (no FMA, same per-element
// arithmetic). The reductions (dot, residual_sums) may differ from the scalar
// result by reassociation rounding only.

#include <cstddef>
#include <span>
#include <string_view>

namespace hvsim::simd {

enum class Isa { scalar, avx2 };

struct ResidualSums {
  double sum_sq = 0.0;
  double sum_abs = 0.0;
};

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
ResidualSums residual_sums(const double* pred, const double* truth, std::size_t n);
std::size_t argmin_sq_dist(const double* xs, const double* ys, std::size_t n, double px, double py);
}  // namespace scalar

#if defined(__x86_64__) || defined(__i386__)
#define HVSIM_HAVE_AVX2_KERNELS 1
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
ResidualSums residual_sums(const double* pred, const double* truth, std::size_t n);
std::size_t argmin_sq_dist(const double* xs, const double* ys, std::size_t n, double px, double py);
}  // namespace avx2
#else
#define HVSIM_HAVE_AVX2_KERNELS 0
#endif

/// True when the running CPU can execute the AVX2 variants.
bool avx2_supported();

/// ISA currently used by the dispatching entry points below.
Isa active_isa();
std::string_view isa_name(Isa isa);

/// Overrides the runtime choice. Requesting avx2 on a CPU without it throws
/// std::invalid_argument. The HVSIM_SIMD=scalar environment variable has the
/// same effect at startup.
void force_isa(Isa isa);

double dot(std::span<const double> a, std::span<const double> b);
ResidualSums residual_sums(std::span<const double> pred, std::span<const double> truth);

/// Index of the first point with minimal squared distance to (px, py), or
/// xs.size() when there are no points. "First" makes ties resolve to the
/// lowest index.
std::size_t argmin_sq_dist(std::span<const double> xs, std::span<const double> ys, double px, double py);

}  // namespace hvsim::simd
