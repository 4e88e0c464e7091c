#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "hvsim/simd/kernels.hpp"

using namespace hvsim;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -100.0, double hi = 100.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_CASE("scalar kernels match plain loops") {
  std::mt19937_64 rng(3);
  const auto a = random_vector(37, rng);
  const auto b = random_vector(37, rng);
  double dot = 0.0, sq = 0.0, ab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    sq += (a[i] - b[i]) * (a[i] - b[i]);
    ab += std::abs(a[i] - b[i]);
  }
  CHECK(simd::scalar::dot(a.data(), b.data(), a.size()) == doctest::Approx(dot).epsilon(1e-12));
  const auto r = simd::scalar::residual_sums(a.data(), b.data(), a.size());
  CHECK(r.sum_sq == doctest::Approx(sq).epsilon(1e-12));
  CHECK(r.sum_abs == doctest::Approx(ab).epsilon(1e-12));
}

TEST_CASE("argmin picks the first of equal distances") {
  const std::vector<double> xs{1.0, -1.0, 1.0, 0.0, 5.0};
  const std::vector<double> ys{0.0, 0.0, 0.0, 1.0, 5.0};
  CHECK(simd::scalar::argmin_sq_dist(xs.data(), ys.data(), xs.size(), 0.0, 0.0) == 0);
  CHECK(simd::argmin_sq_dist(xs, ys, 0.0, 0.0) == 0);
  CHECK(simd::argmin_sq_dist({}, {}, 0.0, 0.0) == 0);
}

#if HVSIM_HAVE_AVX2_KERNELS
TEST_CASE("avx2 kernels agree with the scalar reference") {
  if (!simd::avx2_supported()) {
    MESSAGE("AVX2 not available on this CPU; equivalence test skipped");
    return;
  }
  std::mt19937_64 rng(11);
  for (std::size_t n : {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 64, 100, 1023}) {
    const auto a = random_vector(n, rng);
    const auto b = random_vector(n, rng);
    const double ds = simd::scalar::dot(a.data(), b.data(), n);
    const double dv = simd::avx2::dot(a.data(), b.data(), n);
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale += std::abs(a[i] * b[i]);
    CHECK(std::abs(ds - dv) <= 1e-13 * (scale + 1.0));

    const auto rs = simd::scalar::residual_sums(a.data(), b.data(), n);
    const auto rv = simd::avx2::residual_sums(a.data(), b.data(), n);
    CHECK(rv.sum_sq == doctest::Approx(rs.sum_sq).epsilon(1e-13));
    CHECK(rv.sum_abs == doctest::Approx(rs.sum_abs).epsilon(1e-13));

    for (int q = 0; q < 20; ++q) {
      const auto p = random_vector(2, rng);
      CHECK(simd::avx2::argmin_sq_dist(a.data(), b.data(), n, p[0], p[1]) ==
            simd::scalar::argmin_sq_dist(a.data(), b.data(), n, p[0], p[1]));
    }
  }
}

TEST_CASE("avx2 argmin resolves ties to the lowest index") {
  if (!simd::avx2_supported()) return;
  // Integer-valued grid: many exact distance ties across vector lanes.
  std::vector<double> xs, ys;
  for (int i = 0; i < 9; ++i) {
    for (int j = 0; j < 9; ++j) {
      xs.push_back(i);
      ys.push_back(j);
    }
  }
  for (double px = -0.5; px <= 9.0; px += 0.5) {
    for (double py = -0.5; py <= 9.0; py += 0.5) {
      REQUIRE(simd::avx2::argmin_sq_dist(xs.data(), ys.data(), xs.size(), px, py) ==
              simd::scalar::argmin_sq_dist(xs.data(), ys.data(), xs.size(), px, py));
    }
  }
}
#endif

TEST_CASE("forcing the scalar path changes the active ISA") {
  const auto before = simd::active_isa();
  simd::force_isa(simd::Isa::scalar);
  CHECK(simd::active_isa() == simd::Isa::scalar);
  CHECK(simd::isa_name(simd::Isa::scalar) == "scalar");
  if (simd::avx2_supported()) {
    simd::force_isa(simd::Isa::avx2);
    CHECK(simd::active_isa() == simd::Isa::avx2);
  } else {
    CHECK_THROWS_AS(simd::force_isa(simd::Isa::avx2), std::invalid_argument);
  }
  simd::force_isa(before);
}
