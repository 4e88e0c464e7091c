#include "hvsim/simd/kernels.hpp"

#include <cmath>

namespace hvsim::simd::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

ResidualSums residual_sums(const double* pred, const double* truth, std::size_t n) {
  ResidualSums out;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = pred[i] - truth[i];
    out.sum_sq += r * r;
    out.sum_abs += std::fabs(r);
  }
  return out;
}

std::size_t argmin_sq_dist(const double* xs, const double* ys, std::size_t n, double px, double py) {
  std::size_t best = n;
  double best_d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = px - xs[i];
    const double dy = py - ys[i];
    const double d = dx * dx + dy * dy;
    if (best == n || d < best_d) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

}  // namespace hvsim::simd::scalar
