#include "hvsim/metrics.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "hvsim/simd/kernels.hpp"

namespace hvsim {

namespace {

simd::ResidualSums checked_sums(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("metric: prediction/truth length mismatch");
  if (pred.empty()) throw std::invalid_argument("metric: empty input");
  return simd::residual_sums(pred, truth);
}

}  // namespace

double rmse(std::span<const double> pred, std::span<const double> truth) {
  const auto s = checked_sums(pred, truth);
  return std::sqrt(s.sum_sq / static_cast<double>(pred.size()));
}

double mae(std::span<const double> pred, std::span<const double> truth) {
  const auto s = checked_sums(pred, truth);
  return s.sum_abs / static_cast<double>(pred.size());
}

ErrorReport error_report(std::span<const double> pred, std::span<const double> truth) {
  const auto s = checked_sums(pred, truth);
  const auto n = static_cast<double>(pred.size());
  ErrorReport r;
  r.rmse = std::sqrt(s.sum_sq / n);
  r.mae = s.sum_abs / n;
  r.n = pred.size();
  return r;
}

double mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean of empty sequence");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(std::span<const double> v) {
  const double m = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace hvsim
