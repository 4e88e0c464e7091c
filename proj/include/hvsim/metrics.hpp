#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hvsim {

/// Prediction error summary. For cross-validated reports rmse/mae are the
/// means over folds and the *_std fields their standard deviation.
struct ErrorReport {
  double rmse = 0.0;
  double mae = 0.0;
  std::size_t n = 0;
  std::vector<double> fold_rmse;
  std::vector<double> fold_mae;
  double rmse_std = 0.0;
  double mae_std = 0.0;
};

/// sqrt(sum (pred - truth)^2 / N). Throws std::invalid_argument on empty or
/// mismatched input.
double rmse(std::span<const double> pred, std::span<const double> truth);

/// sum |pred - truth| / N.
double mae(std::span<const double> pred, std::span<const double> truth);

ErrorReport error_report(std::span<const double> pred, std::span<const double> truth);

double mean(std::span<const double> v);
/// Population standard deviation (divides by N).
double stddev(std::span<const double> v);

}  // namespace hvsim
