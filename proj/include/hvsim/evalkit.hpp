#pragma once

// Evaluation toolkit: k-fold cross validation, REM cell-width sweeps and the
// comparison metrics between simulated and reference rate distributions.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hvsim/forest.hpp"
#include "hvsim/geo_rem.hpp"
#include "hvsim/measurement.hpp"
#include "hvsim/metrics.hpp"

namespace hvsim {

/// Seeded shuffle of [0, n) cut into k contiguous folds; the first n % k
/// folds hold one extra index. Throws unless 2 <= k <= n.
std::vector<std::vector<std::size_t>> kfold_partition(std::size_t n, std::size_t k, std::uint64_t seed);

/// All indices outside folds[held], in fold order.
std::vector<std::size_t> complement(const std::vector<std::vector<std::size_t>>& folds, std::size_t held);

/// (predictions, truths) for one held-out fold.
using FoldEvaluation = std::pair<std::vector<double>, std::vector<double>>;
using FoldEvaluator =
    std::function<FoldEvaluation(std::span<const std::size_t> train_rows, std::span<const std::size_t> test_rows)>;

/// Runs the evaluator on each fold and reports the fold-mean RMSE/MAE with
/// their standard deviation across folds.
ErrorReport cross_validate_folds(std::size_t n, std::size_t k, std::uint64_t seed, const FoldEvaluator& evaluate,
                                 unsigned workers = 1);

/// A trainer turns a training set into a predictor.
using Predictor = std::function<double(std::span<const double>)>;
using Trainer = std::function<Predictor(const Dataset&)>;

ErrorReport cross_validate(const Dataset& data, std::size_t k, const Trainer& trainer, std::uint64_t seed,
                           unsigned workers = 1);

/// Forest trainer with fixed parameters and seed.
Trainer forest_trainer(ForestParams params, std::uint64_t seed);

struct SweepPoint {
  double cell_width = 0.0;
  std::array<ErrorReport, 5> layer_errors;  // indexed like kNumericLayers
  double cell_id_mismatch = 0.0;
  double miss_ratio = 0.0;
  std::optional<ErrorReport> rate_ul;
  std::optional<ErrorReport> rate_dl;
  std::size_t populated_cells = 0;  // mean over folds, rounded
};

struct SweepResult {
  std::vector<SweepPoint> points;  // one per width, ascending

  std::vector<double> cell_widths() const;
  nlohmann::json to_json() const;
  /// One row per width; columns documented in the README.
  std::string to_csv() const;
};

struct SweepOptions {
  ForestParams forest{30, 12, 5, 0};
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  /// Positions scored for the miss ratio. Empty: the held-out fold positions.
  std::vector<Point2> probe_positions;
  unsigned workers = 1;
};

/// For every width: per fold, builds a REM from the training fold, scores
/// layer lookups and the miss ratio, and cross-validates the per-direction
/// forest with REM-looked-up features on both sides of the split. Widths must
/// be strictly ascending and positive.
SweepResult sweep_cell_width(std::span<const MeasurementSample> samples, std::span<const double> widths,
                             const SweepOptions& options);

struct ModelingError {
  double relative_mean_error = 0.0;  // |mean(sim) - mean(ref)| / mean(ref)
  double wasserstein1 = 0.0;
};

/// Throws std::invalid_argument on empty input or a zero reference mean.
ModelingError aggregated_modeling_error(std::span<const double> sim, std::span<const double> reference);

/// Earth mover's distance between two empirical distributions.
double wasserstein1(std::span<const double> a, std::span<const double> b);

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Quartiles by linear interpolation between order statistics.
Summary summarize(std::span<const double> values);

nlohmann::json to_json(const ErrorReport& r);
nlohmann::json to_json(const Summary& s);

}  // namespace hvsim
