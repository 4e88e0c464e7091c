#pragma once

// Gaussian-process derivation model over a scalar input: maps a predicted
// data rate to a distribution of achieved rates. Squared-exponential kernel
// k(a, b) = signal_std^2 * exp(-(a - b)^2 / (2 * length_scale^2)) plus
// i.i.d. noise of variance noise_std^2, constant prior mean.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "hvsim/random.hpp"

namespace hvsim {

struct GprHyperparams {
  double length_scale = 1.0;
  double signal_std = 1.0;
  double noise_std = 0.1;
};

struct GprOptions {
  std::optional<GprHyperparams> hyperparams;  // nullopt: log-likelihood grid search
  std::size_t max_pairs = 500;                // hard cap 2000
  std::size_t search_pairs = 200;             // subsample used by the grid search
  std::uint64_t seed = 0;
};

struct Posterior {
  double mean = 0.0;
  double std = 0.0;
};

class GprModel {
 public:
  GprModel() = default;

  /// Factorizes the kernel matrix. prior_mean defaults to the target mean.
  /// Throws std::runtime_error when the matrix stays singular after jitter.
  GprModel(std::vector<double> inputs, std::vector<double> targets, GprHyperparams hp,
           std::optional<double> prior_mean = std::nullopt);

  /// Predictive distribution of an observation at s_pred (latent variance
  /// plus noise variance).
  Posterior posterior(double s_pred) const;

  double log_marginal_likelihood() const { return log_likelihood_; }

  bool trained() const { return !inputs_.empty(); }
  const GprHyperparams& hyperparams() const { return hp_; }
  double prior_mean() const { return prior_mean_; }
  std::span<const double> inputs() const { return inputs_; }
  std::span<const double> targets() const { return targets_; }
  double jitter() const { return jitter_; }

  nlohmann::json to_json() const;
  static GprModel from_json(const nlohmann::json& j);

 private:
  std::vector<double> inputs_;
  std::vector<double> targets_;
  GprHyperparams hp_;
  double prior_mean_ = 0.0;
  double jitter_ = 0.0;
  std::vector<double> chol_;   // lower-triangular factor, row-major n x n
  std::vector<double> alpha_;  // K^-1 (y - m)
  double log_likelihood_ = 0.0;
};

/// Log marginal likelihood of targets under the GP prior, via Cholesky.
double gp_log_marginal_likelihood(std::span<const double> inputs, std::span<const double> targets,
                                  const GprHyperparams& hp, double prior_mean);

/// Fits on (predicted, measured) pairs. Requires >= 5 pairs.
GprModel train_gpr(std::span<const double> predicted, std::span<const double> measured, const GprOptions& options = {});

/// Normal(mean, std) clamped at 0; std <= 0 returns max(mean, 0) without
/// consuming the generator.
double sample_clamped_normal(double mean, double std, Rng& rng);

/// Draws the virtual ground truth S for a predicted rate.
double sample_virtual_ground_truth(const GprModel& model, double s_pred, Rng& rng);

}  // namespace hvsim
