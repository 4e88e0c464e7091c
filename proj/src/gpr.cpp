#include "hvsim/gpr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "hvsim/metrics.hpp"
#include "hvsim/simd/kernels.hpp"

namespace hvsim {

namespace {

constexpr std::size_t kMaxPairs = 2000;

double kernel(double a, double b, const GprHyperparams& hp) {
  const double d = (a - b) / hp.length_scale;
  return hp.signal_std * hp.signal_std * std::exp(-0.5 * d * d);
}

void check_hyperparams(const GprHyperparams& hp) {
  if (!(hp.length_scale > 0.0) || !(hp.signal_std > 0.0) || !(hp.noise_std > 0.0) ||
      !std::isfinite(hp.length_scale) || !std::isfinite(hp.signal_std) || !std::isfinite(hp.noise_std)) {
    throw std::invalid_argument("GPR hyperparameters must be finite and > 0");
  }
}

/// In-place Cholesky of a row-major SPD matrix; false on a non-positive pivot.
bool cholesky(std::vector<double>& a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double* ri = a.data() + i * n;
    for (std::size_t j = 0; j < i; ++j) {
      const double* rj = a.data() + j * n;
      ri[j] = (ri[j] - simd::dot({ri, j}, {rj, j})) / rj[j];
    }
    const double d = ri[i] - simd::dot({ri, i}, {ri, i});
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    ri[i] = std::sqrt(d);
    for (std::size_t j = i + 1; j < n; ++j) ri[j] = 0.0;
  }
  return true;
}

/// Solves L v = b for lower-triangular row-major L.
std::vector<double> forward_solve(const std::vector<double>& l, std::size_t n, std::span<const double> b) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* ri = l.data() + i * n;
    v[i] = (b[i] - simd::dot({ri, i}, {v.data(), i})) / ri[i];
  }
  return v;
}

/// Solves L^T x = v.
std::vector<double> backward_solve(const std::vector<double>& l, std::size_t n, std::span<const double> v) {
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double acc = v[i];
    for (std::size_t k = i + 1; k < n; ++k) acc -= l[k * n + i] * x[k];
    x[i] = acc / l[i * n + i];
  }
  return x;
}

struct Factorization {
  std::vector<double> chol;
  std::vector<double> alpha;
  double jitter = 0.0;
  double log_likelihood = 0.0;
};

/// Factorizes K + (noise^2 + jitter) I, escalating jitter up to 1e-4 * signal^2.
std::optional<Factorization> factorize(std::span<const double> x, std::span<const double> y, const GprHyperparams& hp,
                                       double prior_mean) {
  const std::size_t n = x.size();
  std::vector<double> base(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double k = kernel(x[i], x[j], hp);
      base[i * n + j] = k;
      base[j * n + i] = k;
    }
  }
  const double noise = hp.noise_std * hp.noise_std;
  const double signal = hp.signal_std * hp.signal_std;
  double jitter = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    std::vector<double> a = base;
    for (std::size_t i = 0; i < n; ++i) a[i * n + i] += noise + jitter;
    if (cholesky(a, n)) {
      std::vector<double> centered(n);
      for (std::size_t i = 0; i < n; ++i) centered[i] = y[i] - prior_mean;
      const auto v = forward_solve(a, n, centered);
      Factorization f;
      f.alpha = backward_solve(a, n, v);
      double log_det_half = 0.0;
      for (std::size_t i = 0; i < n; ++i) log_det_half += std::log(a[i * n + i]);
      f.log_likelihood = -0.5 * simd::dot(v, v) - log_det_half -
                         0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
      f.chol = std::move(a);
      f.jitter = jitter;
      return f;
    }
    jitter = jitter == 0.0 ? 1e-10 * signal : jitter * 10.0;
    if (jitter > 1e-4 * signal) break;
  }
  return std::nullopt;
}

std::vector<std::size_t> subsample(std::size_t n, std::size_t keep, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (keep >= n) return idx;
  Rng rng(seed);
  for (std::size_t k = 0; k < keep; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, n - 1);
    std::swap(idx[k], idx[pick(rng)]);
  }
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

GprModel::GprModel(std::vector<double> inputs, std::vector<double> targets, GprHyperparams hp,
                   std::optional<double> prior_mean)
    : inputs_(std::move(inputs)), targets_(std::move(targets)), hp_(hp) {
  check_hyperparams(hp_);
  if (inputs_.size() != targets_.size()) throw std::invalid_argument("GPR inputs/targets length mismatch");
  if (inputs_.empty()) throw std::invalid_argument("GPR needs at least one training pair");
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    if (!std::isfinite(inputs_[i]) || !std::isfinite(targets_[i])) throw std::invalid_argument("non-finite GPR pair");
  }
  prior_mean_ = prior_mean.value_or(mean(targets_));
  auto f = factorize(inputs_, targets_, hp_, prior_mean_);
  if (!f) {
    std::ostringstream msg;
    msg << "GPR kernel matrix is singular despite jitter (n=" << inputs_.size() << ", length_scale=" << hp_.length_scale
        << ", signal_std=" << hp_.signal_std << ", noise_std=" << hp_.noise_std << ")";
    throw std::runtime_error(msg.str());
  }
  chol_ = std::move(f->chol);
  alpha_ = std::move(f->alpha);
  jitter_ = f->jitter;
  log_likelihood_ = f->log_likelihood;
}

Posterior GprModel::posterior(double s_pred) const {
  if (!trained()) throw std::logic_error("GPR posterior on an untrained model");
  const std::size_t n = inputs_.size();
  std::vector<double> k(n);
  for (std::size_t i = 0; i < n; ++i) k[i] = kernel(s_pred, inputs_[i], hp_);
  const double m = prior_mean_ + simd::dot(k, alpha_);
  const auto v = forward_solve(chol_, n, k);
  const double noise = hp_.noise_std * hp_.noise_std;
  const double prior = hp_.signal_std * hp_.signal_std + noise;
  const double var = std::max(prior - simd::dot(v, v), noise);
  return {m, std::sqrt(var)};
}

nlohmann::json GprModel::to_json() const {
  return {{"inputs", inputs_},
          {"targets", targets_},
          {"length_scale", hp_.length_scale},
          {"signal_std", hp_.signal_std},
          {"noise_std", hp_.noise_std},
          {"prior_mean", prior_mean_}};
}

GprModel GprModel::from_json(const nlohmann::json& j) {
  GprHyperparams hp{j.at("length_scale").get<double>(), j.at("signal_std").get<double>(),
                    j.at("noise_std").get<double>()};
  return GprModel(j.at("inputs").get<std::vector<double>>(), j.at("targets").get<std::vector<double>>(), hp,
                  j.at("prior_mean").get<double>());
}

double gp_log_marginal_likelihood(std::span<const double> inputs, std::span<const double> targets,
                                  const GprHyperparams& hp, double prior_mean) {
  check_hyperparams(hp);
  if (inputs.size() != targets.size() || inputs.empty()) throw std::invalid_argument("bad GPR likelihood input");
  auto f = factorize(inputs, targets, hp, prior_mean);
  if (!f) throw std::runtime_error("GPR kernel matrix is singular despite jitter");
  return f->log_likelihood;
}

GprModel train_gpr(std::span<const double> predicted, std::span<const double> measured, const GprOptions& options) {
  if (predicted.size() != measured.size()) throw std::invalid_argument("GPR pairs: length mismatch");
  if (predicted.size() < 5) throw std::invalid_argument("GPR needs at least 5 pairs");
  const std::size_t cap = std::min(std::max<std::size_t>(options.max_pairs, 5), kMaxPairs);

  const auto keep = subsample(predicted.size(), cap, derive_seed(options.seed, 1));
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i : keep) {
    x.push_back(predicted[i]);
    y.push_back(measured[i]);
  }

  GprHyperparams hp;
  if (options.hyperparams) {
    hp = *options.hyperparams;
  } else {
    const auto search = subsample(x.size(), std::max<std::size_t>(options.search_pairs, 5), derive_seed(options.seed, 2));
    std::vector<double> sx;
    std::vector<double> sy;
    for (std::size_t i : search) {
      sx.push_back(x[i]);
      sy.push_back(y[i]);
    }
    const auto [lo, hi] = std::minmax_element(sx.begin(), sx.end());
    const double x_scale = *hi - *lo > 0.0 ? *hi - *lo : 1.0;
    const double y_sd = stddev(sy);
    const double y_scale = y_sd > 0.0 ? y_sd : 1e-3;
    const double m = mean(sy);

    double best = -std::numeric_limits<double>::infinity();
    for (double l : {0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0}) {
      for (double sf : {0.25, 0.5, 1.0, 2.0}) {
        for (double sn : {0.05, 0.1, 0.2, 0.4, 0.8}) {
          const GprHyperparams cand{l * x_scale, sf * y_scale, sn * y_scale};
          const auto f = factorize(sx, sy, cand, m);
          if (f && f->log_likelihood > best) {
            best = f->log_likelihood;
            hp = cand;
          }
        }
      }
    }
    if (!std::isfinite(best)) throw std::runtime_error("GPR grid search found no factorizable hyperparameters");
  }
  return GprModel(std::move(x), std::move(y), hp);
}

double sample_clamped_normal(double mean, double std, Rng& rng) {
  if (!(std > 0.0)) return std::max(mean, 0.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  return std::max(mean + std * normal(rng), 0.0);
}

double sample_virtual_ground_truth(const GprModel& model, double s_pred, Rng& rng) {
  const auto p = model.posterior(s_pred);
  return sample_clamped_normal(p.mean, p.std, rng);
}

}  // namespace hvsim
