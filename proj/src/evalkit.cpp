#include "hvsim/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

#include "hvsim/data_rate_model.hpp"
#include "hvsim/parallel.hpp"
#include "hvsim/random.hpp"

namespace hvsim {

std::vector<std::vector<std::size_t>> kfold_partition(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2 || k > n) throw std::invalid_argument("k-fold needs 2 <= k <= n");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  // Explicit Fisher-Yates: std::shuffle's draw pattern is library-specific.
  for (std::size_t i = n; i-- > 1;) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(order[i], order[pick(rng)]);
  }
  std::vector<std::vector<std::size_t>> folds(k);
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::size_t at = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(at),
                    order.begin() + static_cast<std::ptrdiff_t>(at + size));
    at += size;
  }
  return folds;
}

std::vector<std::size_t> complement(const std::vector<std::vector<std::size_t>>& folds, std::size_t held) {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (f != held) out.insert(out.end(), folds[f].begin(), folds[f].end());
  }
  return out;
}

namespace {

ErrorReport combine_folds(const std::vector<ErrorReport>& per_fold) {
  ErrorReport r;
  for (const auto& f : per_fold) {
    r.fold_rmse.push_back(f.rmse);
    r.fold_mae.push_back(f.mae);
    r.n += f.n;
  }
  r.rmse = mean(r.fold_rmse);
  r.mae = mean(r.fold_mae);
  r.rmse_std = stddev(r.fold_rmse);
  r.mae_std = stddev(r.fold_mae);
  return r;
}

}  // namespace

ErrorReport cross_validate_folds(std::size_t n, std::size_t k, std::uint64_t seed, const FoldEvaluator& evaluate,
                                 unsigned workers) {
  const auto folds = kfold_partition(n, k, seed);
  std::vector<ErrorReport> per_fold(k);
  parallel_for(
      k,
      [&](std::size_t f) {
        const auto train = complement(folds, f);
        const auto [pred, truth] = evaluate(train, folds[f]);
        per_fold[f] = error_report(pred, truth);
      },
      workers);
  return combine_folds(per_fold);
}

ErrorReport cross_validate(const Dataset& data, std::size_t k, const Trainer& trainer, std::uint64_t seed,
                           unsigned workers) {
  return cross_validate_folds(
      data.size(), k, seed,
      [&](std::span<const std::size_t> train, std::span<const std::size_t> test) {
        const Predictor predict = trainer(data.subset(train));
        FoldEvaluation out;
        for (std::size_t r : test) {
          out.first.push_back(predict(data.row(r)));
          out.second.push_back(data.y[r]);
        }
        return out;
      },
      workers);
}

Trainer forest_trainer(ForestParams params, std::uint64_t seed) {
  return [params, seed](const Dataset& train) -> Predictor {
    auto model = std::make_shared<ForestModel>(train_forest(train, params, seed));
    return [model](std::span<const double> x) { return model->predict(x); };
  };
}

std::vector<double> SweepResult::cell_widths() const {
  std::vector<double> w;
  for (const auto& p : points) w.push_back(p.cell_width);
  return w;
}

nlohmann::json to_json(const ErrorReport& r) {
  return {{"rmse", r.rmse},         {"mae", r.mae},         {"n", r.n},
          {"rmse_std", r.rmse_std}, {"mae_std", r.mae_std}, {"fold_rmse", r.fold_rmse},
          {"fold_mae", r.fold_mae}};
}

nlohmann::json to_json(const Summary& s) {
  return {{"count", s.count}, {"mean", s.mean},     {"min", s.min}, {"q1", s.q1},
          {"median", s.median}, {"q3", s.q3}, {"max", s.max}};
}

nlohmann::json SweepResult::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& p : points) {
    nlohmann::json layers;
    for (std::size_t k = 0; k < kNumericLayers.size(); ++k) {
      layers[std::string(layer_name(kNumericLayers[k]))] = hvsim::to_json(p.layer_errors[k]);
    }
    nlohmann::json row{{"cell_width", p.cell_width},
                       {"layers", layers},
                       {"cell_id_mismatch", p.cell_id_mismatch},
                       {"miss_ratio", p.miss_ratio},
                       {"populated_cells", p.populated_cells}};
    row["rate_ul"] = p.rate_ul ? hvsim::to_json(*p.rate_ul) : nlohmann::json();
    row["rate_dl"] = p.rate_dl ? hvsim::to_json(*p.rate_dl) : nlohmann::json();
    rows.push_back(std::move(row));
  }
  return {{"points", std::move(rows)}};
}

std::string SweepResult::to_csv() const {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "cell_width,miss_ratio,populated_cells,cell_id_mismatch";
  for (Layer l : kNumericLayers) out << ',' << layer_name(l) << "_rmse," << layer_name(l) << "_mae";
  out << ",ul_rmse,ul_rmse_std,ul_mae,ul_mae_std,dl_rmse,dl_rmse_std,dl_mae,dl_mae_std\n";
  for (const auto& p : points) {
    out << p.cell_width << ',' << p.miss_ratio << ',' << p.populated_cells << ',' << p.cell_id_mismatch;
    for (const auto& e : p.layer_errors) out << ',' << e.rmse << ',' << e.mae;
    for (const auto* r : {&p.rate_ul, &p.rate_dl}) {
      if (*r) {
        out << ',' << (*r)->rmse << ',' << (*r)->rmse_std << ',' << (*r)->mae << ',' << (*r)->mae_std;
      } else {
        out << ",,,,";
      }
    }
    out << '\n';
  }
  return out.str();
}

namespace {

struct FoldOutcome {
  std::array<ErrorReport, 5> layers;
  double mismatch = 0.0;
  double miss = 0.0;
  std::size_t cells = 0;
  std::array<std::optional<ErrorReport>, 2> rate;  // ul, dl
};

std::optional<ErrorReport> fold_rate_error(const std::vector<MeasurementSample>& train,
                                           const std::vector<MeasurementSample>& test, Direction dir, const Rem& rem,
                                           const ForestParams& params, std::uint64_t seed) {
  const auto tr = filter_direction(train, dir);
  const auto te = filter_direction(test, dir);
  if (tr.empty() || te.empty()) return std::nullopt;
  const auto tr_features = model_features(tr, &rem);
  const auto encoder = FeatureEncoder::fit(tr_features);
  const auto model = train_forest(encode_dataset(encoder, tr_features, tr), params, seed);
  std::vector<double> pred;
  std::vector<double> truth;
  for (const auto& f : model_features(te, &rem)) pred.push_back(model.predict(encoder.encode(f)));
  for (const auto& s : te) truth.push_back(s.data_rate);
  return error_report(pred, truth);
}

}  // namespace

SweepResult sweep_cell_width(std::span<const MeasurementSample> samples, std::span<const double> widths,
                             const SweepOptions& options) {
  if (widths.empty()) throw std::invalid_argument("sweep needs at least one cell width");
  for (std::size_t k = 0; k < widths.size(); ++k) {
    if (!(widths[k] > 0.0)) throw std::invalid_argument("sweep cell widths must be > 0");
    if (k > 0 && !(widths[k] > widths[k - 1])) throw std::invalid_argument("sweep cell widths must be ascending");
  }
  const auto folds = kfold_partition(samples.size(), options.folds, options.seed);

  SweepResult result;
  for (double width : widths) {
    std::vector<FoldOutcome> outcomes(folds.size());
    parallel_for(
        folds.size(),
        [&](std::size_t f) {
          std::vector<MeasurementSample> train;
          std::vector<MeasurementSample> test;
          for (std::size_t r : complement(folds, f)) train.push_back(samples[r]);
          for (std::size_t r : folds[f]) test.push_back(samples[r]);
          const Rem rem = Rem::build(train, width);
          auto& out = outcomes[f];
          out.cells = rem.populated_cells();
          for (std::size_t l = 0; l < kNumericLayers.size(); ++l) {
            out.layers[l] = layer_lookup_error(rem, test, kNumericLayers[l]);
          }
          out.mismatch = cell_id_mismatch_rate(rem, test);
          if (options.probe_positions.empty()) {
            std::vector<Point2> held;
            for (const auto& s : test) held.push_back(s.position);
            out.miss = miss_ratio(rem, held);
          } else {
            out.miss = miss_ratio(rem, options.probe_positions);
          }
          const std::uint64_t seed = derive_seed(options.seed, 1000 + f);
          out.rate[0] = fold_rate_error(train, test, Direction::uplink, rem, options.forest, seed);
          out.rate[1] = fold_rate_error(train, test, Direction::downlink, rem, options.forest, seed);
        },
        options.workers);

    SweepPoint p;
    p.cell_width = width;
    std::vector<double> miss;
    std::vector<double> mismatch;
    double cells = 0.0;
    for (const auto& o : outcomes) {
      miss.push_back(o.miss);
      mismatch.push_back(o.mismatch);
      cells += static_cast<double>(o.cells);
    }
    p.miss_ratio = mean(miss);
    p.cell_id_mismatch = mean(mismatch);
    p.populated_cells = static_cast<std::size_t>(std::lround(cells / static_cast<double>(outcomes.size())));
    for (std::size_t l = 0; l < kNumericLayers.size(); ++l) {
      std::vector<ErrorReport> per_fold;
      for (const auto& o : outcomes) per_fold.push_back(o.layers[l]);
      p.layer_errors[l] = combine_folds(per_fold);
    }
    for (std::size_t d = 0; d < 2; ++d) {
      std::vector<ErrorReport> per_fold;
      for (const auto& o : outcomes) {
        if (o.rate[d]) per_fold.push_back(*o.rate[d]);
      }
      if (!per_fold.empty()) (d == 0 ? p.rate_ul : p.rate_dl) = combine_folds(per_fold);
    }
    result.points.push_back(std::move(p));
  }
  return result;
}

double wasserstein1(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein1 needs non-empty inputs");
  std::vector<double> xa(a.begin(), a.end());
  std::vector<double> xb(b.begin(), b.end());
  std::sort(xa.begin(), xa.end());
  std::sort(xb.begin(), xb.end());
  // Integrate |F_a - F_b| between consecutive points of the merged support.
  const double na = static_cast<double>(xa.size());
  const double nb = static_cast<double>(xb.size());
  std::size_t ia = 0;
  std::size_t ib = 0;
  double prev = std::min(xa.front(), xb.front());
  double total = 0.0;
  while (ia < xa.size() || ib < xb.size()) {
    const double next = ib >= xb.size() || (ia < xa.size() && xa[ia] <= xb[ib]) ? xa[ia] : xb[ib];
    total += std::fabs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb) * (next - prev);
    while (ia < xa.size() && xa[ia] == next) ++ia;
    while (ib < xb.size() && xb[ib] == next) ++ib;
    prev = next;
  }
  return total;
}

ModelingError aggregated_modeling_error(std::span<const double> sim, std::span<const double> reference) {
  if (sim.empty() || reference.empty()) throw std::invalid_argument("modeling error needs non-empty distributions");
  const double ref_mean = mean(reference);
  if (ref_mean == 0.0) throw std::invalid_argument("modeling error: reference mean is zero");
  return {std::fabs(mean(sim) - ref_mean) / std::fabs(ref_mean), wasserstein1(sim, reference)};
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) return {};
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  return {v.size(), mean(v), v.front(), quantile(0.25), quantile(0.5), quantile(0.75), v.back()};
}

}  // namespace hvsim
