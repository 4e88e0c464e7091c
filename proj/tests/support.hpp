#pragma once

// Fixtures and independent oracles shared by the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "hvsim/config.hpp"
#include "hvsim/data_rate_model.hpp"
#include "hvsim/geo_rem.hpp"
#include "hvsim/measurement.hpp"
#include "hvsim/mobility.hpp"
#include "hvsim/scenario_io.hpp"

namespace hvsim::test {

inline std::filesystem::path data_dir() { return HVSIM_DATA_DIR; }

inline MeasurementSample sample_at(double x, double y, double rsrp = -90.0, std::int64_t cell = 1) {
  MeasurementSample s;
  s.position = {x, y};
  s.rsrp = rsrp;
  s.rsrq = -10.0;
  s.sinr = 10.0;
  s.cqi = 8;
  s.ta = 2;
  s.velocity = 10.0;
  s.cell_id = cell;
  s.payload_size = 100000;
  s.data_rate = 5.0;
  return s;
}

/// Uniformly scattered samples with arbitrary feature values.
inline std::vector<MeasurementSample> random_samples(std::size_t n, std::uint64_t seed, double extent = 1000.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(0.0, extent);
  std::uniform_real_distribution<double> val(-120.0, -60.0);
  std::uniform_int_distribution<int> small(0, 15);
  std::vector<MeasurementSample> out;
  for (std::size_t k = 0; k < n; ++k) {
    auto s = sample_at(pos(rng), pos(rng), val(rng), 100 + small(rng) % 4);
    s.rsrq = val(rng) / 6.0;
    s.sinr = val(rng) / 4.0 + 30.0;
    s.cqi = small(rng);
    s.ta = small(rng);
    s.direction = k % 2 == 0 ? Direction::uplink : Direction::downlink;
    out.push_back(s);
  }
  return out;
}

/// Brute-force REM oracle: re-derives the owning cell of the query and of
/// every sample from scratch and aggregates the matching samples in input
/// order. Nothing here shares code with the library's grid.
struct BruteForceRem {
  std::vector<MeasurementSample> samples;
  double width;
  double ox;
  double oy;

  BruteForceRem(std::vector<MeasurementSample> s, double c) : samples(std::move(s)), width(c) {
    ox = samples.front().position.x;
    oy = samples.front().position.y;
    for (const auto& m : samples) {
      ox = std::min(ox, m.position.x);
      oy = std::min(oy, m.position.y);
    }
  }

  std::pair<long long, long long> bucket(double x, double y) const {
    return {static_cast<long long>(std::floor((x - ox) / width)), static_cast<long long>(std::floor((y - oy) / width))};
  }

  std::optional<FeatureBundle> lookup(double x, double y) const {
    const auto target = bucket(x, y);
    double rsrp = 0, rsrq = 0, sinr = 0, cqi = 0, ta = 0;
    int n = 0;
    std::map<std::int64_t, int> ids;
    for (const auto& m : samples) {
      if (bucket(m.position.x, m.position.y) != target) continue;
      rsrp += m.rsrp;
      rsrq += m.rsrq;
      sinr += m.sinr;
      cqi += m.cqi;
      ta += m.ta;
      ++ids[m.cell_id];
      ++n;
    }
    if (n == 0) return std::nullopt;
    std::int64_t mode = 0;
    int best = 0;
    for (const auto& [id, c] : ids) {
      if (c > best) {
        best = c;
        mode = id;
      }
    }
    return FeatureBundle{rsrp / n, rsrq / n, sinr / n, cqi / n, ta / n, mode};
  }
};

/// Small synthetic campaign from the shipped config, with fewer trips.
inline std::vector<MeasurementSample> small_campaign(std::size_t trips, std::uint64_t seed) {
  auto cfg = load_campaign_config(data_dir() / "campaign.json");
  cfg.trips = random_trips(cfg.network, trips, seed);
  cfg.options.seed = seed;
  return generate_campaign(cfg.field, cfg.network, cfg.trips, cfg.options);
}

inline std::vector<MeasurementSample> shipped_campaign() {
  const auto cfg = load_campaign_config(data_dir() / "campaign.json");
  return generate_campaign(cfg.field, cfg.network, cfg.trips, cfg.options);
}

/// Forest of one leaf (predicts `rate` everywhere) and a GP fitted to
/// constant targets so the achieved rate stays near `rate`.
inline DataRateModel constant_model(double rate, double noise = 0.05) {
  DataRateModel m;
  m.forest = ForestModel(kFeatureDim, {RegressionTree({TreeNode{-1, 0.0, -1, -1, rate, 1}})});
  std::vector<double> in{0.0, 5.0, 10.0, 15.0, 20.0, 25.0};
  std::vector<double> out(in.size(), rate);
  m.derivation = GprModel(in, out, GprHyperparams{5.0, 0.1, noise});
  return m;
}

}  // namespace hvsim::test
