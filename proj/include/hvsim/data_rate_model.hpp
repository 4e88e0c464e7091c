#pragma once

// Per-direction data-rate model: the forest predictor S~ = f(F~) plus the GP
// derivation model that turns S~ into a sampled achieved rate S.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "hvsim/features.hpp"
#include "hvsim/forest.hpp"
#include "hvsim/geo_rem.hpp"
#include "hvsim/gpr.hpp"
#include "hvsim/measurement.hpp"

namespace hvsim {

struct DataRateModel {
  Direction direction = Direction::uplink;
  FeatureEncoder encoder;
  ForestModel forest;
  GprModel derivation;

  /// Forest prediction S~ in MBit/s.
  double predict(const FeatureVector& f) const;

  nlohmann::json to_json() const;
  static DataRateModel from_json(const nlohmann::json& j);
};

struct TrainOptions {
  ForestParams forest;
  GprOptions gpr;
  int derivation_folds = 5;  // out-of-fold predictions feed the GP
  std::uint64_t seed = 0;
};

/// Network context for each sample: the REM fallback lookup at the sample
/// position when rem is given, otherwise the sample's own measurement.
std::vector<FeatureVector> model_features(std::span<const MeasurementSample> samples, const Rem* rem);

Dataset encode_dataset(const FeatureEncoder& encoder, std::span<const FeatureVector> features,
                       std::span<const MeasurementSample> samples);

/// Trains the forest on all samples of `direction` and the GP on out-of-fold
/// (prediction, measurement) pairs. Throws std::invalid_argument if the
/// direction has fewer than 10 samples.
DataRateModel train_data_rate_model(std::span<const MeasurementSample> samples, Direction direction, const Rem* rem,
                                    const TrainOptions& options);

std::vector<MeasurementSample> filter_direction(std::span<const MeasurementSample> samples, Direction direction);

}  // namespace hvsim
