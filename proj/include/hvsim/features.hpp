#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "hvsim/geo_rem.hpp"
#include "hvsim/measurement.hpp"

namespace hvsim {

/// Model input: network context (from the REM or a raw measurement),
/// mobility context and application context.
struct FeatureVector {
  double rsrp = 0.0;
  double rsrq = 0.0;
  double sinr = 0.0;
  double cqi = 0.0;
  double ta = 0.0;
  double velocity = 0.0;
  std::int64_t cell_id = 0;
  double payload = 0.0;  // bytes

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

inline constexpr std::size_t kFeatureDim = 8;

FeatureVector raw_features(const MeasurementSample& s);
/// Network context from a REM bundle joined with live velocity and payload.
FeatureVector rem_features(const FeatureBundle& bundle, double velocity, double payload);

/// Integer-codes cell ids against the training vocabulary; ids never seen in
/// training share the code vocabulary_size().
class FeatureEncoder {
 public:
  FeatureEncoder() = default;
  explicit FeatureEncoder(std::vector<std::int64_t> cell_ids);

  static FeatureEncoder fit(std::span<const FeatureVector> rows);

  double code(std::int64_t cell_id) const;
  std::size_t vocabulary_size() const { return vocabulary_.size(); }
  std::span<const std::int64_t> vocabulary() const { return vocabulary_; }

  std::array<double, kFeatureDim> encode(const FeatureVector& f) const;

  nlohmann::json to_json() const;
  static FeatureEncoder from_json(const nlohmann::json& j);

 private:
  std::vector<std::int64_t> vocabulary_;  // sorted, unique
};

}  // namespace hvsim
