#include "hvsim/features.hpp"

#include <algorithm>

namespace hvsim {

FeatureVector raw_features(const MeasurementSample& s) {
  return {s.rsrp, s.rsrq, s.sinr, static_cast<double>(s.cqi), static_cast<double>(s.ta),
          s.velocity, s.cell_id, static_cast<double>(s.payload_size)};
}

FeatureVector rem_features(const FeatureBundle& b, double velocity, double payload) {
  return {b.rsrp, b.rsrq, b.sinr, b.cqi, b.ta, velocity, b.cell_id, payload};
}

FeatureEncoder::FeatureEncoder(std::vector<std::int64_t> cell_ids) : vocabulary_(std::move(cell_ids)) {
  std::sort(vocabulary_.begin(), vocabulary_.end());
  vocabulary_.erase(std::unique(vocabulary_.begin(), vocabulary_.end()), vocabulary_.end());
}

FeatureEncoder FeatureEncoder::fit(std::span<const FeatureVector> rows) {
  std::vector<std::int64_t> ids;
  ids.reserve(rows.size());
  for (const auto& r : rows) ids.push_back(r.cell_id);
  return FeatureEncoder(std::move(ids));
}

double FeatureEncoder::code(std::int64_t cell_id) const {
  const auto it = std::lower_bound(vocabulary_.begin(), vocabulary_.end(), cell_id);
  if (it == vocabulary_.end() || *it != cell_id) return static_cast<double>(vocabulary_.size());
  return static_cast<double>(it - vocabulary_.begin());
}

std::array<double, kFeatureDim> FeatureEncoder::encode(const FeatureVector& f) const {
  return {f.rsrp, f.rsrq, f.sinr, f.cqi, f.ta, f.velocity, code(f.cell_id), f.payload};
}

nlohmann::json FeatureEncoder::to_json() const { return {{"cell_ids", vocabulary_}}; }

FeatureEncoder FeatureEncoder::from_json(const nlohmann::json& j) {
  return FeatureEncoder(j.at("cell_ids").get<std::vector<std::int64_t>>());
}

}  // namespace hvsim
