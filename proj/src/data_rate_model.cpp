#include "hvsim/data_rate_model.hpp"

#include <stdexcept>
#include <string>

#include "hvsim/evalkit.hpp"

namespace hvsim {

double DataRateModel::predict(const FeatureVector& f) const {
  const auto x = encoder.encode(f);
  return forest.predict(x);
}

nlohmann::json DataRateModel::to_json() const {
  return {{"direction", std::string(to_string(direction))},
          {"encoder", encoder.to_json()},
          {"forest", forest.to_json()},
          {"derivation", derivation.to_json()}};
}

DataRateModel DataRateModel::from_json(const nlohmann::json& j) {
  try {
    DataRateModel m;
    m.direction = parse_direction(j.at("direction").get<std::string>());
    m.encoder = FeatureEncoder::from_json(j.at("encoder"));
    m.forest = ForestModel::from_json(j.at("forest"));
    m.derivation = GprModel::from_json(j.at("derivation"));
    if (m.forest.dim() != kFeatureDim) throw std::invalid_argument("model forest dimension is not 8");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed model JSON: ") + e.what());
  }
}

std::vector<FeatureVector> model_features(std::span<const MeasurementSample> samples, const Rem* rem) {
  std::vector<FeatureVector> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    if (rem == nullptr) {
      out.push_back(raw_features(s));
    } else {
      out.push_back(rem_features(rem->lookup_with_fallback(s.position), s.velocity,
                                 static_cast<double>(s.payload_size)));
    }
  }
  return out;
}

Dataset encode_dataset(const FeatureEncoder& encoder, std::span<const FeatureVector> features,
                       std::span<const MeasurementSample> samples) {
  if (features.size() != samples.size()) throw std::invalid_argument("feature/sample count mismatch");
  Dataset data;
  data.dim = kFeatureDim;
  data.x.reserve(features.size() * kFeatureDim);
  data.y.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) data.add(encoder.encode(features[i]), samples[i].data_rate);
  return data;
}

std::vector<MeasurementSample> filter_direction(std::span<const MeasurementSample> samples, Direction direction) {
  std::vector<MeasurementSample> out;
  for (const auto& s : samples) {
    if (s.direction == direction) out.push_back(s);
  }
  return out;
}

DataRateModel train_data_rate_model(std::span<const MeasurementSample> all, Direction direction, const Rem* rem,
                                    const TrainOptions& options) {
  const auto samples = filter_direction(all, direction);
  if (samples.size() < 10) {
    throw std::invalid_argument("need at least 10 " + std::string(to_string(direction)) + " samples to train");
  }
  const auto features = model_features(samples, rem);

  DataRateModel model;
  model.direction = direction;
  model.encoder = FeatureEncoder::fit(features);
  const Dataset data = encode_dataset(model.encoder, features, samples);
  model.forest = train_forest(data, options.forest, derive_seed(options.seed, 11));

  // Out-of-fold predictions keep the derivation model from learning the
  // forest's in-sample optimism.
  const int k = std::max(2, std::min<int>(options.derivation_folds, static_cast<int>(samples.size())));
  const auto folds = kfold_partition(samples.size(), static_cast<std::size_t>(k), derive_seed(options.seed, 12));
  std::vector<double> predicted(samples.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto train_rows = complement(folds, f);
    const ForestModel fold_model =
        train_forest(data.subset(train_rows), options.forest, derive_seed(options.seed, 100 + f));
    for (std::size_t r : folds[f]) predicted[r] = fold_model.predict(data.row(r));
  }
  GprOptions gpr = options.gpr;
  gpr.seed = derive_seed(options.seed, 13);
  model.derivation = train_gpr(predicted, data.y, gpr);
  return model;
}

}  // namespace hvsim
