#include "hvsim/geo_rem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "hvsim/simd/kernels.hpp"

namespace hvsim {

namespace {

constexpr std::array<std::string_view, 6> kLayerNames{"rsrp", "rsrq", "sinr", "cqi", "ta", "cell_id"};

std::size_t numeric_slot(Layer layer) {
  if (layer == Layer::cell_id) throw std::invalid_argument("cell_id is not a numeric layer");
  return static_cast<std::size_t>(layer);
}

double numeric_value(const MeasurementSample& s, Layer layer) {
  switch (layer) {
    case Layer::rsrp: return s.rsrp;
    case Layer::rsrq: return s.rsrq;
    case Layer::sinr: return s.sinr;
    case Layer::cqi: return s.cqi;
    case Layer::ta: return s.ta;
    case Layer::cell_id: break;
  }
  throw std::invalid_argument("cell_id is not a numeric layer");
}

struct Accumulator {
  std::array<double, 5> sum{};
  int count = 0;
  std::map<std::int64_t, int> ids;
};

}  // namespace

std::string_view layer_name(Layer layer) { return kLayerNames[static_cast<std::size_t>(layer)]; }

Layer parse_layer(std::string_view name) {
  for (Layer l : kAllLayers) {
    if (layer_name(l) == name) return l;
  }
  throw std::invalid_argument("unknown REM layer '" + std::string(name) + "'");
}

double FeatureBundle::value(Layer layer) const {
  switch (layer) {
    case Layer::rsrp: return rsrp;
    case Layer::rsrq: return rsrq;
    case Layer::sinr: return sinr;
    case Layer::cqi: return cqi;
    case Layer::ta: return ta;
    case Layer::cell_id: return static_cast<double>(cell_id);
  }
  return 0.0;
}

Rem::Rem(Point2 origin, double cell_width) : origin_(origin), cell_width_(cell_width) {
  if (!(cell_width > 0.0) || !std::isfinite(cell_width)) throw std::invalid_argument("REM cell width must be > 0");
  if (!is_finite(origin)) throw std::invalid_argument("REM origin must be finite");
}

Rem Rem::build(std::span<const MeasurementSample> samples, double cell_width) {
  if (samples.empty()) throw std::invalid_argument("cannot build a REM from an empty sample set");
  if (!(cell_width > 0.0) || !std::isfinite(cell_width)) throw std::invalid_argument("REM cell width must be > 0");

  std::vector<const MeasurementSample*> valid;
  valid.reserve(samples.size());
  Point2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (const auto& s : samples) {
    if (!is_valid(s)) continue;
    valid.push_back(&s);
    lo.x = std::min(lo.x, s.position.x);
    lo.y = std::min(lo.y, s.position.y);
  }
  if (valid.empty()) throw std::invalid_argument("no valid samples left to build a REM");

  Rem rem(lo, cell_width);
  rem.rejected_ = samples.size() - valid.size();

  std::map<GridIndex, Accumulator> acc;
  for (const auto* s : valid) {
    auto& a = acc[rem.index_of(s->position)];
    for (Layer l : kNumericLayers) a.sum[static_cast<std::size_t>(l)] += numeric_value(*s, l);
    ++a.count;
    ++a.ids[s->cell_id];
  }

  const std::size_t n = acc.size();
  rem.cells_.reserve(n);
  rem.counts_.reserve(n);
  rem.cell_ids_.reserve(n);
  for (auto& v : rem.numeric_) v.reserve(n);
  for (const auto& [index, a] : acc) {
    rem.cells_.push_back(index);
    rem.counts_.push_back(a.count);
    for (std::size_t k = 0; k < 5; ++k) rem.numeric_[k].push_back(a.sum[k] / a.count);
    // std::map iterates ids ascending, so strict > keeps the smallest on ties.
    std::int64_t mode = a.ids.begin()->first;
    int best = 0;
    for (const auto& [id, c] : a.ids) {
      if (c > best) {
        best = c;
        mode = id;
      }
    }
    rem.cell_ids_.push_back(mode);
  }
  rem.index_cells();
  return rem;
}

Rem Rem::from_layers(Point2 origin, double cell_width, std::span<const RemLayer> layers) {
  Rem rem(origin, cell_width);
  std::array<const RemLayer*, 6> by_kind{};
  for (const auto& l : layers) {
    auto& slot = by_kind[static_cast<std::size_t>(l.layer)];
    if (slot != nullptr) throw std::invalid_argument("duplicate REM layer " + std::string(layer_name(l.layer)));
    slot = &l;
  }
  for (Layer l : kAllLayers) {
    if (by_kind[static_cast<std::size_t>(l)] == nullptr) {
      throw std::invalid_argument("missing REM layer " + std::string(layer_name(l)));
    }
  }

  auto sorted = [](const RemLayer& l) {
    auto cells = l.cells;
    std::sort(cells.begin(), cells.end(), [](const RemCell& a, const RemCell& b) { return a.index < b.index; });
    return cells;
  };
  const auto reference = sorted(*by_kind[0]);
  for (std::size_t k = 1; k < reference.size(); ++k) {
    if (reference[k].index == reference[k - 1].index) throw std::invalid_argument("duplicate REM cell index");
  }
  for (const auto& c : reference) {
    if (c.count < 1) throw std::invalid_argument("REM cell with count < 1");
    rem.cells_.push_back(c.index);
    rem.counts_.push_back(c.count);
  }
  for (Layer l : kAllLayers) {
    const auto cells = sorted(*by_kind[static_cast<std::size_t>(l)]);
    if (cells.size() != reference.size()) {
      throw std::invalid_argument("REM layer " + std::string(layer_name(l)) + " has a different cell set");
    }
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (cells[k].index != reference[k].index || cells[k].count != reference[k].count) {
        throw std::invalid_argument("REM layer " + std::string(layer_name(l)) + " has a different cell set");
      }
      if (!std::isfinite(cells[k].value)) throw std::invalid_argument("non-finite REM cell value");
      if (l == Layer::cell_id) {
        rem.cell_ids_.push_back(static_cast<std::int64_t>(cells[k].value));
      } else {
        rem.numeric_[numeric_slot(l)].push_back(cells[k].value);
      }
    }
  }
  rem.index_cells();
  return rem;
}

void Rem::index_cells() {
  slot_.clear();
  slot_.reserve(cells_.size());
  center_x_.resize(cells_.size());
  center_y_.resize(cells_.size());
  for (std::size_t k = 0; k < cells_.size(); ++k) {
    slot_.emplace(cells_[k], k);
    const Point2 c = cell_center(cells_[k]);
    center_x_[k] = c.x;
    center_y_[k] = c.y;
  }
}

GridIndex Rem::index_of(Point2 p) const {
  return {static_cast<std::int64_t>(std::floor((p.x - origin_.x) / cell_width_)),
          static_cast<std::int64_t>(std::floor((p.y - origin_.y) / cell_width_))};
}

Point2 Rem::cell_center(GridIndex g) const {
  return {origin_.x + (static_cast<double>(g.i) + 0.5) * cell_width_,
          origin_.y + (static_cast<double>(g.j) + 0.5) * cell_width_};
}

FeatureBundle Rem::bundle_at(std::size_t k) const {
  return {numeric_[0][k], numeric_[1][k], numeric_[2][k], numeric_[3][k], numeric_[4][k], cell_ids_[k]};
}

std::optional<FeatureBundle> Rem::lookup(Point2 p) const {
  if (!is_finite(p)) throw std::invalid_argument("REM lookup position must be finite");
  const auto it = slot_.find(index_of(p));
  if (it == slot_.end()) return std::nullopt;
  return bundle_at(it->second);
}

FallbackLookup Rem::lookup_detailed(Point2 p) const {
  if (cells_.empty()) throw std::logic_error("fallback lookup on a REM without populated cells");
  if (!is_finite(p)) throw std::invalid_argument("REM lookup position must be finite");
  const GridIndex g = index_of(p);
  if (const auto it = slot_.find(g); it != slot_.end()) return {bundle_at(it->second), g, false};
  // cells_ is sorted, so the first minimum is the lexicographically smallest.
  const std::size_t k = simd::argmin_sq_dist(center_x_, center_y_, p.x, p.y);
  return {bundle_at(k), cells_[k], true};
}

RemLayer Rem::layer(Layer layer) const {
  RemLayer out{layer, {}};
  out.cells.reserve(cells_.size());
  for (std::size_t k = 0; k < cells_.size(); ++k) {
    const double v = layer == Layer::cell_id ? static_cast<double>(cell_ids_[k]) : numeric_[numeric_slot(layer)][k];
    out.cells.push_back({cells_[k], v, counts_[k]});
  }
  return out;
}

double miss_ratio(const Rem& rem, std::span<const Point2> positions) {
  if (positions.empty()) throw std::invalid_argument("miss_ratio needs at least one position");
  std::size_t misses = 0;
  for (const auto& p : positions) {
    if (!rem.lookup(p)) ++misses;
  }
  return static_cast<double>(misses) / static_cast<double>(positions.size());
}

ErrorReport layer_lookup_error(const Rem& rem, std::span<const MeasurementSample> holdout, Layer layer) {
  if (layer == Layer::cell_id) {
    throw std::invalid_argument("cell_id is categorical; use cell_id_mismatch_rate");
  }
  if (holdout.empty()) throw std::invalid_argument("layer_lookup_error needs a non-empty holdout");
  std::vector<double> looked_up;
  std::vector<double> truth;
  looked_up.reserve(holdout.size());
  truth.reserve(holdout.size());
  for (const auto& s : holdout) {
    looked_up.push_back(rem.lookup_with_fallback(s.position).value(layer));
    truth.push_back(numeric_value(s, layer));
  }
  return error_report(looked_up, truth);
}

double cell_id_mismatch_rate(const Rem& rem, std::span<const MeasurementSample> holdout) {
  if (holdout.empty()) throw std::invalid_argument("cell_id_mismatch_rate needs a non-empty holdout");
  std::size_t mismatches = 0;
  for (const auto& s : holdout) {
    if (rem.lookup_with_fallback(s.position).cell_id != s.cell_id) ++mismatches;
  }
  return static_cast<double>(mismatches) / static_cast<double>(holdout.size());
}

nlohmann::json to_json(const Rem& rem) {
  nlohmann::json j;
  j["origin"] = {rem.origin().x, rem.origin().y};
  j["cell_width"] = rem.cell_width();
  nlohmann::json layers = nlohmann::json::object();
  for (Layer l : kAllLayers) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : rem.layer(l).cells) {
      if (l == Layer::cell_id) {
        cells.push_back({c.index.i, c.index.j, static_cast<std::int64_t>(c.value), c.count});
      } else {
        cells.push_back({c.index.i, c.index.j, c.value, c.count});
      }
    }
    layers[std::string(layer_name(l))] = std::move(cells);
  }
  j["layers"] = std::move(layers);
  return j;
}

Rem rem_from_json(const nlohmann::json& j) {
  try {
    const auto& o = j.at("origin");
    const Point2 origin{o.at(0).get<double>(), o.at(1).get<double>()};
    const double width = j.at("cell_width").get<double>();
    std::vector<RemLayer> layers;
    for (const auto& [name, cells] : j.at("layers").items()) {
      RemLayer layer{parse_layer(name), {}};
      for (const auto& c : cells) {
        if (!c.is_array() || c.size() != 4) throw std::invalid_argument("REM cell must be [i, j, value, count]");
        layer.cells.push_back(
            {{c[0].get<std::int64_t>(), c[1].get<std::int64_t>()}, c[2].get<double>(), c[3].get<int>()});
      }
      layers.push_back(std::move(layer));
    }
    return Rem::from_layers(origin, width, layers);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed REM JSON: ") + e.what());
  }
}

}  // namespace hvsim
