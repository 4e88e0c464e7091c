#pragma once

// Multi-layer radio environmental map (REM): measurements are bucketed into a
// square grid of width c anchored at the bounding-box minimum of the training
// positions, and each cell stores one aggregate per network-context feature.
// A position P is served from cell floor((P - origin) / c).

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "hvsim/geometry.hpp"
#include "hvsim/measurement.hpp"
#include "hvsim/metrics.hpp"

namespace hvsim {

struct GridIndex {
  std::int64_t i = 0;  // column
  std::int64_t j = 0;  // row

  friend auto operator<=>(const GridIndex&, const GridIndex&) = default;
};

struct GridIndexHash {
  std::size_t operator()(const GridIndex& g) const noexcept {
    const auto a = static_cast<std::uint64_t>(g.i);
    const auto b = static_cast<std::uint64_t>(g.j);
    return std::hash<std::uint64_t>{}(a * 0x9E3779B97F4A7C15ULL ^ (b + 0x632BE59BD9B4E019ULL + (a << 6) + (a >> 2)));
  }
};

enum class Layer { rsrp, rsrq, sinr, cqi, ta, cell_id };

inline constexpr std::array<Layer, 6> kAllLayers{Layer::rsrp, Layer::rsrq, Layer::sinr,
                                                 Layer::cqi,  Layer::ta,   Layer::cell_id};
inline constexpr std::array<Layer, 5> kNumericLayers{Layer::rsrp, Layer::rsrq, Layer::sinr, Layer::cqi, Layer::ta};

std::string_view layer_name(Layer layer);
Layer parse_layer(std::string_view name);

/// Network-context features served by one REM cell.
struct FeatureBundle {
  double rsrp = 0.0;
  double rsrq = 0.0;
  double sinr = 0.0;
  double cqi = 0.0;
  double ta = 0.0;
  std::int64_t cell_id = 0;

  friend bool operator==(const FeatureBundle&, const FeatureBundle&) = default;

  /// Numeric layer value; cell_id is returned as a double.
  double value(Layer layer) const;
};

struct RemCell {
  GridIndex index;
  double value = 0.0;
  int count = 0;
};

/// Sparse view of one layer, sorted by index.
struct RemLayer {
  Layer layer = Layer::rsrp;
  std::vector<RemCell> cells;
};

struct FallbackLookup {
  FeatureBundle features;
  GridIndex cell;
  bool miss = false;  // true when the owning cell was empty and a neighbor served
};

class Rem {
 public:
  /// Empty map: every lookup misses.
  Rem(Point2 origin, double cell_width);

  /// Aggregates samples (mean for numeric layers, mode for cell_id with ties
  /// going to the smallest id). Samples failing is_valid() are skipped and
  /// counted in rejected_samples(). Throws std::invalid_argument when samples
  /// is empty, cell_width <= 0, or nothing survives validation.
  static Rem build(std::span<const MeasurementSample> samples, double cell_width);

  /// Reassembles a map from per-layer cell lists; every layer must list the
  /// same index set with counts >= 1.
  static Rem from_layers(Point2 origin, double cell_width, std::span<const RemLayer> layers);

  double cell_width() const { return cell_width_; }
  Point2 origin() const { return origin_; }
  std::size_t populated_cells() const { return cells_.size(); }
  std::size_t rejected_samples() const { return rejected_; }
  bool empty() const { return cells_.empty(); }

  GridIndex index_of(Point2 p) const;
  Point2 cell_center(GridIndex g) const;

  std::optional<FeatureBundle> lookup(Point2 p) const;

  /// Nearest populated cell center on a miss, ties to the lexicographically
  /// smallest (i, j). Throws std::logic_error on an empty map.
  FallbackLookup lookup_detailed(Point2 p) const;
  FeatureBundle lookup_with_fallback(Point2 p) const { return lookup_detailed(p).features; }

  RemLayer layer(Layer layer) const;
  std::span<const GridIndex> cells() const { return cells_; }
  std::span<const int> counts() const { return counts_; }

 private:
  FeatureBundle bundle_at(std::size_t k) const;
  void index_cells();

  Point2 origin_;
  double cell_width_;
  std::size_t rejected_ = 0;

  // Structure of arrays, sorted by GridIndex.
  std::vector<GridIndex> cells_;
  std::vector<int> counts_;
  std::array<std::vector<double>, 5> numeric_;
  std::vector<std::int64_t> cell_ids_;
  std::vector<double> center_x_;
  std::vector<double> center_y_;
  std::unordered_map<GridIndex, std::size_t, GridIndexHash> slot_;
};

inline Rem build_rem(std::span<const MeasurementSample> samples, double cell_width) {
  return Rem::build(samples, cell_width);
}

/// Fraction of positions whose plain lookup misses. Throws on empty input.
double miss_ratio(const Rem& rem, std::span<const Point2> positions);

/// RMSE/MAE between the fallback lookup at each holdout position and the
/// holdout's own value. cell_id is rejected; use cell_id_mismatch_rate.
ErrorReport layer_lookup_error(const Rem& rem, std::span<const MeasurementSample> holdout, Layer layer);

double cell_id_mismatch_rate(const Rem& rem, std::span<const MeasurementSample> holdout);

nlohmann::json to_json(const Rem& rem);
Rem rem_from_json(const nlohmann::json& j);

}  // namespace hvsim
