#pragma once

#include <cstdint>
#include <string_view>

#include "hvsim/geometry.hpp"

namespace hvsim {

enum class Direction { uplink, downlink };

std::string_view to_string(Direction d);
/// Accepts "ul"/"uplink" and "dl"/"downlink".
Direction parse_direction(std::string_view s);

/// One geo-tagged drive-test record.
struct MeasurementSample {
  Point2 position;
  double timestamp = 0.0;  // s
  double rsrp = 0.0;       // dBm
  double rsrq = 0.0;       // dB
  double sinr = 0.0;       // dB
  int cqi = 0;             // 0..15
  int ta = 0;              // timing advance steps
  double velocity = 0.0;   // m/s
  std::int64_t cell_id = 0;
  std::int64_t payload_size = 1;  // bytes
  double data_rate = 0.0;         // MBit/s
  Direction direction = Direction::uplink;

  friend bool operator==(const MeasurementSample&, const MeasurementSample&) = default;
};

/// Checks the record invariants (cqi range, non-negative velocity/rate,
/// positive payload, finite values). Returns false instead of throwing so
/// builders can count rejects.
bool is_valid(const MeasurementSample& s);

}  // namespace hvsim
