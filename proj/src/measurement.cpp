#include "hvsim/measurement.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hvsim {

std::string_view to_string(Direction d) { return d == Direction::uplink ? "ul" : "dl"; }

Direction parse_direction(std::string_view s) {
  if (s == "ul" || s == "uplink") return Direction::uplink;
  if (s == "dl" || s == "downlink") return Direction::downlink;
  throw std::invalid_argument("unknown direction '" + std::string(s) + "'");
}

bool is_valid(const MeasurementSample& s) {
  return is_finite(s.position) && std::isfinite(s.timestamp) && std::isfinite(s.rsrp) && std::isfinite(s.rsrq) &&
         std::isfinite(s.sinr) && std::isfinite(s.velocity) && std::isfinite(s.data_rate) && s.cqi >= 0 &&
         s.cqi <= 15 && s.ta >= 0 && s.velocity >= 0.0 && s.data_rate >= 0.0 && s.payload_size > 0;
}

}  // namespace hvsim
