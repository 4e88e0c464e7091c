#include "hvsim/scenario_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "hvsim/random.hpp"

namespace hvsim {

// ---------------------------------------------------------------- projection

LocalFrame::LocalFrame(double lat0_deg, double lon0_deg)
    : lat0_(lat0_deg), lon0_(lon0_deg), cos_lat0_(std::cos(lat0_deg * std::numbers::pi / 180.0)) {
  if (!std::isfinite(lat0_deg) || !std::isfinite(lon0_deg) || std::fabs(lat0_deg) >= 90.0) {
    throw std::invalid_argument("projection centroid must be finite with |lat| < 90");
  }
}

Point2 LocalFrame::project(double lat_deg, double lon_deg) const {
  constexpr double rad = std::numbers::pi / 180.0;
  return {kEarthRadius * (lon_deg - lon0_) * rad * cos_lat0_, kEarthRadius * (lat_deg - lat0_) * rad};
}

std::pair<double, double> LocalFrame::unproject(Point2 p) const {
  constexpr double deg = 180.0 / std::numbers::pi;
  return {lat0_ + p.y / kEarthRadius * deg, lon0_ + p.x / (kEarthRadius * cos_lat0_) * deg};
}

// ----------------------------------------------------------- synthetic field

SyntheticField field_from_json(const nlohmann::json& j) {
  SyntheticField f;
  try {
    for (const auto& s : j.at("stations")) {
      f.stations.push_back({s.at("cell_id").get<std::int64_t>(),
                            {s.at("x").get<double>(), s.at("y").get<double>()},
                            s.value("tx_power_dbm", 46.0)});
    }
    f.path_loss_exponent = j.value("path_loss_exponent", f.path_loss_exponent);
    f.reference_loss_db = j.value("reference_loss_db", f.reference_loss_db);
    f.shadowing_std_db = j.value("shadowing_std_db", f.shadowing_std_db);
    f.correlation_length = j.value("correlation_length", f.correlation_length);
    f.shadowing_seed = j.value("shadowing_seed", f.shadowing_seed);
    f.noise_floor_dbm = j.value("noise_floor_dbm", f.noise_floor_dbm);
    f.measurement_noise_db = j.value("measurement_noise_db", f.measurement_noise_db);
    if (j.contains("rate")) {
      const auto& r = j.at("rate");
      f.rate.ul_scale = r.value("ul_scale", f.rate.ul_scale);
      f.rate.dl_scale = r.value("dl_scale", f.rate.dl_scale);
      f.rate.payload_half = r.value("payload_half", f.rate.payload_half);
      f.rate.velocity_scale = r.value("velocity_scale", f.rate.velocity_scale);
      f.rate.fading_db = r.value("fading_db", f.rate.fading_db);
      f.rate.relative_noise = r.value("relative_noise", f.rate.relative_noise);
      f.rate.absolute_noise = r.value("absolute_noise", f.rate.absolute_noise);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed synthetic field: ") + e.what());
  }
  if (f.stations.empty()) throw std::invalid_argument("synthetic field needs at least one station");
  if (!(f.correlation_length > 0.0)) throw std::invalid_argument("synthetic field: correlation_length must be > 0");
  if (f.shadowing_std_db < 0.0 || f.measurement_noise_db < 0.0) {
    throw std::invalid_argument("synthetic field: noise levels must be >= 0");
  }
  return f;
}

nlohmann::json to_json(const SyntheticField& f) {
  nlohmann::json stations = nlohmann::json::array();
  for (const auto& s : f.stations) {
    stations.push_back({{"cell_id", s.cell_id}, {"x", s.position.x}, {"y", s.position.y}, {"tx_power_dbm", s.tx_power_dbm}});
  }
  return {{"stations", stations},
          {"path_loss_exponent", f.path_loss_exponent},
          {"reference_loss_db", f.reference_loss_db},
          {"shadowing_std_db", f.shadowing_std_db},
          {"correlation_length", f.correlation_length},
          {"shadowing_seed", f.shadowing_seed},
          {"noise_floor_dbm", f.noise_floor_dbm},
          {"measurement_noise_db", f.measurement_noise_db},
          {"rate",
           {{"ul_scale", f.rate.ul_scale},
            {"dl_scale", f.rate.dl_scale},
            {"payload_half", f.rate.payload_half},
            {"velocity_scale", f.rate.velocity_scale},
            {"fading_db", f.rate.fading_db},
            {"relative_noise", f.rate.relative_noise},
            {"absolute_noise", f.rate.absolute_noise}}}};
}

namespace {

double lattice_normal(std::uint64_t seed, std::size_t station, std::int64_t ix, std::int64_t iy) {
  std::uint64_t h = derive_seed(seed, station);
  h = mix64(h ^ static_cast<std::uint64_t>(ix) * 0xD6E8FEB86659FD93ULL);
  h = mix64(h ^ static_cast<std::uint64_t>(iy) * 0xA0761D6478BD642FULL);
  const std::uint64_t h2 = mix64(h);
  const double u1 = (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
  const double u2 = static_cast<double>(h2 >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double path_loss_db(const SyntheticField& f, double d) {
  return f.reference_loss_db + 10.0 * f.path_loss_exponent * std::log10(std::max(d, 1.0));
}

double interpolate(std::span<const std::array<double, 2>> table, double x) {
  if (x <= table.front()[0]) return table.front()[1];
  if (x >= table.back()[0]) return table.back()[1];
  for (std::size_t k = 1; k < table.size(); ++k) {
    if (x <= table[k][0]) {
      const double w = (x - table[k - 1][0]) / (table[k][0] - table[k - 1][0]);
      return table[k - 1][1] + w * (table[k][1] - table[k - 1][1]);
    }
  }
  return table.back()[1];
}

}  // namespace

double shadowing_db(const SyntheticField& field, std::size_t station, Point2 p) {
  if (field.shadowing_std_db == 0.0) return 0.0;
  const double gx = p.x / field.correlation_length;
  const double gy = p.y / field.correlation_length;
  const double fx = std::floor(gx);
  const double fy = std::floor(gy);
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  const double wx = gx - fx;
  const double wy = gy - fy;
  const std::uint64_t seed = field.shadowing_seed;
  const double v00 = lattice_normal(seed, station, ix, iy);
  const double v10 = lattice_normal(seed, station, ix + 1, iy);
  const double v01 = lattice_normal(seed, station, ix, iy + 1);
  const double v11 = lattice_normal(seed, station, ix + 1, iy + 1);
  const double v = (1 - wx) * (1 - wy) * v00 + wx * (1 - wy) * v10 + (1 - wx) * wy * v01 + wx * wy * v11;
  return field.shadowing_std_db * v;
}

RadioState evaluate_field(const SyntheticField& field, Point2 p, bool with_shadowing) {
  if (field.stations.empty()) throw std::invalid_argument("synthetic field has no stations");
  std::vector<double> rx(field.stations.size());
  std::size_t best = 0;
  for (std::size_t k = 0; k < field.stations.size(); ++k) {
    const auto& s = field.stations[k];
    rx[k] = s.tx_power_dbm - path_loss_db(field, distance(p, s.position)) +
            (with_shadowing ? shadowing_db(field, k, p) : 0.0);
    if (rx[k] > rx[best]) best = k;
  }
  double interference_mw = std::pow(10.0, field.noise_floor_dbm / 10.0);
  for (std::size_t k = 0; k < rx.size(); ++k) {
    if (k != best) interference_mw += std::pow(10.0, rx[k] / 10.0);
  }
  RadioState r;
  r.cell_id = field.stations[best].cell_id;
  r.rsrp = rx[best];
  r.sinr = rx[best] - 10.0 * std::log10(interference_mw);
  r.distance = distance(p, field.stations[best].position);
  return r;
}

double rsrq_from_sinr(double sinr_db) {
  static constexpr std::array<std::array<double, 2>, 5> kTable{
      {{-10.0, -20.0}, {0.0, -14.0}, {10.0, -10.0}, {20.0, -7.0}, {30.0, -5.0}}};
  return interpolate(kTable, sinr_db);
}

int cqi_from_sinr(double sinr_db) {
  return static_cast<int>(std::clamp(std::floor((sinr_db + 6.0) / 2.0), 0.0, 15.0));
}

int ta_from_distance(double distance_m) {
  // One LTE timing-advance step corresponds to 78.12 m.
  return static_cast<int>(std::floor(std::max(distance_m, 0.0) / 78.12));
}

double expected_rate(const RateFunction& rate, double sinr_db, double payload_bytes, double velocity, Direction dir) {
  const double spectral = std::log2(1.0 + std::pow(10.0, sinr_db / 10.0));
  const double scale = dir == Direction::uplink ? rate.ul_scale : rate.dl_scale;
  const double payload_factor = payload_bytes / (payload_bytes + rate.payload_half);
  const double velocity_factor = 1.0 / (1.0 + std::max(velocity, 0.0) / rate.velocity_scale);
  return scale * spectral * payload_factor * velocity_factor;
}

std::vector<MeasurementSample> generate_campaign(const SyntheticField& field, const RoadNetwork& network,
                                                 std::span<const std::pair<NodeId, NodeId>> trips,
                                                 const CampaignOptions& options) {
  if (!(options.dt > 0.0) || !(options.sampling_interval > 0.0)) {
    throw std::invalid_argument("campaign dt and sampling interval must be > 0");
  }
  if (!(options.payload_min > 0.0) || options.payload_max < options.payload_min) {
    throw std::invalid_argument("campaign payload range is invalid");
  }
  const auto ticks_per_sample = std::max<long>(1, std::lround(options.sampling_interval / options.dt));
  Rng rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double log_lo = std::log(options.payload_min);
  const double log_hi = std::log(options.payload_max);

  std::vector<MeasurementSample> out;
  double clock = 0.0;
  bool uplink = true;
  for (const auto& [from, to] : trips) {
    auto route = shortest_path(network, from, to);
    if (!route) {
      throw std::runtime_error("campaign trip " + std::to_string(from) + " -> " + std::to_string(to) +
                               " is unroutable");
    }
    VehicleState state = start_trip(network, std::move(*route));
    long tick = 0;
    while (true) {
      if (tick % ticks_per_sample == 0) {
        const RadioState radio = evaluate_field(field, state.position);
        MeasurementSample s;
        s.position = {state.position.x + options.position_noise * normal(rng),
                      state.position.y + options.position_noise * normal(rng)};
        s.timestamp = clock;
        const double fade = field.measurement_noise_db * normal(rng);
        s.rsrp = radio.rsrp + fade;
        s.sinr = radio.sinr + fade;
        s.rsrq = rsrq_from_sinr(s.sinr);
        s.cqi = cqi_from_sinr(s.sinr);
        s.ta = ta_from_distance(radio.distance);
        s.velocity = state.velocity;
        s.cell_id = radio.cell_id;
        s.payload_size = std::max<std::int64_t>(1, std::llround(std::exp(log_lo + (log_hi - log_lo) * unit(rng))));
        s.direction = uplink ? Direction::uplink : Direction::downlink;
        uplink = !uplink;
        const double inst_sinr = radio.sinr + field.rate.fading_db * normal(rng);
        const double ideal =
            expected_rate(field.rate, inst_sinr, static_cast<double>(s.payload_size), s.velocity, s.direction);
        const double noisy = ideal * (1.0 + field.rate.relative_noise * normal(rng)) +
                             field.rate.absolute_noise * normal(rng);
        s.data_rate = std::max(0.0, noisy);
        out.push_back(s);
      }
      if (state.finished()) break;
      state = step(state, network, options.dt, options.kinematics);
      ++tick;
      clock += options.dt;
    }
  }
  return out;
}

std::vector<std::pair<NodeId, NodeId>> random_trips(const RoadNetwork& network, std::size_t count,
                                                    std::uint64_t seed) {
  const auto ids = network.node_ids();
  if (ids.size() < 2) throw std::invalid_argument("random trips need at least two nodes");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
  std::vector<std::pair<NodeId, NodeId>> trips;
  while (trips.size() < count) {
    const NodeId a = ids[pick(rng)];
    const NodeId b = ids[pick(rng)];
    if (a != b) trips.emplace_back(a, b);
  }
  return trips;
}

// ------------------------------------------------------------------ CSV I/O

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), res.ptr};
}

void write_campaign(std::ostream& out, std::span<const MeasurementSample> samples, const std::string& provenance) {
  if (!provenance.empty()) out << "# " << provenance << '\n';
  out << kCampaignHeader << '\n';
  for (const auto& s : samples) {
    out << format_double(s.position.x) << ',' << format_double(s.position.y) << ',' << format_double(s.timestamp)
        << ',' << format_double(s.rsrp) << ',' << format_double(s.rsrq) << ',' << format_double(s.sinr) << ','
        << s.cqi << ',' << s.ta << ',' << format_double(s.velocity) << ',' << s.cell_id << ',' << s.payload_size
        << ',' << format_double(s.data_rate) << ',' << to_string(s.direction) << '\n';
  }
}

namespace {

template <typename T>
T parse_field(std::string_view text, const char* name, const std::string& where) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw std::invalid_argument(where + ": cannot parse " + name + " from '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

std::vector<MeasurementSample> read_campaign(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<MeasurementSample> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line.front() == '#') continue;
      if (line != kCampaignHeader) {
        throw std::invalid_argument(source + ":" + std::to_string(line_no) + ": expected header '" + kCampaignHeader +
                                    "'");
      }
      header_seen = true;
      continue;
    }
    const std::string where = source + ":" + std::to_string(line_no);
    std::array<std::string_view, 13> f;
    std::size_t count = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      if (count == f.size()) {
        throw std::invalid_argument(where + ": too many fields");
      }
      f[count++] = rest.substr(0, comma);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (count != f.size()) throw std::invalid_argument(where + ": expected 13 fields, got " + std::to_string(count));

    MeasurementSample s;
    s.position = {parse_field<double>(f[0], "x", where), parse_field<double>(f[1], "y", where)};
    s.timestamp = parse_field<double>(f[2], "t", where);
    s.rsrp = parse_field<double>(f[3], "rsrp", where);
    s.rsrq = parse_field<double>(f[4], "rsrq", where);
    s.sinr = parse_field<double>(f[5], "sinr", where);
    s.cqi = parse_field<int>(f[6], "cqi", where);
    s.ta = parse_field<int>(f[7], "ta", where);
    s.velocity = parse_field<double>(f[8], "velocity", where);
    s.cell_id = parse_field<std::int64_t>(f[9], "cell_id", where);
    s.payload_size = parse_field<std::int64_t>(f[10], "payload", where);
    s.data_rate = parse_field<double>(f[11], "data_rate", where);
    try {
      s.direction = parse_direction(f[12]);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + ": " + e.what());
    }
    if (!is_valid(s)) throw std::invalid_argument(where + ": record violates field constraints");
    out.push_back(s);
  }
  if (!header_seen) throw std::invalid_argument(source + ": empty campaign file (no header)");
  return out;
}

void save_campaign(const std::filesystem::path& file, std::span<const MeasurementSample> samples,
                   const std::string& provenance) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write campaign " + file.string());
  write_campaign(out, samples, provenance);
  if (!out) throw std::runtime_error("failed writing campaign " + file.string());
}

std::vector<MeasurementSample> load_campaign(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open campaign " + file.string());
  return read_campaign(in, file.string());
}

}  // namespace hvsim
