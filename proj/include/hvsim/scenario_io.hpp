#pragma once

// Campaign ingestion plus a seeded synthetic drive-test generator whose
// known propagation and rate functions act as ground truth for validation.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hvsim/geometry.hpp"
#include "hvsim/measurement.hpp"
#include "hvsim/mobility.hpp"

namespace hvsim {

// ---------------------------------------------------------------- projection

/// Equirectangular projection about a fixed centroid (spherical earth).
class LocalFrame {
 public:
  LocalFrame(double lat0_deg, double lon0_deg);

  Point2 project(double lat_deg, double lon_deg) const;
  std::pair<double, double> unproject(Point2 p) const;  // (lat, lon) in degrees

  static constexpr double kEarthRadius = 6371008.8;  // m, mean radius

 private:
  double lat0_;
  double lon0_;
  double cos_lat0_;
};

// ----------------------------------------------------------- synthetic field

struct BaseStation {
  std::int64_t cell_id = 0;
  Point2 position;
  double tx_power_dbm = 46.0;
};

/// Maps SINR (dB) onto the achievable rate of one direction.
struct RateFunction {
  double ul_scale = 2.0;             // MBit/s per bit/s/Hz
  double dl_scale = 4.0;
  double payload_half = 100000.0;    // bytes at which half of the link rate is reached
  double velocity_scale = 60.0;      // m/s; rate *= 1 / (1 + v / velocity_scale)
  double fading_db = 2.0;            // instantaneous SINR spread affecting the rate
  double relative_noise = 0.15;      // multiplicative rate noise (std)
  double absolute_noise = 0.3;       // additive rate noise (std, MBit/s)
};

struct SyntheticField {
  std::vector<BaseStation> stations;
  double path_loss_exponent = 3.76;
  double reference_loss_db = 15.3;  // path loss at 1 m
  double shadowing_std_db = 6.0;
  double correlation_length = 60.0;  // m, spacing of the shadowing lattice
  std::uint64_t shadowing_seed = 1;
  double noise_floor_dbm = -116.0;
  double measurement_noise_db = 3.0;  // per-sample error on measured RSRP/SINR
  RateFunction rate;
};

SyntheticField field_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SyntheticField& f);

/// Noise-free radio state at a position.
struct RadioState {
  std::int64_t cell_id = 0;
  double rsrp = 0.0;        // dBm of the serving (strongest) station
  double sinr = 0.0;        // dB
  double distance = 0.0;    // m to the serving station
};

/// Correlated shadowing of one station at p: i.i.d. Normal lattice values
/// (spacing = correlation length) hashed from (seed, station, node), bilinearly
/// interpolated. Pure function of its arguments.
double shadowing_db(const SyntheticField& field, std::size_t station, Point2 p);

RadioState evaluate_field(const SyntheticField& field, Point2 p, bool with_shadowing = true);

/// Monotone piecewise-linear feature mappings.
double rsrq_from_sinr(double sinr_db);
int cqi_from_sinr(double sinr_db);
int ta_from_distance(double distance_m);

/// Noise-free rate (MBit/s) for an instantaneous SINR, payload and speed.
double expected_rate(const RateFunction& rate, double sinr_db, double payload_bytes, double velocity, Direction dir);

struct CampaignOptions {
  double sampling_interval = 1.0;  // s between samples
  double dt = 0.1;                 // mobility step
  double position_noise = 2.0;     // m, GNSS error std
  double payload_min = 10000.0;    // bytes, log-uniform
  double payload_max = 3000000.0;
  KinematicParams kinematics;
  std::uint64_t seed = 0;
};

/// Drives every trip, sampling features and rates; directions alternate per
/// sample (uplink first). Throws std::runtime_error if a trip is unroutable.
std::vector<MeasurementSample> generate_campaign(const SyntheticField& field, const RoadNetwork& network,
                                                 std::span<const std::pair<NodeId, NodeId>> trips,
                                                 const CampaignOptions& options);

/// Deterministic random trips between distinct nodes.
std::vector<std::pair<NodeId, NodeId>> random_trips(const RoadNetwork& network, std::size_t count,
                                                    std::uint64_t seed);

// ------------------------------------------------------------------ CSV I/O

inline constexpr const char* kCampaignHeader =
    "x,y,t,rsrp,rsrq,sinr,cqi,ta,velocity,cell_id,payload,data_rate,direction";

/// Lines starting with '#' before the header are provenance comments.
void write_campaign(std::ostream& out, std::span<const MeasurementSample> samples,
                    const std::string& provenance = {});
std::vector<MeasurementSample> read_campaign(std::istream& in, const std::string& source = "<stream>");

void save_campaign(const std::filesystem::path& file, std::span<const MeasurementSample> samples,
                   const std::string& provenance = {});
std::vector<MeasurementSample> load_campaign(const std::filesystem::path& file);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace hvsim
