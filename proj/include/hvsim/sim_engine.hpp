#pragma once

// Hybrid simulation loop: model-based mobility drives REM lookups, the forest
// predicts S~, the GP derivation model samples the achieved rate S, and an
// opportunistic scheme decides when the sensor buffer is flushed.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hvsim/data_rate_model.hpp"
#include "hvsim/evalkit.hpp"
#include "hvsim/features.hpp"
#include "hvsim/geo_rem.hpp"
#include "hvsim/mobility.hpp"
#include "hvsim/random.hpp"

namespace hvsim {

enum class SchemeKind { periodic, cat, mlcat };

std::string_view to_string(SchemeKind kind);
SchemeKind parse_scheme_kind(std::string_view s);

struct SchemeConfig {
  SchemeKind kind = SchemeKind::periodic;
  std::string name;            // label in reports; defaults to the kind
  double interval = 10.0;      // s, periodic
  double probe_interval = 1.0; // s
  double metric_min = 0.0;
  double metric_max = 30.0;
  double alpha = 1.0;

  /// Throws std::invalid_argument unless metric_min < metric_max, interval > 0,
  /// probe_interval > 0 and alpha > 0.
  void validate() const;
  std::string label() const { return name.empty() ? std::string(to_string(kind)) : name; }
};

/// Defaults: CAT on SINR 0..30 dB; ML-CAT on S~ 0..15 MBit/s (uplink) or
/// 0..30 MBit/s (downlink); alpha 1.
SchemeConfig default_scheme(SchemeKind kind, Direction direction = Direction::uplink);

SchemeConfig scheme_from_json(const nlohmann::json& j, Direction direction);
nlohmann::json to_json(const SchemeConfig& cfg);

/// clamp((metric - min) / (max - min), 0, 1) ^ alpha.
double transmission_probability(double metric, const SchemeConfig& cfg);

/// Per-run scheme state; t_last is the time of the last successful flush.
struct SchemeState {
  SchemeConfig config;
  double t_last = 0.0;
};

struct DecisionInputs {
  double sinr = 0.0;            // dB, CAT metric
  double predicted_rate = 0.0;  // MBit/s, ML-CAT metric
};

/// Periodic fires iff t - t_last >= interval. CAT and ML-CAT draw one uniform
/// from rng per call and fire with the scheme probability. Does not update
/// t_last; the caller does so once the flush succeeds.
bool decide(const SchemeState& state, double t, const DecisionInputs& inputs, Rng& rng);

/// Uniform [0, 1) from the top 53 bits of one generator output.
double uniform01(Rng& rng);

struct TransmissionRecord {
  double t_start = 0.0;              // s
  std::int64_t payload = 0;          // bytes
  FeatureVector features;
  double predicted_rate = 0.0;       // S~, MBit/s
  double achieved_rate = 0.0;        // S, MBit/s
  double duration = 0.0;             // s
  bool rem_miss = false;
  bool forced = false;               // flushed by the buffer-age guard

  friend bool operator==(const TransmissionRecord&, const TransmissionRecord&) = default;
};

struct SimulationResult {
  std::vector<TransmissionRecord> records;
  std::int64_t residual_buffer = 0;  // bytes
  std::int64_t generated = 0;        // bytes
  double simulated_duration = 0.0;   // s
  double wall_time = 0.0;            // s
  std::uint64_t seed = 0;

  std::vector<double> achieved_rates() const;
};

struct Scenario {
  RoadNetwork network;
  Route route;
  bool loop = false;                   // restart the route when it completes
  double duration = 600.0;             // s; the run also ends at the trip end unless loop
  double dt = 0.1;                     // s, mobility step
  std::int64_t generation_rate = 50000;  // bytes/s
  double max_buffer_age = 120.0;       // s, forced-flush guard
  double min_rate_floor = 0.01;        // MBit/s; slower transfers are timed at this rate
  KinematicParams kinematics;
};

/// Bytes of one transfer at rate S, in seconds: payload * 8 / (S * 1e6),
/// with S floored at `floor` MBit/s.
double transfer_duration(std::int64_t payload, double rate, double floor = 0.01);

/// Deterministic in (scenario, scheme, model, rem, seed) apart from wall_time.
SimulationResult run_simulation(const Scenario& scenario, const SchemeConfig& scheme, const DataRateModel& model,
                                const Rem& rem, std::uint64_t seed);

struct SchemeDistribution {
  std::string scheme;
  std::vector<double> achieved_rates;  // pooled over runs
  Summary summary;
  std::vector<SimulationResult> runs;
};

/// Runs seeds base_seed .. base_seed + n_runs - 1 for every scheme.
std::vector<SchemeDistribution> compare_schemes(const Scenario& scenario, std::span<const SchemeConfig> schemes,
                                                const DataRateModel& model, const Rem& rem, int n_runs,
                                                std::uint64_t base_seed, unsigned workers = 1);

/// Per-run CSV: t_start,payload,pred_rate,achieved_rate,duration,miss.
std::string result_csv(const SimulationResult& result, const std::string& provenance = {});

}  // namespace hvsim
