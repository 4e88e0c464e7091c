#include "hvsim/sim_engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hvsim/parallel.hpp"
#include "hvsim/scenario_io.hpp"

namespace hvsim {

std::string_view to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::periodic: return "periodic";
    case SchemeKind::cat: return "cat";
    case SchemeKind::mlcat: return "mlcat";
  }
  return "?";
}

SchemeKind parse_scheme_kind(std::string_view s) {
  if (s == "periodic") return SchemeKind::periodic;
  if (s == "cat") return SchemeKind::cat;
  if (s == "mlcat" || s == "ml-cat") return SchemeKind::mlcat;
  throw std::invalid_argument("unknown scheme '" + std::string(s) + "'");
}

void SchemeConfig::validate() const {
  if (!(metric_min < metric_max)) throw std::invalid_argument("scheme " + label() + ": metric_min must be < metric_max");
  if (!(interval > 0.0)) throw std::invalid_argument("scheme " + label() + ": interval must be > 0");
  if (!(probe_interval > 0.0)) throw std::invalid_argument("scheme " + label() + ": probe_interval must be > 0");
  if (!(alpha > 0.0)) throw std::invalid_argument("scheme " + label() + ": alpha must be > 0");
}

SchemeConfig default_scheme(SchemeKind kind, Direction direction) {
  SchemeConfig cfg;
  cfg.kind = kind;
  if (kind == SchemeKind::mlcat) cfg.metric_max = direction == Direction::uplink ? 15.0 : 30.0;
  return cfg;
}

SchemeConfig scheme_from_json(const nlohmann::json& j, Direction direction) {
  try {
    SchemeConfig cfg = default_scheme(parse_scheme_kind(j.at("kind").get<std::string>()), direction);
    cfg.name = j.value("name", std::string());
    cfg.interval = j.value("interval", cfg.interval);
    cfg.probe_interval = j.value("probe_interval", cfg.probe_interval);
    cfg.metric_min = j.value("metric_min", cfg.metric_min);
    cfg.metric_max = j.value("metric_max", cfg.metric_max);
    cfg.alpha = j.value("alpha", cfg.alpha);
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed scheme config: ") + e.what());
  }
}

nlohmann::json to_json(const SchemeConfig& cfg) {
  return {{"kind", std::string(to_string(cfg.kind))}, {"name", cfg.label()},
          {"interval", cfg.interval},                  {"probe_interval", cfg.probe_interval},
          {"metric_min", cfg.metric_min},              {"metric_max", cfg.metric_max},
          {"alpha", cfg.alpha}};
}

double transmission_probability(double metric, const SchemeConfig& cfg) {
  const double x = std::clamp((metric - cfg.metric_min) / (cfg.metric_max - cfg.metric_min), 0.0, 1.0);
  if (std::isnan(x)) return 0.0;
  return std::pow(x, cfg.alpha);
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

bool decide(const SchemeState& state, double t, const DecisionInputs& inputs, Rng& rng) {
  const auto& cfg = state.config;
  switch (cfg.kind) {
    case SchemeKind::periodic: return t - state.t_last >= cfg.interval - 1e-9;
    case SchemeKind::cat: return uniform01(rng) < transmission_probability(inputs.sinr, cfg);
    case SchemeKind::mlcat: return uniform01(rng) < transmission_probability(inputs.predicted_rate, cfg);
  }
  return false;
}

std::vector<double> SimulationResult::achieved_rates() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.achieved_rate);
  return out;
}

double transfer_duration(std::int64_t payload, double rate, double floor) {
  return static_cast<double>(payload) * 8.0 / (std::max(rate, floor) * 1e6);
}

namespace {

/// Converts seconds to an integer number of milliseconds, requiring an exact
/// multiple of `quantum_ms` when given.
std::int64_t to_ms(double seconds, const char* what, std::int64_t quantum_ms = 1) {
  const double ms = seconds * 1000.0;
  const auto rounded = std::llround(ms);
  if (std::fabs(ms - static_cast<double>(rounded)) > 1e-6 || rounded % quantum_ms != 0) {
    throw std::invalid_argument(std::string(what) + " must be a multiple of " + std::to_string(quantum_ms) + " ms");
  }
  return rounded;
}

}  // namespace

SimulationResult run_simulation(const Scenario& scenario, const SchemeConfig& scheme, const DataRateModel& model,
                                const Rem& rem, std::uint64_t seed) {
  const auto wall_start = std::chrono::steady_clock::now();
  scheme.validate();
  if (!model.derivation.trained() || model.forest.trees().empty()) {
    throw std::invalid_argument("simulation needs a trained data-rate model");
  }
  if (rem.empty()) throw std::invalid_argument("simulation needs a REM with populated cells");
  if (scenario.duration < 0.0) throw std::invalid_argument("simulation duration must be >= 0");
  if (scenario.generation_rate < 0) throw std::invalid_argument("generation rate must be >= 0");

  const std::int64_t dt_ms = to_ms(scenario.dt, "dt");
  if (dt_ms <= 0) throw std::invalid_argument("dt must be > 0");
  const std::int64_t probe_ms = to_ms(scheme.probe_interval, "probe_interval", dt_ms);
  const auto steps = static_cast<std::int64_t>(std::floor(scenario.duration * 1000.0 / static_cast<double>(dt_ms) + 1e-9));

  SimulationResult result;
  result.seed = seed;
  Rng rng(seed);
  SchemeState state{scheme, 0.0};
  VehicleState vehicle = start_trip(scenario.network, scenario.route);
  std::int64_t buffer = 0;
  std::int64_t buffer_since_ms = 0;  // start of the current buffering period

  auto generated_until = [&](std::int64_t tick) {
    return scenario.generation_rate * tick * dt_ms / 1000;
  };

  std::int64_t tick = 0;
  for (; tick <= steps; ++tick) {
    const std::int64_t t_ms = tick * dt_ms;
    if (tick > 0) {
      if (vehicle.finished()) {
        if (!scenario.loop) {
          --tick;
          break;
        }
        vehicle = start_trip(scenario.network, scenario.route);
      }
      vehicle = step(vehicle, scenario.network, scenario.dt, scenario.kinematics);
      buffer += generated_until(tick) - generated_until(tick - 1);
    }
    if (t_ms % probe_ms != 0 || buffer == 0) continue;

    const double t = static_cast<double>(t_ms) / 1000.0;
    const FallbackLookup looked_up = rem.lookup_detailed(vehicle.position);
    const FeatureVector features = rem_features(looked_up.features, vehicle.velocity, static_cast<double>(buffer));

    const bool forced = static_cast<double>(t_ms - buffer_since_ms) / 1000.0 > scenario.max_buffer_age;
    std::optional<double> predicted;
    DecisionInputs inputs{looked_up.features.sinr, 0.0};
    if (scheme.kind == SchemeKind::mlcat) {
      predicted = model.predict(features);
      inputs.predicted_rate = *predicted;
    }
    state.t_last = static_cast<double>(buffer_since_ms) / 1000.0;
    const bool fire = decide(state, t, inputs, rng);
    if (!fire && !forced) continue;

    if (!predicted) predicted = model.predict(features);
    const double achieved = sample_virtual_ground_truth(model.derivation, *predicted, rng);
    if (!(achieved > 0.0)) continue;  // failed transfer; retry at the next probe

    TransmissionRecord rec;
    rec.t_start = t;
    rec.payload = buffer;
    rec.features = features;
    rec.predicted_rate = *predicted;
    rec.achieved_rate = achieved;
    rec.duration = transfer_duration(buffer, achieved, scenario.min_rate_floor);
    rec.rem_miss = looked_up.miss;
    rec.forced = forced && !fire;
    result.records.push_back(rec);
    buffer = 0;
    buffer_since_ms = t_ms;
  }
  const std::int64_t last_tick = std::min(tick, steps);
  result.simulated_duration = static_cast<double>(last_tick * dt_ms) / 1000.0;
  result.generated = generated_until(last_tick);
  result.residual_buffer = buffer;
  result.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return result;
}

std::vector<SchemeDistribution> compare_schemes(const Scenario& scenario, std::span<const SchemeConfig> schemes,
                                                const DataRateModel& model, const Rem& rem, int n_runs,
                                                std::uint64_t base_seed, unsigned workers) {
  if (n_runs < 1) throw std::invalid_argument("compare_schemes needs n_runs >= 1");
  const auto runs = static_cast<std::size_t>(n_runs);
  std::vector<SimulationResult> results(schemes.size() * runs);
  parallel_for(
      results.size(),
      [&](std::size_t k) {
        results[k] = run_simulation(scenario, schemes[k / runs], model, rem, base_seed + k % runs);
      },
      workers);

  std::vector<SchemeDistribution> out;
  for (std::size_t s = 0; s < schemes.size(); ++s) {
    SchemeDistribution d;
    d.scheme = schemes[s].label();
    for (std::size_t r = 0; r < runs; ++r) {
      auto& run = results[s * runs + r];
      for (const auto& rec : run.records) d.achieved_rates.push_back(rec.achieved_rate);
      d.runs.push_back(std::move(run));
    }
    d.summary = summarize(d.achieved_rates);
    out.push_back(std::move(d));
  }
  return out;
}

std::string result_csv(const SimulationResult& result, const std::string& provenance) {
  std::ostringstream out;
  if (!provenance.empty()) out << "# " << provenance << '\n';
  out << "t_start,payload,pred_rate,achieved_rate,duration,miss\n";
  for (const auto& r : result.records) {
    out << format_double(r.t_start) << ',' << r.payload << ',' << format_double(r.predicted_rate) << ','
        << format_double(r.achieved_rate) << ',' << format_double(r.duration) << ',' << (r.rem_miss ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace hvsim
