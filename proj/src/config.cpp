#include "hvsim/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hvsim {

namespace fs = std::filesystem;

nlohmann::json load_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(file.string() + ": " + e.what());
  }
}

void write_file_atomic(const fs::path& file, const std::string& contents) {
  fs::path tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  fs::rename(tmp, file);
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

[[noreturn]] void schema_error(const std::string& field, const std::string& what) {
  throw std::invalid_argument("field '" + field + "': " + what);
}

}  // namespace

RoadNetwork network_from_config(const nlohmann::json& entry, const fs::path& base) {
  if (entry.is_string()) return load_network(resolve(base, entry.get<std::string>()));
  if (entry.is_object()) return network_from_json(entry);
  schema_error("network", "expected a path or an object");
}

CampaignConfig campaign_config_from_json(const nlohmann::json& j, const fs::path& base) {
  CampaignConfig c;
  if (!j.contains("network")) schema_error("network", "missing");
  if (!j.contains("field")) schema_error("field", "missing");
  c.network = network_from_config(j.at("network"), base);
  c.field = field_from_json(j.at("field"));
  try {
    const auto& trips = j.at("trips");
    if (trips.is_array()) {
      for (const auto& t : trips) c.trips.emplace_back(t.at(0).get<NodeId>(), t.at(1).get<NodeId>());
    } else {
      c.trips = random_trips(c.network, trips.at("count").get<std::size_t>(), trips.value("seed", 0ULL));
    }
    if (j.contains("options")) {
      const auto& o = j.at("options");
      c.options.sampling_interval = o.value("sampling_interval", c.options.sampling_interval);
      c.options.dt = o.value("dt", c.options.dt);
      c.options.position_noise = o.value("position_noise", c.options.position_noise);
      c.options.payload_min = o.value("payload_min", c.options.payload_min);
      c.options.payload_max = o.value("payload_max", c.options.payload_max);
    }
    c.options.seed = j.value("seed", 0ULL);
  } catch (const nlohmann::json::exception& e) {
    schema_error("trips/options", e.what());
  }
  return c;
}

CampaignConfig load_campaign_config(const fs::path& file) {
  const auto j = load_json(file);
  try {
    return campaign_config_from_json(j, file.parent_path());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(file.string() + ": " + e.what());
  }
}

ScenarioConfig scenario_config_from_json(const nlohmann::json& j, const fs::path& base) {
  ScenarioConfig c;
  if (!j.contains("network")) schema_error("network", "missing");
  if (!j.contains("trip")) schema_error("trip", "missing");
  c.scenario.network = network_from_config(j.at("network"), base);
  try {
    const auto& trip = j.at("trip");
    const auto waypoints = trip.at("waypoints").get<std::vector<NodeId>>();
    if (waypoints.size() < 2) schema_error("trip.waypoints", "needs at least two nodes");
    c.scenario.route = route_through(c.scenario.network, waypoints);
    c.scenario.loop = trip.value("loop", false);
    c.scenario.duration = j.value("duration", c.scenario.duration);
    c.scenario.dt = j.value("dt", c.scenario.dt);
    c.scenario.generation_rate = j.value("generation_rate", c.scenario.generation_rate);
    c.scenario.max_buffer_age = j.value("max_buffer_age", c.scenario.max_buffer_age);
    c.direction = parse_direction(j.value("direction", std::string("ul")));
    if (j.contains("schemes")) {
      for (const auto& s : j.at("schemes")) c.schemes.push_back(scheme_from_json(s, c.direction));
    }
    if (j.contains("model")) c.model = resolve(base, j.at("model").get<std::string>());
    if (j.contains("rem")) c.rem = resolve(base, j.at("rem").get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.runs = j.value("runs", c.runs);
  } catch (const nlohmann::json::exception& e) {
    schema_error("scenario", e.what());
  }
  if (c.scenario.duration < 0.0) schema_error("duration", "must be >= 0");
  if (c.runs < 1) schema_error("runs", "must be >= 1");
  return c;
}

ScenarioConfig load_scenario_config(const fs::path& file) {
  const auto j = load_json(file);
  try {
    return scenario_config_from_json(j, file.parent_path());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(file.string() + ": " + e.what());
  }
}

}  // namespace hvsim
