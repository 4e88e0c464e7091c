#pragma once

// JSON experiment configs shared by the CLI and the integration tests.
// Relative paths inside a config resolve against the config file directory.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hvsim/measurement.hpp"
#include "hvsim/mobility.hpp"
#include "hvsim/scenario_io.hpp"
#include "hvsim/sim_engine.hpp"

namespace hvsim {

/// Parses a JSON file; errors name the file.
nlohmann::json load_json(const std::filesystem::path& file);

/// Writes via a temporary sibling and rename so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& file, const std::string& contents);

/// A "network" entry may be a path or an inline {"nodes","edges"} object.
RoadNetwork network_from_config(const nlohmann::json& entry, const std::filesystem::path& base);

struct CampaignConfig {
  RoadNetwork network;
  SyntheticField field;
  std::vector<std::pair<NodeId, NodeId>> trips;
  CampaignOptions options;
};

CampaignConfig campaign_config_from_json(const nlohmann::json& j, const std::filesystem::path& base);
CampaignConfig load_campaign_config(const std::filesystem::path& file);

struct ScenarioConfig {
  Scenario scenario;
  Direction direction = Direction::uplink;
  std::vector<SchemeConfig> schemes;
  std::filesystem::path model;  // empty when absent
  std::filesystem::path rem;
  std::uint64_t seed = 1;
  int runs = 1;
};

/// {"network", "trip": {"waypoints": [...], "loop": bool}, "duration", "dt",
///  "generation_rate", "max_buffer_age", "direction", "schemes": [...],
///  "model", "rem", "seed", "runs"}
ScenarioConfig scenario_config_from_json(const nlohmann::json& j, const std::filesystem::path& base);
ScenarioConfig load_scenario_config(const std::filesystem::path& file);

}  // namespace hvsim
