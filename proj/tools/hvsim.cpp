// hvsim: batch front end for the hybrid vehicular network simulator.
// Every subcommand writes its artifacts and prints a one-line summary.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hvsim/config.hpp"
#include "hvsim/data_rate_model.hpp"
#include "hvsim/evalkit.hpp"
#include "hvsim/geo_rem.hpp"
#include "hvsim/parallel.hpp"
#include "hvsim/scenario_io.hpp"
#include "hvsim/sim_engine.hpp"
#include "hvsim/simd/kernels.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hvsim;

namespace {

std::string provenance_line(const std::string& command, const json& config, std::uint64_t seed) {
  return json{{"tool", "hvsim " + command}, {"config", config}, {"seed", seed}}.dump();
}

std::vector<double> parse_widths(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    const double w = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad width '" + item + "'");
    out.push_back(w);
  }
  return out;
}

/// Rates from a simulation result CSV (achieved_rate) or a campaign CSV
/// (data_rate, optionally filtered by direction).
std::vector<double> read_rates(const fs::path& file, std::optional<Direction> direction) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::string line;
  std::vector<std::string> columns;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::stringstream header(line);
    std::string c;
    while (std::getline(header, c, ',')) columns.push_back(c);
    break;
  }
  if (columns.empty()) throw std::invalid_argument(file.string() + ": empty file");
  if (std::find(columns.begin(), columns.end(), "data_rate") != columns.end()) {
    auto samples = load_campaign(file);
    std::vector<double> out;
    for (const auto& s : samples) {
      if (!direction || s.direction == *direction) out.push_back(s.data_rate);
    }
    return out;
  }
  const auto it = std::find(columns.begin(), columns.end(), "achieved_rate");
  if (it == columns.end()) throw std::invalid_argument(file.string() + ": no achieved_rate or data_rate column");
  const auto col = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    for (std::size_t k = 0; k <= col; ++k) {
      if (!std::getline(row, cell, ',')) {
        throw std::invalid_argument(file.string() + ":" + std::to_string(line_no) + ": missing column");
      }
    }
    out.push_back(std::stod(cell));
  }
  return out;
}

ForestParams forest_from_json(const json& j, ForestParams p) {
  p.num_trees = j.value("num_trees", p.num_trees);
  p.max_depth = j.value("max_depth", p.max_depth);
  p.min_leaf = j.value("min_leaf", p.min_leaf);
  p.features_per_split = j.value("features_per_split", p.features_per_split);
  return p;
}

// ------------------------------------------------------------------ commands

int cmd_generate(const fs::path& config_path, const fs::path& out, std::optional<std::uint64_t> seed) {
  const json raw = load_json(config_path);
  auto cfg = load_campaign_config(config_path);
  if (seed) cfg.options.seed = *seed;
  const auto samples = generate_campaign(cfg.field, cfg.network, cfg.trips, cfg.options);
  std::ostringstream csv;
  write_campaign(csv, samples, provenance_line("generate", raw, cfg.options.seed));
  write_file_atomic(out, csv.str());
  std::size_t ul = 0;
  for (const auto& s : samples) ul += s.direction == Direction::uplink ? 1 : 0;
  std::cout << "generate: " << samples.size() << " samples (" << ul << " ul, " << samples.size() - ul
            << " dl) from " << cfg.trips.size() << " trips -> " << out.string() << '\n';
  return 0;
}

int cmd_build_rem(const fs::path& campaign, double width, const fs::path& out) {
  const auto samples = load_campaign(campaign);
  const Rem rem = Rem::build(samples, width);
  json j = to_json(rem);
  j["provenance"] = json{{"tool", "hvsim build-rem"}, {"campaign", campaign.string()}, {"cell_width", width}};
  write_file_atomic(out, j.dump() + "\n");
  std::cout << "build-rem: " << rem.populated_cells() << " cells at c=" << width << " m from " << samples.size()
            << " samples (" << rem.rejected_samples() << " rejected) -> " << out.string() << '\n';
  return 0;
}

int cmd_train(const fs::path& campaign, const fs::path& rem_path, const std::string& direction,
              const fs::path& config_path, std::uint64_t seed, const fs::path& out) {
  const auto samples = load_campaign(campaign);
  std::optional<Rem> rem;
  if (!rem_path.empty()) rem = rem_from_json(load_json(rem_path));
  TrainOptions options;
  options.seed = seed;
  json config = json::object();
  if (!config_path.empty()) {
    config = load_json(config_path);
    if (config.contains("forest")) options.forest = forest_from_json(config.at("forest"), options.forest);
    if (config.contains("gpr")) {
      const auto& g = config.at("gpr");
      options.gpr.max_pairs = g.value("max_pairs", options.gpr.max_pairs);
      options.gpr.search_pairs = g.value("search_pairs", options.gpr.search_pairs);
      if (g.contains("length_scale")) {
        options.gpr.hyperparams =
            GprHyperparams{g.at("length_scale").get<double>(), g.at("signal_std").get<double>(),
                           g.at("noise_std").get<double>()};
      }
    }
    options.derivation_folds = config.value("derivation_folds", options.derivation_folds);
  }
  const Direction dir = parse_direction(direction);
  const auto model = train_data_rate_model(samples, dir, rem ? &*rem : nullptr, options);
  json j = model.to_json();
  j["provenance"] = json{{"tool", "hvsim train"},
                         {"campaign", campaign.string()},
                         {"rem", rem_path.string()},
                         {"direction", direction},
                         {"config", config},
                         {"seed", seed}};
  write_file_atomic(out, j.dump() + "\n");
  const auto& hp = model.derivation.hyperparams();
  std::cout << "train: " << to_string(dir) << " forest " << model.forest.trees().size() << " trees, GP l="
            << hp.length_scale << " sf=" << hp.signal_std << " sn=" << hp.noise_std << " -> " << out.string() << '\n';
  return 0;
}

struct LoadedScenario {
  json raw;
  ScenarioConfig cfg;
  DataRateModel model;
  Rem rem{{0.0, 0.0}, 1.0};
};

LoadedScenario load_everything(const fs::path& config_path) {
  LoadedScenario s;
  s.raw = load_json(config_path);
  s.cfg = load_scenario_config(config_path);
  if (s.cfg.model.empty()) throw std::invalid_argument(config_path.string() + ": field 'model' missing");
  if (s.cfg.rem.empty()) throw std::invalid_argument(config_path.string() + ": field 'rem' missing");
  s.model = DataRateModel::from_json(load_json(s.cfg.model));
  if (s.model.direction != s.cfg.direction) {
    throw std::invalid_argument(config_path.string() + ": model direction does not match scenario direction");
  }
  s.rem = rem_from_json(load_json(s.cfg.rem));
  return s;
}

std::vector<SchemeConfig> select_schemes(const ScenarioConfig& cfg, const std::string& scheme) {
  if (scheme.empty()) {
    if (cfg.schemes.empty()) throw std::invalid_argument("scenario lists no schemes and --scheme not given");
    return cfg.schemes;
  }
  const SchemeKind kind = parse_scheme_kind(scheme);
  std::vector<SchemeConfig> out;
  for (const auto& s : cfg.schemes) {
    if (s.kind == kind) out.push_back(s);
  }
  if (out.empty()) out.push_back(default_scheme(kind, cfg.direction));
  return out;
}

int cmd_simulate(const fs::path& config_path, const std::string& scheme, std::optional<int> runs,
                 std::optional<std::uint64_t> seed, const fs::path& out_dir) {
  auto s = load_everything(config_path);
  const int n_runs = runs.value_or(s.cfg.runs);
  const std::uint64_t base_seed = seed.value_or(s.cfg.seed);
  const auto schemes = select_schemes(s.cfg, scheme);
  fs::create_directories(out_dir);
  const auto results = compare_schemes(s.cfg.scenario, schemes, s.model, s.rem, n_runs, base_seed, default_workers());

  json summary{{"provenance", json{{"tool", "hvsim simulate"}, {"config", s.raw}, {"seed", base_seed}, {"runs", n_runs}}},
               {"schemes", json::array()}};
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& d = results[k];
    json runs_json = json::array();
    for (std::size_t r = 0; r < d.runs.size(); ++r) {
      const auto& run = d.runs[r];
      const std::uint64_t run_seed = base_seed + r;
      const fs::path file = out_dir / (d.scheme + "_run" + std::to_string(r) + ".csv");
      write_file_atomic(file, result_csv(run, provenance_line("simulate", {{"config", s.raw}, {"scheme", to_json(schemes[k])}},
                                                               run_seed)));
      std::int64_t sent = 0;
      for (const auto& rec : run.records) sent += rec.payload;
      runs_json.push_back(json{{"seed", run_seed},
                           {"records", run.records.size()},
                           {"bytes_sent", sent},
                           {"residual_buffer", run.residual_buffer},
                           {"simulated_duration", run.simulated_duration},
                           {"csv", file.filename().string()}});
    }
    summary["schemes"].push_back(
        json{{"scheme", to_json(schemes[k])}, {"summary", to_json(d.summary)}, {"runs", std::move(runs_json)}});
    std::cout << "simulate: " << d.scheme << " runs=" << n_runs << " transmissions=" << d.summary.count
              << " mean=" << d.summary.mean << " MBit/s median=" << d.summary.median << '\n';
  }
  write_file_atomic(out_dir / "summary.json", summary.dump(2) + "\n");
  return 0;
}

int cmd_sweep(const fs::path& campaign, const std::string& widths_text, std::size_t folds, int trees,
              std::uint64_t seed, const fs::path& scenario_path, const fs::path& out_dir) {
  const auto samples = load_campaign(campaign);
  const auto widths = parse_widths(widths_text);
  SweepOptions options;
  options.folds = folds;
  options.seed = seed;
  options.forest.num_trees = trees;
  options.workers = default_workers();
  if (!scenario_path.empty()) {
    const auto cfg = load_scenario_config(scenario_path);
    const auto state = start_trip(cfg.scenario.network, cfg.scenario.route);
    double duration = 0.0;
    for (const auto& h : cfg.scenario.route.hops) duration += cfg.scenario.network.edge(h.edge).length;
    // Generous bound: the trip ends well before this at any speed limit >= 1 m/s.
    for (const auto& p : sample_trajectory(state, cfg.scenario.network, 1.0, duration + 60.0)) {
      options.probe_positions.push_back(p.position);
    }
  }
  const auto result = sweep_cell_width(samples, widths, options);
  fs::create_directories(out_dir);
  json j = result.to_json();
  j["provenance"] = json{{"tool", "hvsim sweep"},     {"campaign", campaign.string()}, {"widths", widths},
                         {"folds", folds},             {"trees", trees},                {"seed", seed},
                         {"scenario", scenario_path.string()}};
  write_file_atomic(out_dir / "sweep.json", j.dump(2) + "\n");
  std::ostringstream csv;
  csv << "# " << j["provenance"].dump() << '\n' << result.to_csv();
  write_file_atomic(out_dir / "sweep.csv", csv.str());
  std::cout << "sweep: " << result.points.size() << " widths x " << folds << " folds -> " << (out_dir / "sweep.csv").string()
            << '\n';
  return 0;
}

int cmd_evaluate(const fs::path& campaign, const fs::path& rem_path, const std::string& direction, std::size_t folds,
                 int trees, std::uint64_t seed, const std::vector<std::string>& simulated, const fs::path& reference,
                 const fs::path& out) {
  const auto samples = load_campaign(campaign);
  const Direction dir = parse_direction(direction);
  std::optional<Rem> rem;
  if (!rem_path.empty()) rem = rem_from_json(load_json(rem_path));
  const auto subset = filter_direction(samples, dir);
  const auto features = model_features(subset, rem ? &*rem : nullptr);
  const auto encoder = FeatureEncoder::fit(features);
  const Dataset data = encode_dataset(encoder, features, subset);
  ForestParams params;
  params.num_trees = trees;
  const ErrorReport cv = cross_validate(data, folds, forest_trainer(params, seed), seed, default_workers());

  json report{{"provenance", json{{"tool", "hvsim evaluate"},
                                  {"campaign", campaign.string()},
                                  {"rem", rem_path.string()},
                                  {"direction", direction},
                                  {"folds", folds},
                                  {"trees", trees},
                                  {"seed", seed}}},
              {"cross_validation", to_json(cv)},
              {"comparisons", json::array()}};
  std::cout << "evaluate: " << to_string(dir) << " " << folds << "-fold RMSE=" << cv.rmse << " (sd " << cv.rmse_std
            << ") MAE=" << cv.mae << " (sd " << cv.mae_std << ")\n";
  if (!simulated.empty()) {
    const fs::path ref_path = reference.empty() ? campaign : reference;
    const auto ref = read_rates(ref_path, dir);
    for (const auto& sim_path : simulated) {
      const auto sim = read_rates(sim_path, dir);
      const auto err = aggregated_modeling_error(sim, ref);
      report["comparisons"].push_back(json{{"simulated", sim_path},
                                       {"reference", ref_path.string()},
                                       {"relative_mean_error", err.relative_mean_error},
                                       {"wasserstein1", err.wasserstein1},
                                       {"simulated_summary", to_json(summarize(sim))},
                                       {"reference_summary", to_json(summarize(ref))}});
      std::cout << "evaluate: " << sim_path << " relative mean error=" << err.relative_mean_error
                << " W1=" << err.wasserstein1 << '\n';
    }
  }
  write_file_atomic(out, report.dump(2) + "\n");
  return 0;
}

int cmd_bench(const fs::path& config_path, double duration, std::uint64_t seed, const fs::path& out) {
  auto s = load_everything(config_path);
  s.cfg.scenario.duration = duration;
  if (!s.cfg.scenario.loop) s.cfg.scenario.loop = true;
  json rows = json::array();
  std::cout << "bench: simd=" << simd::isa_name(simd::active_isa()) << '\n';
  for (const auto& scheme : s.cfg.schemes) {
    const auto start = std::chrono::steady_clock::now();
    const auto result = run_simulation(s.cfg.scenario, scheme, s.model, s.rem, seed);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double speed = result.simulated_duration / std::max(wall, 1e-9);
    rows.push_back(json{{"scheme", scheme.label()},
                    {"simulated_seconds", result.simulated_duration},
                    {"wall_seconds", wall},
                    {"simulated_seconds_per_wall_second", speed},
                    {"transmissions", result.records.size()}});
    std::cout << "bench: " << scheme.label() << " simulated " << result.simulated_duration << " s in " << wall
              << " s wall (" << speed << " sim-s per wall-s)\n";
  }
  if (!out.empty()) {
    json j{{"provenance", json{{"tool", "hvsim bench"}, {"config", s.raw}, {"seed", seed}, {"duration", duration}}},
           {"simd", std::string(simd::isa_name(simd::active_isa()))},
           {"schemes", rows}};
    write_file_atomic(out, j.dump(2) + "\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid data-driven vehicular network simulator"};
  app.require_subcommand(1);

  std::string config, out, campaign, rem, direction = "ul", scheme, widths = "5,10,25,50,100,200", scenario, reference;
  std::vector<std::string> simulated;
  double cell_width = 25.0;
  double duration = 3600.0;
  std::uint64_t seed_value = 1;
  std::optional<std::uint64_t> seed_opt;
  std::optional<int> runs;
  std::size_t folds = 10;
  int trees = 30;

  auto* gen = app.add_subcommand("generate", "generate a synthetic measurement campaign");
  gen->add_option("--config", config, "campaign config JSON")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out, "output campaign CSV")->required();
  gen->add_option("--seed", seed_opt, "override the config seed");

  auto* brem = app.add_subcommand("build-rem", "aggregate a campaign into a radio environmental map");
  brem->add_option("--campaign", campaign, "campaign CSV")->required()->check(CLI::ExistingFile);
  brem->add_option("--cell-width", cell_width, "cell width in meters")->required()->check(CLI::PositiveNumber);
  brem->add_option("--out", out, "output REM JSON")->required();

  auto* train = app.add_subcommand("train", "train forest + GP derivation model for one direction");
  train->add_option("--campaign", campaign, "campaign CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--rem", rem, "REM JSON; features are looked up from it when given")->check(CLI::ExistingFile);
  train->add_option("--direction", direction, "ul or dl")->check(CLI::IsMember({"ul", "dl"}));
  train->add_option("--config", config, "optional training config JSON")->check(CLI::ExistingFile);
  train->add_option("--seed", seed_value, "training seed");
  train->add_option("--out", out, "output model JSON")->required();

  auto* sim = app.add_subcommand("simulate", "run the hybrid simulation");
  sim->add_option("--config", config, "scenario config JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--scheme", scheme, "restrict to one scheme")->check(CLI::IsMember({"periodic", "cat", "mlcat"}));
  sim->add_option("--runs", runs, "number of seeded runs")->check(CLI::PositiveNumber);
  sim->add_option("--seed", seed_opt, "base seed");
  sim->add_option("--out-dir", out, "output directory")->required();

  auto* sweep = app.add_subcommand("sweep", "REM cell-width sweep with cross validation");
  sweep->add_option("--campaign", campaign, "campaign CSV")->required()->check(CLI::ExistingFile);
  sweep->add_option("--widths", widths, "comma-separated ascending widths in meters");
  sweep->add_option("--folds", folds, "cross-validation folds");
  sweep->add_option("--trees", trees, "trees per forest");
  sweep->add_option("--seed", seed_value, "seed");
  sweep->add_option("--scenario", scenario, "scenario whose trip positions score the miss ratio")
      ->check(CLI::ExistingFile);
  sweep->add_option("--out-dir", out, "output directory")->required();

  auto* eval = app.add_subcommand("evaluate", "cross-validated error and aggregated modeling error");
  eval->add_option("--campaign", campaign, "campaign CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--rem", rem, "REM JSON for looked-up features")->check(CLI::ExistingFile);
  eval->add_option("--direction", direction, "ul or dl")->check(CLI::IsMember({"ul", "dl"}));
  eval->add_option("--folds", folds, "cross-validation folds");
  eval->add_option("--trees", trees, "trees per forest");
  eval->add_option("--seed", seed_value, "seed");
  eval->add_option("--simulated", simulated, "simulation result CSVs to compare")->check(CLI::ExistingFile);
  eval->add_option("--reference", reference, "reference rates CSV (default: the campaign)")
      ->check(CLI::ExistingFile);
  eval->add_option("--out", out, "output report JSON")->required();

  auto* bench = app.add_subcommand("bench", "simulated seconds per wall-clock second for each scheme");
  bench->add_option("--config", config, "scenario config JSON")->required()->check(CLI::ExistingFile);
  bench->add_option("--duration", duration, "simulated seconds")->check(CLI::PositiveNumber);
  bench->add_option("--seed", seed_value, "seed");
  bench->add_option("--out", out, "optional JSON report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    if (app.get_subcommands().empty()) {
      // No recognised subcommand: show the top-level usage.
      std::cerr << "hvsim: " << e.what() << "\n\n" << app.help();
      return 2;
    }
    return app.exit(e);
  }

  try {
    if (*gen) return cmd_generate(config, out, seed_opt);
    if (*brem) return cmd_build_rem(campaign, cell_width, out);
    if (*train) return cmd_train(campaign, rem, direction, config, seed_value, out);
    if (*sim) return cmd_simulate(config, scheme, runs, seed_opt, out);
    if (*sweep) return cmd_sweep(campaign, widths, folds, trees, seed_value, scenario, out);
    if (*eval) return cmd_evaluate(campaign, rem, direction, folds, trees, seed_value, simulated, reference, out);
    if (*bench) return cmd_bench(config, duration, seed_value, out);
  } catch (const std::exception& e) {
    std::cerr << "hvsim: error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
