#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / "hvsim_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    json campaign = hvsim::load_json(hvsim::test::data_dir() / "campaign.json");
    campaign["network"] = (hvsim::test::data_dir() / "city_grid.json").string();
    campaign["trips"] = json{{"count", 8}, {"seed", 3}};
    std::ofstream(dir / "campaign.json") << campaign.dump();
    json scenario = hvsim::load_json(hvsim::test::data_dir() / "scenario.json");
    scenario["network"] = (hvsim::test::data_dir() / "city_grid.json").string();
    scenario["duration"] = 120;
    scenario["runs"] = 2;
    std::ofstream(dir / "scenario.json") << scenario.dump();
    std::ofstream(dir / "train.json") << R"({"forest":{"num_trees":8}})";
  }
  ~Workspace() { fs::remove_all(dir); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(HVSIM_CLI_PATH) + " " + args + " > " + (dir / "stdout.txt").string() +
                            " 2> " + (dir / "stderr.txt").string();
    return std::system(cmd.c_str());
  }
  std::string read(const fs::path& p) const {
    std::ifstream in(dir / p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("cli pipeline") {
  const Workspace ws;
  REQUIRE(ws.run("generate --config " + ws.path("campaign.json") + " --out " + ws.path("campaign.csv")) == 0);
  CHECK(ws.read("stdout.txt").rfind("generate:", 0) == 0);
  CHECK(ws.read("campaign.csv").rfind("# {", 0) == 0);

  REQUIRE(ws.run("build-rem --campaign " + ws.path("campaign.csv") + " --cell-width 25 --out " + ws.path("rem.json")) ==
          0);
  CHECK(json::parse(ws.read("rem.json")).contains("provenance"));

  REQUIRE(ws.run("train --campaign " + ws.path("campaign.csv") + " --rem " + ws.path("rem.json") +
                 " --direction ul --config " + ws.path("train.json") + " --seed 4 --out " + ws.path("model_ul.json")) ==
          0);
  CHECK(json::parse(ws.read("model_ul.json")).at("provenance").at("seed") == 4);

  SUBCASE("simulate is byte-identical under a fixed seed") {
    const std::string args = "simulate --config " + ws.path("scenario.json") + " --scheme mlcat --runs 2 --seed 9";
    REQUIRE(ws.run(args + " --out-dir " + ws.path("a")) == 0);
    REQUIRE(ws.run(args + " --out-dir " + ws.path("b")) == 0);
    const std::string a = ws.read("a/mlcat_run1.csv");
    CHECK_FALSE(a.empty());
    CHECK(a == ws.read("b/mlcat_run1.csv"));
    CHECK(ws.read("a/mlcat_run0.csv") == ws.read("b/mlcat_run0.csv"));
    CHECK(a.find("\"seed\":10") != std::string::npos);
    CHECK(json::parse(ws.read("a/summary.json")).at("schemes").size() == 1);

    REQUIRE(ws.run("evaluate --campaign " + ws.path("campaign.csv") + " --direction ul --folds 3 --trees 4 --simulated " +
                   ws.path("a/mlcat_run0.csv") + " --out " + ws.path("eval.json")) == 0);
    const auto report = json::parse(ws.read("eval.json"));
    CHECK(report.at("cross_validation").at("fold_rmse").size() == 3);
    CHECK(report.at("comparisons").size() == 1);
  }
  SUBCASE("sweep emits one row per width") {
    REQUIRE(ws.run("sweep --campaign " + ws.path("campaign.csv") +
                   " --widths 5,10,25,50,100,200 --folds 2 --trees 3 --out-dir " + ws.path("sweep")) == 0);
    const auto j = json::parse(ws.read("sweep/sweep.json"));
    CHECK(j.at("points").size() == 6);
    const auto csv = ws.read("sweep/sweep.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 1 + 6);
  }
  SUBCASE("bench reports a speed per scheme") {
    REQUIRE(ws.run("bench --config " + ws.path("scenario.json") + " --duration 60 --out " + ws.path("bench.json")) == 0);
    const auto j = json::parse(ws.read("bench.json"));
    CHECK(j.at("schemes").size() == 3);
    CHECK(j.at("schemes")[0].at("simulated_seconds_per_wall_second").get<double>() > 0.0);
  }
}

TEST_CASE("cli errors") {
  const Workspace ws;
  CHECK(ws.run("frobnicate") != 0);
  CHECK(ws.read("stderr.txt").find("Usage") != std::string::npos);
  CHECK(ws.run("") != 0);
  CHECK(ws.run("build-rem --campaign /no/such.csv --cell-width 25 --out " + ws.path("x.json")) != 0);
  CHECK(ws.read("stderr.txt").find("/no/such.csv") != std::string::npos);

  std::ofstream(ws.dir / "broken.json") << R"({"field":{"stations":[]}})";
  CHECK(ws.run("generate --config " + ws.path("broken.json") + " --out " + ws.path("c.csv")) != 0);
  const auto err = ws.read("stderr.txt");
  CHECK(err.find("broken.json") != std::string::npos);
  CHECK(err.find("network") != std::string::npos);
  CHECK_FALSE(fs::exists(ws.dir / "c.csv"));
}
