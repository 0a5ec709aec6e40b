#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "weakcontact/runner.hpp"

using namespace wc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json sep_stationary_json() {
  return json{{"model", {{"kind", "sep"}}},
              {"grid", {{"n_cells", 64}}},
              {"drive",
               {{"lambda_left", std::log(0.25)},
                {"lambda_right", std::log(4.0)},
                {"kappa_left", 1.0},
                {"kappa_right", 1.0}}},
              {"run", {{"command", "stationary"}, {"tol", 1e-8}}}};
}

fs::path fresh_dir(const std::string &name) {
  const fs::path p = fs::temp_directory_path() / "wc_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::vector<double>> read_csv(const fs::path &p, std::string &header) {
  std::ifstream in(p);
  REQUIRE(bool(in));
  std::getline(in, header);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

json read_json(const fs::path &p) {
  std::ifstream in(p);
  REQUIRE(bool(in));
  json j;
  in >> j;
  return j;
}

} // namespace

TEST_CASE("schema validation is strict") {
  json j = sep_stationary_json();
  CHECK(parse_scenario(j).command == "stationary");

  json bad = j;
  bad["grid"]["extra"] = 1;
  CHECK_THROWS_AS(parse_scenario(bad), ConfigError);

  bad = j;
  bad["drive"].erase("kappa_left");
  CHECK_THROWS_AS(parse_scenario(bad), ConfigError);

  bad = j;
  bad["drive"]["kappa_left"] = -1.0;
  CHECK_THROWS_AS(parse_scenario(bad), ConfigError);

  bad = j;
  bad["run"]["command"] = "unknown";
  CHECK_THROWS_AS(parse_scenario(bad), ConfigError);

  bad = j;
  bad.erase("grid");
  CHECK_THROWS_AS(parse_scenario(bad), ConfigError);
}

TEST_CASE("stationary command writes the profile with full precision") {
  const fs::path dir = fresh_dir("stationary");
  RunOptions opts;
  opts.out_dir = dir.string();
  CHECK(run_command(parse_scenario(sep_stationary_json()), opts) == 0);

  std::string header;
  auto rows = read_csv(dir / "profile.csv", header);
  CHECK(header == "x,rho");
  REQUIRE(rows.size() == 64);
  for (const auto &row : rows)
    CHECK(std::abs(row[1] - (0.4 + 0.2 * row[0])) < 1e-8);

  const json man = read_json(dir / "manifest.json");
  CHECK(man.at("command") == "stationary");
  CHECK(man.at("residual").get<double>() <= 1e-8);
  CHECK(fs::exists(dir / "profile.dat"));
  CHECK(fs::exists(dir / "plot.gp"));

  // the manifest is itself a valid scenario (round-trip reproducibility)
  std::ofstream(dir / "again.json") << man.dump();
  const Scenario s2 = load_scenario((dir / "again.json").string());
  RunOptions opts2;
  opts2.out_dir = (dir / "again").string();
  CHECK(run_command(s2, opts2) == 0);
  std::ifstream a(dir / "profile.csv"), b(dir / "again" / "profile.csv");
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
}

TEST_CASE("work command records the ledger with the Clausius flag") {
  json j{{"model", {{"kind", "sep"}}},
         {"grid", {{"n_cells", 48}}},
         {"protocol",
          {{"times", {0.0, 1.0}},
           {"nodes",
            {{{"lambda_left", 0.0},
              {"lambda_right", 0.0},
              {"kappa_left", 1.0},
              {"kappa_right", 1.0}},
             {{"lambda_left", 0.5},
              {"lambda_right", 0.5},
              {"kappa_left", 1.0},
              {"kappa_right", 1.0}}}},
           {"horizon", 1.5},
           {"initial", "stationary"}}},
         {"run", {{"command", "work"}, {"scheme", "heun"}}}};
  const fs::path dir = fresh_dir("work");
  RunOptions opts;
  opts.out_dir = dir.string();
  CHECK(run_command(parse_scenario(j), opts) == 0);
  const json led = read_json(dir / "ledger.json");
  CHECK(led.at("clausius").get<bool>());
  CHECK(led.at("W").get<double>() >= led.at("dF").get<double>() - 1e-12);
  CHECK(std::abs(led.at("identity_residual").get<double>()) <
        1e-6 * (std::abs(led.at("W").get<double>()) + 1.0));
}

TEST_CASE("micro command with the oracle flag reports a small TV distance") {
  json j{{"model", {{"kind", "sep"}}},
         {"drive",
          {{"lambda_left", std::log(0.25)},
           {"lambda_right", std::log(3.0)},
           {"kappa_left", 1.0},
           {"kappa_right", 1.0}}},
         {"micro", {{"N", 4}, {"max_events", 400000}, {"oracle", true}}},
         {"run", {{"command", "micro"}, {"seed", 42}, {"tol", 0.02}}}};
  const fs::path dir = fresh_dir("micro");
  RunOptions opts;
  opts.out_dir = dir.string();
  CHECK(run_command(parse_scenario(j), opts) == 0);
  const json led = read_json(dir / "ledger.json");
  CHECK(led.at("tv_distance").get<double>() <= 0.02);
  CHECK(led.at("oracle_residual").get<double>() < 1e-12);
}

TEST_CASE("verify command passes by default and fails under a tampered drive") {
  Scenario s;
  s.command = "verify";
  RunOptions opts;
  opts.out_dir = fresh_dir("verify").string();
  CHECK(run_command(s, opts) == 0);
  const json rep = read_json(fs::path(opts.out_dir) / "report.json");
  CHECK(rep.at("passed").get<bool>());
  CHECK(rep.at("suites").size() >= 10);

  json j{{"drive",
          {{"lambda_left", -1.0},
           {"lambda_right", 1.0},
           {"kappa_left", -1.0},
           {"kappa_right", 1.0}}},
         {"run", {{"command", "verify"}}}};
  opts.out_dir = fresh_dir("verify_tamper").string();
  CHECK(run_command(parse_scenario(j), opts) == 1);
  const json rep2 = read_json(fs::path(opts.out_dir) / "report.json");
  CHECK(!rep2.at("passed").get<bool>());
}
