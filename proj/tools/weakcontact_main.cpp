#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "weakcontact/runner.hpp"

namespace {

void emit_error(const std::string &type, const std::string &message,
                const std::string &out_dir) {
  nlohmann::json j{{"error", {{"type", type}, {"message", message}}}};
  std::fprintf(stderr, "%s\n", j.dump().c_str());
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (!ec) {
      std::ofstream f(std::filesystem::path(out_dir) / "error.json");
      if (f) f << j.dump(2) << "\n";
    }
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"macroscopic fluctuation toolkit for boundary-driven lattice gases"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir;
  wc::RunOptions opts;
  const std::vector<std::string> names{"stationary", "evolve",      "quasipotential",
                                       "work",       "quasistatic", "micro",
                                       "verify"};
  for (const std::string &name : names) {
    CLI::App *sub = app.add_subcommand(name);
    sub->add_option("--scenario", scenario_path, "scenario JSON file")
        ->required(name != "verify");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", opts.threads, "worker threads for sweeps");
    sub->add_option("--verify-tol", opts.verify_tol, "verification base tolerance");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();
  opts.out_dir = out_dir;

  try {
    wc::Scenario s;
    if (!scenario_path.empty()) {
      s = wc::load_scenario(scenario_path);
      if (s.command != command)
        throw wc::ConfigError("scenario run.command is '" + s.command +
                              "' but the CLI invoked '" + command + "'");
    } else {
      s.command = command; // verify with the built-in default configuration
    }
    return wc::run_command(s, opts);
  } catch (const wc::ConfigError &e) {
    emit_error("ConfigError", e.what(), out_dir);
    return 2;
  } catch (const wc::ShapeError &e) {
    emit_error("ShapeError", e.what(), out_dir);
    return 2;
  } catch (const std::exception &e) {
    emit_error("NumericalError", e.what(), out_dir);
    return 3;
  }
}
