#include "weakcontact/scenario.hpp"

#include <fstream>
#include <set>

namespace wc {

namespace {

using nlohmann::json;

void expect_keys(const json &j, const std::set<std::string> &allowed,
                 const std::string &ctx) {
  if (!j.is_object()) throw ConfigError(ctx + ": object expected");
  for (const auto &el : j.items())
    if (!allowed.count(el.key()))
      throw ConfigError(ctx + ": unknown key '" + el.key() + "'");
}

const json &req(const json &j, const char *key, const std::string &ctx) {
  if (!j.contains(key)) throw ConfigError(ctx + ": missing key '" + key + "'");
  return j.at(key);
}

double num(const json &v, const std::string &ctx) {
  if (!v.is_number()) throw ConfigError(ctx + ": number expected");
  return v.get<double>();
}

long long integer(const json &v, const std::string &ctx) {
  if (!v.is_number_integer()) throw ConfigError(ctx + ": integer expected");
  return v.get<long long>();
}

std::vector<double> num_array(const json &v, const std::string &ctx) {
  if (!v.is_array()) throw ConfigError(ctx + ": array expected");
  std::vector<double> out;
  for (const auto &e : v) out.push_back(num(e, ctx));
  return out;
}

ModelSpec parse_model(const json &j) {
  expect_keys(j, {"kind", "rate", "g", "window", "left", "right"}, "model");
  const std::string kind = req(j, "kind", "model").get<std::string>();
  ModelSpec m;
  if (kind == "sep") {
    expect_keys(j, {"kind"}, "model(sep)");
    m = ModelSpec::sep();
  } else if (kind == "kmp") {
    expect_keys(j, {"kind"}, "model(kmp)");
    m = ModelSpec::kmp();
  } else if (kind == "zero_range") {
    expect_keys(j, {"kind", "rate", "g"}, "model(zero_range)");
    const std::string rate = req(j, "rate", "model").get<std::string>();
    if (rate == "linear") {
      m = ModelSpec::zero_range(ZrRateKind::Linear);
    } else if (rate == "constant") {
      m = ModelSpec::zero_range(ZrRateKind::Constant);
    } else if (rate == "tabulated") {
      m = ModelSpec::zero_range(ZrRateKind::Tabulated,
                                num_array(req(j, "g", "model"), "model.g"));
    } else {
      throw ConfigError("model.rate: expected linear|constant|tabulated");
    }
  } else if (kind == "nonrev_exclusion") {
    expect_keys(j, {"kind", "window", "left", "right"}, "model(nonrev)");
    NonRevTable t;
    t.window = int(integer(req(j, "window", "model"), "model.window"));
    for (const auto &row : req(j, "left", "model"))
      t.left.push_back(num_array(row, "model.left"));
    for (const auto &row : req(j, "right", "model"))
      t.right.push_back(num_array(row, "model.right"));
    m = ModelSpec::nonrev_exclusion(std::move(t));
  } else {
    throw ConfigError("model.kind: expected sep|kmp|zero_range|nonrev_exclusion");
  }
  validate_model(m);
  return m;
}

Drive parse_drive(const json &j, int n_cells, bool require_positive_kappa,
                  const std::string &ctx) {
  expect_keys(j, {"lambda_left", "lambda_right", "kappa_left", "kappa_right", "E"},
              ctx);
  Drive d;
  d.lambda_left = num(req(j, "lambda_left", ctx), ctx + ".lambda_left");
  d.lambda_right = num(req(j, "lambda_right", ctx), ctx + ".lambda_right");
  d.kappa_left = num(req(j, "kappa_left", ctx), ctx + ".kappa_left");
  d.kappa_right = num(req(j, "kappa_right", ctx), ctx + ".kappa_right");
  if (require_positive_kappa && (d.kappa_left <= 0.0 || d.kappa_right <= 0.0))
    throw ConfigError(ctx + ": kappa must be positive");
  if (j.contains("E")) {
    const json &e = j.at("E");
    if (e.is_number()) {
      if (num(e, ctx) != 0.0) {
        if (n_cells <= 0) throw ConfigError(ctx + ".E: grid block required");
        d.E = Field::Constant(n_cells, e.get<double>());
      }
    } else {
      const std::vector<double> v = num_array(e, ctx + ".E");
      if (int(v.size()) != n_cells)
        throw ConfigError(ctx + ".E: expected n_cells values");
      d.E = Eigen::Map<const Eigen::ArrayXd>(v.data(), v.size());
    }
  }
  return d;
}

} // namespace

Scenario parse_scenario(const json &top) {
  expect_keys(top, {"model", "grid", "drive", "protocol", "run", "micro", "target"},
              "scenario");
  Scenario s;
  s.raw = top;

  const json &run = req(top, "run", "scenario");
  expect_keys(run,
              {"command", "tol", "seed", "out", "scheme", "dt", "sample_dt", "mode"},
              "run");
  s.command = req(run, "command", "run").get<std::string>();
  const std::set<std::string> commands{"stationary", "evolve", "quasipotential",
                                       "work", "quasistatic", "micro", "verify"};
  if (!commands.count(s.command))
    throw ConfigError("run.command: unknown command '" + s.command + "'");
  if (run.contains("tol")) s.tol = num(run.at("tol"), "run.tol");
  if (run.contains("seed")) s.seed = std::uint64_t(integer(run.at("seed"), "run.seed"));
  if (run.contains("out")) s.out = run.at("out").get<std::string>();
  if (run.contains("scheme")) {
    const std::string sc = run.at("scheme").get<std::string>();
    if (sc == "semi_implicit") s.solver.scheme = Scheme::SemiImplicit;
    else if (sc == "heun") s.solver.scheme = Scheme::ExplicitHeun;
    else throw ConfigError("run.scheme: expected semi_implicit|heun");
  }
  if (run.contains("dt")) s.solver.dt = num(run.at("dt"), "run.dt");
  if (run.contains("sample_dt")) s.solver.sample_dt = num(run.at("sample_dt"), "run.sample_dt");
  if (run.contains("mode")) {
    const std::string mode = run.at("mode").get<std::string>();
    if (mode == "renormalized") s.renormalized = true;
    else if (mode != "plain") throw ConfigError("run.mode: expected plain|renormalized");
  }

  if (top.contains("model")) {
    s.model = parse_model(top.at("model"));
    s.has_model = true;
  }
  if (top.contains("grid")) {
    const json &grid = top.at("grid");
    expect_keys(grid, {"n_cells"}, "grid");
    s.n_cells = int(integer(req(grid, "n_cells", "grid"), "grid.n_cells"));
    if (s.n_cells < 8) throw ConfigError("grid.n_cells: at least 8 cells required");
    s.has_grid = true;
  }
  const bool lenient_kappa = s.command == "verify";
  if (top.contains("drive")) {
    s.drive = parse_drive(top.at("drive"), s.n_cells, !lenient_kappa, "drive");
    s.has_drive = true;
  }

  if (top.contains("protocol")) {
    const json &p = top.at("protocol");
    expect_keys(p, {"times", "nodes", "horizon", "deltas", "initial"}, "protocol");
    const std::vector<double> times = num_array(req(p, "times", "protocol"),
                                                "protocol.times");
    const json &nodes = req(p, "nodes", "protocol");
    if (!nodes.is_array() || nodes.size() != times.size())
      throw ConfigError("protocol.nodes: one drive per time node expected");
    if (times.empty() || times.front() != 0.0)
      throw ConfigError("protocol.times: must start at 0");
    for (size_t k = 1; k < times.size(); ++k)
      if (times[k] <= times[k - 1])
        throw ConfigError("protocol.times: strictly increasing required");
    s.protocol.times = times;
    for (const auto &nd : nodes)
      s.protocol.nodes.push_back(parse_drive(nd, s.n_cells, true, "protocol.nodes"));
    s.horizon = p.contains("horizon") ? num(p.at("horizon"), "protocol.horizon")
                                      : times.back();
    if (s.horizon < times.back())
      throw ConfigError("protocol.horizon: must cover the last time node");
    if (s.horizon <= 0.0) throw ConfigError("protocol.horizon: must be positive");
    s.has_protocol = true;
    if (p.contains("deltas")) {
      s.deltas = num_array(p.at("deltas"), "protocol.deltas");
      for (double d : s.deltas)
        if (d <= 0.0) throw ConfigError("protocol.deltas: positive values required");
    }
    if (p.contains("initial")) {
      const json &init = p.at("initial");
      s.has_initial = true;
      if (init.is_string()) {
        if (init.get<std::string>() != "stationary")
          throw ConfigError("protocol.initial: expected \"stationary\", number or array");
        s.init = Scenario::Init::Stationary;
      } else if (init.is_number()) {
        s.init = Scenario::Init::Values;
        s.init_is_constant = true;
        s.init_constant = init.get<double>();
      } else {
        s.init = Scenario::Init::Values;
        s.init_values = num_array(init, "protocol.initial");
        if (int(s.init_values.size()) != s.n_cells)
          throw ConfigError("protocol.initial: expected n_cells values");
      }
    }
  }

  if (top.contains("target")) {
    const json &t = top.at("target");
    s.has_target = true;
    if (t.is_number()) {
      s.target_is_constant = true;
      s.target_constant = t.get<double>();
    } else {
      s.target_values = num_array(t, "target");
      if (int(s.target_values.size()) != s.n_cells)
        throw ConfigError("target: expected n_cells values");
    }
  }

  if (top.contains("micro")) {
    const json &mj = top.at("micro");
    expect_keys(mj,
                {"N", "t_burn", "t_measure", "max_events", "batches", "zr_cap",
                 "histogram_max", "oracle", "event_log"},
                "micro");
    s.micro.N = int(integer(req(mj, "N", "micro"), "micro.N"));
    if (mj.contains("t_burn")) s.micro.t_burn = num(mj.at("t_burn"), "micro.t_burn");
    if (mj.contains("t_measure"))
      s.micro.t_measure = num(mj.at("t_measure"), "micro.t_measure");
    if (mj.contains("max_events"))
      s.micro.max_events = integer(mj.at("max_events"), "micro.max_events");
    if (mj.contains("batches"))
      s.micro.batches = int(integer(mj.at("batches"), "micro.batches"));
    if (mj.contains("zr_cap")) s.micro.zr_cap = num(mj.at("zr_cap"), "micro.zr_cap");
    if (mj.contains("histogram_max"))
      s.micro.histogram_max = int(integer(mj.at("histogram_max"), "micro.histogram_max"));
    if (mj.contains("oracle")) {
      if (!mj.at("oracle").is_boolean()) throw ConfigError("micro.oracle: bool expected");
      s.micro_oracle = mj.at("oracle").get<bool>();
    }
    if (mj.contains("event_log"))
      s.micro.event_log = mj.at("event_log").get<std::string>();
    s.has_micro = true;
  }

  // per-command block requirements
  auto need = [&](bool ok, const char *what) {
    if (!ok) throw ConfigError(s.command + ": missing required block " + what);
  };
  if (s.command == "stationary") {
    need(s.has_model, "model");
    need(s.has_grid, "grid");
    need(s.has_drive, "drive");
  } else if (s.command == "evolve" || s.command == "work") {
    need(s.has_model, "model");
    need(s.has_grid, "grid");
    need(s.has_protocol, "protocol");
    need(s.has_initial, "protocol.initial");
  } else if (s.command == "quasipotential") {
    need(s.has_model, "model");
    need(s.has_grid, "grid");
    need(s.has_drive, "drive");
    need(s.has_target, "target");
  } else if (s.command == "quasistatic") {
    need(s.has_model, "model");
    need(s.has_grid, "grid");
    need(s.has_protocol, "protocol");
    need(!s.deltas.empty(), "protocol.deltas");
  } else if (s.command == "micro") {
    need(s.has_model, "model");
    need(s.has_drive, "drive");
    need(s.has_micro, "micro");
  }
  return s;
}

Scenario load_scenario(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception &e) {
    throw ConfigError(std::string("scenario parse error: ") + e.what());
  }
  if (j.is_object() && j.contains("scenario")) j = j.at("scenario");
  return parse_scenario(j);
}

} // namespace wc
