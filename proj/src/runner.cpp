#include "weakcontact/runner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "weakcontact/functionals.hpp"
#include "weakcontact/quasipotential.hpp"
#include "weakcontact/thermo.hpp"

namespace wc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  void write(const fs::path &path, char sep) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    for (size_t k = 0; k < header.size(); ++k)
      out << (k ? std::string(1, sep) : "") << header[k];
    out << "\n";
    for (const auto &row : rows) {
      for (size_t k = 0; k < row.size(); ++k)
        out << (k ? std::string(1, sep) : "") << fmt17(row[k]);
      out << "\n";
    }
  }
};

void write_json(const fs::path &path, const json &j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

void write_plot_script(const fs::path &dir, const std::string &dat,
                       const Table &t, int xcol) {
  std::ofstream out(dir / "plot.gp");
  out << "set datafile separator whitespace\nset grid\nset key outside\n"
      << "set xlabel '" << t.header[xcol - 1] << "'\nplot";
  bool first = true;
  for (size_t k = 0; k < t.header.size(); ++k) {
    if (int(k) == xcol - 1) continue;
    out << (first ? " " : ", \\\n     ") << "'" << dat << "' using " << xcol << ":"
        << k + 1 << " with lines title '" << t.header[k] << "'";
    first = false;
  }
  out << "\n";
}

class Emitter {
public:
  Emitter(const Scenario &s, const RunOptions &opts) : s_(s) {
    dir_ = !opts.out_dir.empty() ? opts.out_dir : (!s.out.empty() ? s.out : ".");
    fs::create_directories(dir_);
  }

  const fs::path &dir() const { return dir_; }

  void table(const std::string &stem, const Table &t, bool plot = false) {
    t.write(dir_ / (stem + ".csv"), ',');
    if (plot) {
      t.write(dir_ / (stem + ".dat"), ' ');
      write_plot_script(dir_, stem + ".dat", t, 1);
    }
    outputs_.push_back(stem + ".csv");
  }

  void ledger(const json &j) {
    write_json(dir_ / "ledger.json", j);
    outputs_.push_back("ledger.json");
  }

  void report(const json &j) {
    write_json(dir_ / "report.json", j);
    outputs_.push_back("report.json");
  }

  void manifest(const json &extra) {
    json m;
    m["command"] = s_.command;
    m["scenario"] = s_.raw;
    m["outputs"] = outputs_;
    m["version"] = {{"weakcontact", "0.1.0"},
                    {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                  std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                  std::to_string(EIGEN_MINOR_VERSION)}};
    for (const auto &el : extra.items()) m[el.key()] = el.value();
    write_json(dir_ / "manifest.json", m);
  }

private:
  const Scenario &s_;
  fs::path dir_;
  std::vector<std::string> outputs_;
};

Field initial_profile(const Scenario &s, const Grid1D &g) {
  if (s.init == Scenario::Init::Stationary)
    return solve_stationary(s.model, g, s.protocol.at(0.0));
  if (s.init_is_constant) return Field::Constant(g.n, s.init_constant);
  return Eigen::Map<const Eigen::ArrayXd>(s.init_values.data(), s.init_values.size());
}

Field target_profile(const Scenario &s, const Grid1D &g) {
  if (s.target_is_constant) return Field::Constant(g.n, s.target_constant);
  return Eigen::Map<const Eigen::ArrayXd>(s.target_values.data(),
                                          s.target_values.size());
}

int cmd_stationary(const Scenario &s, Emitter &em) {
  const Grid1D g(s.n_cells);
  const Field rho = solve_stationary(s.model, g, s.drive);
  const CurrentField J = current_of(s.model, g, rho, s.drive);
  const double residual = divergence_rhs(g, J).abs().maxCoeff();

  Table t;
  t.header = {"x", "rho"};
  const Field x = g.centers();
  for (int i = 0; i < g.n; ++i) t.rows.push_back({x[i], rho[i]});
  em.table("profile", t, true);

  const double tol = s.tol > 0.0 ? s.tol : 1e-8;
  em.manifest({{"residual", residual},
               {"current", J.face[g.n / 2]},
               {"tolerance", tol}});
  return residual <= tol ? 0 : 1;
}

int cmd_evolve(const Scenario &s, Emitter &em) {
  const Grid1D g(s.n_cells);
  const Field rho0 = initial_profile(s, g);
  SolverOptions so = s.solver;
  if (so.sample_dt <= 0.0) so.sample_dt = s.horizon / 100.0;
  const Trajectory tr = evolve_hydro(s.model, g, rho0, s.protocol, s.horizon, so);

  Table t;
  t.header = {"time", "mass"};
  for (int i = 0; i < g.n; ++i) t.header.push_back("rho_" + std::to_string(i));
  for (size_t k = 0; k < tr.times.size(); ++k) {
    std::vector<double> row{tr.times[k], tr.frames[k].sum() * g.h};
    for (int i = 0; i < g.n; ++i) row.push_back(tr.frames[k][i]);
    t.rows.push_back(std::move(row));
  }
  em.table("trajectory", t);

  Table p;
  p.header = {"x", "rho"};
  const Field x = g.centers();
  const Field &rhoT = tr.frames.back();
  for (int i = 0; i < g.n; ++i) p.rows.push_back({x[i], rhoT[i]});
  em.table("profile", p, true);

  em.manifest({{"influx", tr.influx},
               {"final_mass", rhoT.sum() * g.h},
               {"frames", tr.times.size()}});
  return 0;
}

int cmd_quasipotential(const Scenario &s, Emitter &em) {
  const Grid1D g(s.n_cells);
  const Field gamma = target_profile(s, g);
  const Field rhobar = solve_stationary(s.model, g, s.drive);
  const bool equilibrium =
      current_of(s.model, g, rhobar, s.drive).face.abs().maxCoeff() <= 1e-8;
  QuasiPotentialEval ev;
  if (equilibrium) {
    ev.dV = dV_equilibrium(s.model, g, gamma, s.drive);
    ev.F_aux = rhobar;
  } else {
    ev = dV_nonequilibrium(s.model, g, gamma, s.drive);
  }
  const double V = V_line_integral(s.model, g, gamma, s.drive).V;

  Table t;
  t.header = {"x", "rho", "dV", "F_aux"};
  const Field x = g.centers();
  for (int i = 0; i < g.n; ++i)
    t.rows.push_back({x[i], gamma[i], ev.dV[i], ev.F_aux[i]});
  em.table("profile", t, true);

  em.ledger({{"V", V},
             {"hj_residual", ev.hj_residual},
             {"equilibrium", equilibrium}});
  em.manifest({{"V", V}});
  return 0;
}

json ledger_json(const WorkLedger &led) {
  return {{"W", led.W},
          {"dF", led.dF},
          {"bulk_dissipation", led.bulk_dissipation},
          {"boundary_dissipation", led.boundary_dissipation},
          {"renorm_bulk", led.renorm_bulk},
          {"renorm_boundary", led.renorm_boundary},
          {"excess", led.excess},
          {"renormalized", led.renormalized},
          {"identity_residual", led.identity_residual},
          {"horizon", led.horizon},
          {"clausius", led.W >= led.dF - 1e-12}};
}

int cmd_work(const Scenario &s, Emitter &em) {
  const Grid1D g(s.n_cells);
  const Field rho0 = initial_profile(s, g);
  WorkOptions wo;
  wo.solver = s.solver;
  WorkLedger led;
  if (s.renormalized) {
    wo.min_horizon = s.horizon - s.protocol.last_node_time();
    led = renormalized_work(s.model, g, rho0, s.protocol, wo);
  } else {
    led = work_exchanged(s.model, g, rho0, s.protocol, s.horizon, wo);
  }
  em.ledger(ledger_json(led));
  em.manifest({{"renormalized_mode", s.renormalized}});
  return 0;
}

int cmd_quasistatic(const Scenario &s, Emitter &em, int threads) {
  const Grid1D g(s.n_cells);
  WorkOptions wo;
  wo.solver = s.solver;
  const auto rows = quasistatic_sweep(s.model, g, s.protocol, s.deltas, wo, threads);

  Table t;
  t.header = {"delta", "excess_work"};
  bool monotone = true;
  for (size_t k = 0; k < rows.size(); ++k) {
    t.rows.push_back({rows[k].first, rows[k].second});
    if (k > 0 && rows[k].first < rows[k - 1].first &&
        rows[k].second > rows[k - 1].second)
      monotone = false;
  }
  em.table("sweep", t, true);
  em.manifest({{"monotone", monotone}});
  return 0;
}

int cmd_micro(const Scenario &s, Emitter &em) {
  MicroConfig cfg = s.micro;
  cfg.model = s.model;
  cfg.drive = s.drive;
  cfg.seed = s.seed;
  const EmpiricalProfile p = simulate(cfg);

  Table t;
  t.header = {"site", "x", "mean", "stderr"};
  for (int i = 0; i < cfg.N; ++i)
    t.rows.push_back({double(i), (i + 0.5) / cfg.N, p.mean[i], p.sem[i]});
  em.table("profile", t, true);

  json led{{"events", p.events}, {"horizon", p.horizon}};
  int code = 0;
  if (s.micro_oracle) {
    if (p.state_occupancy.empty())
      throw ConfigError("micro.oracle: requires an exclusion model with N <= 12");
    const GeneratorOracle o = exact_generator_oracle(cfg);
    double tv = 0.0;
    for (size_t m = 0; m < p.state_occupancy.size(); ++m)
      tv += std::abs(p.state_occupancy[m] - o.pi[int(m)]);
    tv *= 0.5;
    const double tol = s.tol > 0.0 ? s.tol : 0.01;
    led["tv_distance"] = tv;
    led["oracle_residual"] = o.residual;
    led["oracle_current_left"] = o.current_left;
    led["oracle_current_right"] = o.current_right;
    led["tolerance"] = tol;
    code = tv <= tol ? 0 : 1;
  }
  em.ledger(led);
  em.manifest({{"seed", s.seed}});
  return code;
}

// ---- verification suites ----------------------------------------------------

struct Sampler {
  std::mt19937_64 eng{987654321u};
  double uniform(double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(eng);
  }
  double lambda(const ModelSpec &m) {
    switch (m.kind) {
    case ModelKind::KMP:
      return uniform(-3.0, -0.3);
    case ModelKind::ZeroRange:
      return m.zr_rate == ZrRateKind::Constant ? uniform(-2.0, -0.1)
                                               : uniform(-2.0, 1.0);
    default:
      return uniform(-2.0, 2.0);
    }
  }
  double rho(const ModelSpec &m) {
    return m.kind == ModelKind::SEP ? uniform(0.05, 0.95) : uniform(0.1, 3.0);
  }
};

struct SuiteResult {
  std::string name;
  bool pass = false;
  double worst = 0.0;
};

std::vector<ModelSpec> reversible_models() {
  return {ModelSpec::sep(), ModelSpec::kmp(),
          ModelSpec::zero_range(ZrRateKind::Linear),
          ModelSpec::zero_range(ZrRateKind::Constant)};
}

SuiteResult suite_reservoir_identity(double tol) {
  Sampler s;
  SuiteResult r{"reservoir-identity-zero", true, 0.0};
  for (const ModelSpec &m : reversible_models())
    for (int i = 0; i < 100; ++i) {
      const double lam = s.lambda(m), rho = s.rho(m);
      r.worst = std::max(
          r.worst, std::abs(boundary_M(m, lam, rho, free_energy_prime(m, rho) - lam)));
    }
  r.pass = r.worst <= tol;
  return r;
}

SuiteResult suite_argument_swap(double tol) {
  Sampler s;
  SuiteResult r{"argument-swap", true, 0.0};
  for (const ModelSpec &m : reversible_models())
    for (int i = 0; i < 100; ++i) {
      const double lam = s.lambda(m), rho = s.rho(m), q = s.rho(m);
      const double lhs =
          boundary_M(m, lam, rho, free_energy_prime(m, rho) - free_energy_prime(m, q));
      const double rhs = boundary_M(m, lam, rho, free_energy_prime(m, q) - lam);
      if (std::isinf(lhs) || std::isinf(rhs)) {
        if (lhs != rhs) r.pass = false;
        continue;
      }
      r.worst = std::max(r.worst, std::abs(lhs - rhs) / (1.0 + std::abs(rhs)));
    }
  if (r.worst > tol) r.pass = false;
  return r;
}

SuiteResult suite_mobility_transfer(double tol) {
  Sampler s;
  SuiteResult r{"mobility-transfer", true, 0.0};
  for (const ModelSpec &m : {ModelSpec::sep(), ModelSpec::zero_range(ZrRateKind::Linear),
                             ModelSpec::zero_range(ZrRateKind::Constant)})
    for (int i = 0; i < 100; ++i) {
      const double mu = s.lambda(m), rho = s.rho(m), q = s.rho(m);
      if (std::abs(rho - q) < 1e-3) continue;
      const Transport tq = transport(m, q);
      const double dd = transport(m, rho).d - tq.d;
      const double lhs =
          tq.sigma / dd *
          boundary_M(m, mu, rho, free_energy_prime(m, rho) - free_energy_prime(m, q));
      r.worst = std::max(r.worst, std::abs(lhs - boundary_M_prime0(m, mu, q)) /
                                      (1.0 + std::abs(lhs)));
    }
  r.pass = r.worst <= tol;
  return r;
}

SuiteResult suite_einstein(double tol) {
  Sampler s;
  SuiteResult r{"einstein-relation", true, 0.0};
  for (const ModelSpec &m : reversible_models())
    for (int i = 0; i < 100; ++i) {
      const double rho = s.rho(m);
      const Transport tr = transport(m, rho);
      r.worst = std::max(r.worst,
                         std::abs(tr.D - tr.sigma * free_energy_second(m, rho)) /
                             (1.0 + std::abs(tr.D)));
    }
  r.pass = r.worst <= tol;
  return r;
}

SuiteResult suite_boundary_sign(const Drive &drive) {
  Sampler s;
  SuiteResult r{"boundary-sign", true, 0.0};
  const ModelSpec m = ModelSpec::sep();
  for (int side = 0; side < 2; ++side) {
    const double lam = side == 0 ? drive.lambda_left : drive.lambda_right;
    const double kap = side == 0 ? drive.kappa_left : drive.kappa_right;
    for (int i = 0; i < 100; ++i) {
      const double rho = s.rho(m);
      const double gap = free_energy_prime(m, rho) - lam;
      const double flux = kap * boundary_M_prime0(m, lam, rho);
      if (std::abs(gap) > 1e-8 && gap * flux >= 0.0) {
        r.pass = false;
        r.worst = std::max(r.worst, gap * flux);
      }
      const double p = s.uniform(-1.0, 1.0);
      const double A =
          kap * (boundary_M(m, lam, rho, p) - p * boundary_M_prime0(m, lam, rho));
      if (A < -1e-12) {
        r.pass = false;
        r.worst = std::max(r.worst, -A);
      }
    }
  }
  return r;
}

SuiteResult suite_stationary_profile() {
  SuiteResult r{"stationary-profile", true, 0.0};
  const Grid1D g(128);
  Drive d;
  d.lambda_left = std::log(0.25);
  d.lambda_right = std::log(4.0);
  const Field rho = solve_stationary(ModelSpec::sep(), g, d);
  const Field expect = 0.4 + 0.2 * g.centers();
  r.worst = (rho - expect).abs().maxCoeff();
  r.pass = r.worst <= 1e-8;
  return r;
}

SuiteResult suite_work_identity() {
  SuiteResult r{"work-decomposition", true, 0.0};
  const Grid1D g(32);
  DriveSchedule sch;
  sch.times = {0.0, 0.8};
  Drive a, b;
  a.lambda_left = a.lambda_right = 0.0;
  b.lambda_left = 0.4;
  b.lambda_right = -0.3;
  sch.nodes = {a, b};
  const Field rho0 = solve_stationary(ModelSpec::sep(), g, a);
  WorkOptions wo;
  wo.solver.scheme = Scheme::ExplicitHeun;
  wo.identity_tol = -1.0; // assert here, not inside
  const WorkLedger led = work_exchanged(ModelSpec::sep(), g, rho0, sch, 0.8, wo);
  r.worst = std::abs(led.identity_residual) / (std::abs(led.W) + 1.0);
  r.pass = r.worst <= 1e-6 && led.W >= led.dF - 1e-9;
  return r;
}

SuiteResult suite_orthogonality_decay() {
  SuiteResult r{"orthogonality-decay", true, 0.0};
  Drive d;
  d.lambda_left = std::log(0.25);
  d.lambda_right = std::log(4.0);
  const ModelSpec m = ModelSpec::sep();
  double prev15 = 0.0, prev16 = 0.0;
  for (int n : {32, 64, 128}) {
    const Grid1D g(n);
    const Field rho =
        solve_stationary(m, g, d) + 0.05 * (2.0 * M_PI * g.centers()).sin();
    const Field F = solve_F_equation(m, g, rho, d);
    const OrthogonalityResiduals res = orthogonality_residuals(m, g, rho, d, F);
    if (n > 32) {
      if (std::abs(res.r15) > prev15 / 2.5 || std::abs(res.r16) > prev16 / 2.5)
        r.pass = false;
    }
    prev15 = std::abs(res.r15);
    prev16 = std::abs(res.r16);
    r.worst = std::max(std::abs(res.r15), std::abs(res.r16));
  }
  return r;
}

SuiteResult suite_adjoint_equilibrium() {
  SuiteResult r{"adjoint-equilibrium", true, 0.0};
  const Grid1D g(32);
  Drive d;
  d.lambda_left = d.lambda_right = 0.2;
  const ModelSpec m = ModelSpec::sep();
  const double rho_eq = mean_R(m, 0.2);
  const Field rho0 = rho_eq + 0.08 * (2.0 * M_PI * g.centers()).sin();
  const Field Faux = Field::Constant(g.n, rho_eq);
  SolverOptions so;
  so.scheme = Scheme::ExplicitHeun;
  const Trajectory fwd = evolve_hydro(m, g, rho0, DriveSchedule::constant(d), 0.5, so);
  const Trajectory adj =
      evolve_adjoint(m, g, rho0, d, [&](const Field &) { return Faux; }, 0.5, so);
  r.worst = (fwd.frames.back() - adj.frames.back()).abs().maxCoeff();
  r.pass = r.worst <= 1e-8;
  return r;
}

SuiteResult suite_nonrev_witness() {
  SuiteResult r{"nonrev-witness", true, 0.0};
  const ModelSpec nr = ModelSpec::nonrev_exclusion(example_nonrev_table());
  double lo = 1e-6, hi = 1.0 - 1e-6;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (boundary_M_prime0(nr, 0.0, mid) > 0.0 ? lo : hi) = mid;
  }
  const double lam_eff = free_energy_prime(nr, 0.5 * (lo + hi));
  for (double rho : {0.2, 0.4, 0.6, 0.8})
    r.worst = std::max(
        r.worst, std::abs(boundary_M(nr, 0.0, rho, free_energy_prime(nr, rho) - lam_eff)));
  r.pass = r.worst > 1e-3; // the violation is the expected outcome
  return r;
}

int cmd_verify(const Scenario &s, Emitter &em, double verify_tol) {
  const double tol = verify_tol > 0.0 ? verify_tol : 1e-10;
  Drive drive;
  drive.lambda_left = std::log(0.25);
  drive.lambda_right = std::log(4.0);
  if (s.has_drive) drive = s.drive;

  std::vector<SuiteResult> results;
  results.push_back(suite_reservoir_identity(tol));
  results.push_back(suite_argument_swap(tol));
  results.push_back(suite_mobility_transfer(tol));
  results.push_back(suite_einstein(tol));
  results.push_back(suite_boundary_sign(drive));
  results.push_back(suite_stationary_profile());
  results.push_back(suite_work_identity());
  results.push_back(suite_orthogonality_decay());
  results.push_back(suite_adjoint_equilibrium());
  results.push_back(suite_nonrev_witness());

  json rep;
  rep["suites"] = json::array();
  bool all = true;
  for (const SuiteResult &r : results) {
    std::printf("%s %s (worst %.3e)\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                r.worst);
    rep["suites"].push_back({{"name", r.name}, {"pass", r.pass}, {"worst", r.worst}});
    all = all && r.pass;
  }
  rep["passed"] = all;
  rep["tolerance"] = tol;
  em.report(rep);
  em.manifest({{"passed", all}});
  return all ? 0 : 1;
}

} // namespace

int run_command(const Scenario &s, const RunOptions &opts) {
  Emitter em(s, opts);
  if (s.command == "stationary") return cmd_stationary(s, em);
  if (s.command == "evolve") return cmd_evolve(s, em);
  if (s.command == "quasipotential") return cmd_quasipotential(s, em);
  if (s.command == "work") return cmd_work(s, em);
  if (s.command == "quasistatic") return cmd_quasistatic(s, em, opts.threads);
  if (s.command == "micro") return cmd_micro(s, em);
  if (s.command == "verify") return cmd_verify(s, em, opts.verify_tol);
  throw ConfigError("unknown command " + s.command);
}

} // namespace wc
