#include "weakcontact/pde.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

namespace wc {

namespace {

Field lerp_E(const Field &a, const Field &b, double w) {
  if (a.size() == 0 && b.size() == 0) return Field();
  if (a.size() == 0) return Field(w * b);
  if (b.size() == 0) return Field((1.0 - w) * a);
  if (a.size() != b.size()) throw ShapeError("schedule: E fields of unequal size");
  return Field((1.0 - w) * a + w * b);
}

void check_interior(const ModelSpec &model, const Grid1D &g, const Field &u, double t) {
  const StateInterval iv = state_interval(model);
  for (int i = 0; i < g.n; ++i) {
    if (!std::isfinite(u[i]) || !iv.contains_strictly(u[i]))
      throw StabilityError("density left the state interval at cell " + std::to_string(i) +
                           ", t=" + std::to_string(t));
  }
}

double wall_prime0_slope(const ModelSpec &model, double lam, double rho, Side side) {
  const double eps = 1e-6 * (1.0 + std::abs(rho));
  return (boundary_M_prime0(model, lam, rho + eps, side) -
          boundary_M_prime0(model, lam, rho - eps, side)) /
         (2.0 * eps);
}

// Tridiagonal solve, overwrites the inputs.
Field thomas(Field &a, Field &b, Field &c, Field &r) {
  const int n = int(b.size());
  for (int i = 1; i < n; ++i) {
    const double m = a[i] / b[i - 1];
    b[i] -= m * c[i - 1];
    r[i] -= m * r[i - 1];
  }
  Field x(n);
  x[n - 1] = r[n - 1] / b[n - 1];
  for (int i = n - 2; i >= 0; --i) x[i] = (r[i] - c[i] * x[i + 1]) / b[i];
  return x;
}

struct StepperHooks {
  // Explicit face current at (t, u).
  std::function<CurrentField(double, const Field &)> flux;
  // Derivatives of the two wall fluxes with respect to the wall traces of u,
  // used to take the Robin exchange implicitly.
  std::function<std::pair<double, double>(double, const Field &)> wall_slopes;
};

Trajectory run_stepper(const ModelSpec &model, const Grid1D &g, const Field &rho0,
                       double T, const SolverOptions &opts, const StepObserver &obs,
                       const StepperHooks &hooks) {
  require_same_grid(g, rho0, "evolve rho0");
  check_interior(model, g, rho0, 0.0);

  Trajectory out;
  auto record = [&](double t, const Field &u) {
    out.times.push_back(t);
    out.frames.push_back(u);
    out.currents.push_back(hooks.flux(t, u));
  };

  if (T <= 0.0) {
    record(0.0, rho0);
    if (obs) obs(0.0, rho0, out.currents.back());
    return out;
  }

  double dt = opts.dt;
  if (dt <= 0.0) {
    if (opts.scheme == Scheme::SemiImplicit) {
      dt = g.h / 4.0;
    } else {
      double dmax = 1.0;
      for (int i = 0; i < g.n; ++i) dmax = std::max(dmax, transport(model, rho0[i]).D);
      dt = opts.cfl * g.h * g.h / dmax;
    }
  } else if (opts.scheme == Scheme::ExplicitHeun) {
    double dmax = 1.0;
    for (int i = 0; i < g.n; ++i) dmax = std::max(dmax, transport(model, rho0[i]).D);
    if (dt > 0.5 * g.h * g.h / dmax)
      throw ConfigError("explicit scheme: dt violates the diffusive CFL bound");
  }

  long steps = std::max<long>(1, std::lround(std::ceil(T / dt)));
  long stride = steps;
  if (opts.sample_dt > 0.0) {
    stride = std::max<long>(1, std::lround(opts.sample_dt / dt));
    steps = ((steps + stride - 1) / stride) * stride;
  }
  dt = T / double(steps);

  Field u = rho0;
  record(0.0, u);

  for (long k = 0; k < steps; ++k) {
    const double t = k * dt;
    // the observer sees every step, not just the sampled frames
    if (obs) obs(t, u, hooks.flux(t, u));
    if (opts.scheme == Scheme::ExplicitHeun) {
      const CurrentField J1 = hooks.flux(t, u);
      const Field k1 = divergence_rhs(g, J1);
      Field u1 = u + dt * k1;
      check_interior(model, g, u1, t + dt);
      const CurrentField J2 = hooks.flux(t + dt, u1);
      const Field k2 = divergence_rhs(g, J2);
      u += (0.5 * dt) * (k1 + k2);
      out.influx += 0.5 * dt *
                    ((J1.face[0] - J1.face[g.n]) + (J2.face[0] - J2.face[g.n]));
    } else {
      const CurrentField J = hooks.flux(t + dt, u);
      const Field rhs = divergence_rhs(g, J);
      const auto [sL, sR] = hooks.wall_slopes(t + dt, u);
      Field D(g.n);
      for (int i = 0; i < g.n; ++i) D[i] = transport(model, u[i]).D;

      const int n = g.n;
      const double r = dt / (g.h * g.h);
      Field lo = Field::Zero(n), di = Field::Zero(n), up = Field::Zero(n);
      Field b = dt * rhs;
      for (int i = 0; i < n; ++i) di[i] = 1.0;
      // interior faces, implicit diffusion
      for (int j = 1; j < n; ++j) {
        di[j - 1] += r * D[j - 1];
        up[j - 1] -= r * D[j];
        di[j] += r * D[j];
        lo[j] -= r * D[j - 1];
      }
      // implicit Robin exchange via the trace stencils
      const double cL = dt / g.h * sL, cR = dt / g.h * sR;
      di[0] -= 1.5 * cL;
      up[0] += 0.5 * cL;
      di[n - 1] += 1.5 * cR;
      lo[n - 1] -= 0.5 * cR;
      // the left-wall correction couples cells 0,1 and the right-wall cells
      // n-1,n-2, so the system stays tridiagonal
      Field xi = thomas(lo, di, up, b);
      const double j0 = J.face[0] + sL * (1.5 * xi[0] - 0.5 * xi[1]);
      const double jn = J.face[n] + sR * (1.5 * xi[n - 1] - 0.5 * xi[n - 2]);
      u += xi;
      out.influx += dt * (j0 - jn);
    }
    check_interior(model, g, u, (k + 1) * dt);
    if ((k + 1) % stride == 0 || k + 1 == steps) record((k + 1) * dt, u);
  }
  if (obs) obs(T, u, hooks.flux(T, u));
  return out;
}

} // namespace

DriveSchedule DriveSchedule::constant(const Drive &d) {
  DriveSchedule s;
  s.times = {0.0};
  s.nodes = {d};
  return s;
}

Drive DriveSchedule::at(double t) const {
  if (times.empty() || times.size() != nodes.size())
    throw ConfigError("schedule: node/time count mismatch or empty schedule");
  if (t <= times.front()) return nodes.front();
  if (t >= times.back()) return nodes.back();
  auto it = std::upper_bound(times.begin(), times.end(), t);
  const size_t k = size_t(it - times.begin());
  const double w = (t - times[k - 1]) / (times[k] - times[k - 1]);
  const Drive &a = nodes[k - 1], &b = nodes[k];
  Drive d;
  d.lambda_left = (1.0 - w) * a.lambda_left + w * b.lambda_left;
  d.lambda_right = (1.0 - w) * a.lambda_right + w * b.lambda_right;
  d.kappa_left = (1.0 - w) * a.kappa_left + w * b.kappa_left;
  d.kappa_right = (1.0 - w) * a.kappa_right + w * b.kappa_right;
  d.E = lerp_E(a.E, b.E, w);
  return d;
}

DriveSchedule DriveSchedule::stretched(double factor) const {
  if (factor <= 0.0) throw ConfigError("schedule: stretch factor must be positive");
  DriveSchedule s = *this;
  for (double &t : s.times) t *= factor;
  return s;
}

double DriveSchedule::last_node_time() const {
  return times.empty() ? 0.0 : times.back();
}

Trajectory evolve_hydro(const ModelSpec &model, const Grid1D &g, const Field &rho0,
                        const DriveSchedule &schedule, double T,
                        const SolverOptions &opts, const StepObserver &obs) {
  for (const Drive &d : schedule.nodes) {
    mean_R(model, d.lambda_left); // throws if the drive is inadmissible
    mean_R(model, d.lambda_right);
    if (d.E.size() > 0 && d.E.size() != g.n)
      throw ShapeError("evolve_hydro: drive E size mismatch");
  }
  StepperHooks hooks;
  hooks.flux = [&](double t, const Field &u) {
    return current_of(model, g, u, schedule.at(t));
  };
  hooks.wall_slopes = [&](double t, const Field &u) {
    const Drive d = schedule.at(t);
    const double sL =
        d.kappa_left * wall_prime0_slope(model, d.lambda_left, trace_left(u), Side::Left);
    const double sR = -d.kappa_right * wall_prime0_slope(model, d.lambda_right,
                                                         trace_right(u), Side::Right);
    return std::make_pair(sL, sR);
  };
  return run_stepper(model, g, rho0, T, opts, obs, hooks);
}

Trajectory evolve_adjoint(const ModelSpec &model, const Grid1D &g, const Field &rho0,
                          const Drive &drive, const DvProvider &dv, double T,
                          const SolverOptions &opts, const StepObserver &obs) {
  if (!dv) throw ConfigError("evolve_adjoint: missing dV provider");
  StepperHooks hooks;
  hooks.flux = [&](double, const Field &u) {
    return current_decomposition(model, g, u, drive, dv(u)).Jadj;
  };
  hooks.wall_slopes = [&](double, const Field &u) {
    const Field F = dv(u);
    const double rtL = trace_left(u), rtR = trace_right(u);
    const double pL = free_energy_prime(model, rtL) - free_energy_prime(model, trace_left(F));
    const double pR =
        free_energy_prime(model, rtR) - free_energy_prime(model, trace_right(F));
    const double sL = -drive.kappa_left *
                      boundary_M_deriv(model, drive.lambda_left, rtL, pL, 2, Side::Left) *
                      free_energy_second(model, rtL);
    const double sR = drive.kappa_right *
                      boundary_M_deriv(model, drive.lambda_right, rtR, pR, 2, Side::Right) *
                      free_energy_second(model, rtR);
    return std::make_pair(sL, sR);
  };
  return run_stepper(model, g, rho0, T, opts, obs, hooks);
}

namespace {

Field newton_on_field(const std::function<Field(const Field &)> &residual, Field u,
                      const std::function<bool(const Field &)> &valid, double tol,
                      int max_iter, const char *what) {
  const int n = int(u.size());
  Field res = residual(u);
  double rn = res.abs().maxCoeff();
  const double rn0 = rn;
  for (int it = 0; it < max_iter; ++it) {
    if (rn <= tol) return u;
    Eigen::MatrixXd Jm(n, n);
    for (int j = 0; j < n; ++j) {
      const double eps = 1e-7 * (1.0 + std::abs(u[j]));
      Field up = u;
      up[j] += eps;
      Jm.col(j) = ((residual(up) - res) / eps).matrix();
    }
    Eigen::VectorXd step = Jm.partialPivLu().solve(-res.matrix());
    if (!step.allFinite())
      throw ConvergenceError(std::string(what) + ": singular linearization");
    double tstep = 1.0;
    bool ok = false;
    while (tstep > 1e-12) {
      Field cand = u + tstep * step.array();
      if (valid(cand)) {
        Field rc = residual(cand);
        const double rcn = rc.abs().maxCoeff();
        if (rcn < rn * (1.0 - 1e-4 * tstep) || rcn <= tol) {
          u = cand;
          res = rc;
          rn = rcn;
          ok = true;
          break;
        }
      }
      tstep *= 0.5;
    }
    if (!ok) {
      // Stiff couplings push the attainable residual floor above the absolute
      // tolerance; accept once the residual has collapsed to roundoff scale.
      if (rn <= tol + 1e-12 * rn0) return u;
      throw ConvergenceError(std::string(what) + ": Newton stalled");
    }
  }
  if (rn <= tol) return u;
  throw ConvergenceError(std::string(what) + ": no convergence");
}

} // namespace

Field solve_stationary(const ModelSpec &model, const Grid1D &g, const Drive &drive,
                       const Field *guess, double tol) {
  const StateInterval iv = state_interval(model);
  Field u;
  if (guess) {
    require_same_grid(g, *guess, "solve_stationary guess");
    u = *guess;
  } else {
    const double m =
        0.5 * (mean_R(model, drive.lambda_left) + mean_R(model, drive.lambda_right));
    u = Field::Constant(g.n, m);
  }
  auto residual = [&](const Field &v) { return divergence_rhs(g, current_of(model, g, v, drive)); };
  auto valid = [&](const Field &v) {
    for (int i = 0; i < g.n; ++i)
      if (!std::isfinite(v[i]) || !iv.contains_strictly(v[i])) return false;
    return iv.contains_strictly(trace_left(v)) && iv.contains_strictly(trace_right(v));
  };
  for (int round = 0;; ++round) {
    try {
      return newton_on_field(residual, u, valid, tol, 60, "solve_stationary");
    } catch (const ConvergenceError &) {
      if (round >= 4) throw;
      SolverOptions so;
      Trajectory tr = evolve_hydro(model, g, u, DriveSchedule::constant(drive), 2.0, so);
      u = tr.frames.back();
    }
  }
}

Field solve_F_equation(const ModelSpec &model, const Grid1D &g, const Field &rho,
                       const Drive &drive, const FEquationOptions &opts) {
  require_same_grid(g, rho, "solve_F_equation rho");
  if (drive.has_E() && drive.E.abs().maxCoeff() > 0.0)
    throw PreconditionError("solve_F_equation requires E = 0");
  if (model.kind == ModelKind::ZeroRange) return solve_stationary(model, g, drive);
  if (model.kind != ModelKind::SEP && model.kind != ModelKind::KMP)
    throw ConfigError("solve_F_equation: unsupported model");

  const StateInterval iv = state_interval(model);
  auto valid = [&](const Field &v) {
    for (int i = 0; i < g.n; ++i)
      if (!std::isfinite(v[i]) || !iv.contains_strictly(v[i])) return false;
    return iv.contains_strictly(trace_left(v)) && iv.contains_strictly(trace_right(v));
  };

  auto residual_at = [&](const Field &target) {
    return [&, target](const Field &F) {
      const int n = g.n;
      Field res(n);
      const Eigen::ArrayXd gF = face_grad(g, F);
      // exchange-rate boundary rows
      if (model.kind == ModelKind::SEP) {
        res[0] = gF[0] + drive.kappa_left *
                             boundary_M_prime0(model, drive.lambda_left, trace_left(F),
                                               Side::Left);
        res[n - 1] = -gF[n] + drive.kappa_right *
                                  boundary_M_prime0(model, drive.lambda_right,
                                                    trace_right(F), Side::Right);
      } else {
        // KMP walls couple the exchange rate to the target density trace.
        auto wall = [&](double lam, double Ftr, double rtr) {
          const double tau = -1.0 / lam;
          const double den = rtr * Ftr - tau * rtr + tau * Ftr;
          return Ftr * Ftr * (tau - Ftr) / den;
        };
        res[0] = gF[0] + drive.kappa_left *
                             wall(drive.lambda_left, trace_left(F), trace_left(target));
        res[n - 1] = -gF[n] + drive.kappa_right * wall(drive.lambda_right, trace_right(F),
                                                       trace_right(target));
      }
      const double h2 = g.h * g.h;
      for (int i = 1; i < n - 1; ++i) {
        const double lap = (F[i + 1] - 2.0 * F[i] + F[i - 1]) / h2;
        const double gsq = (F[i + 1] - F[i]) * (F[i] - F[i - 1]) / h2;
        if (model.kind == ModelKind::SEP)
          res[i] = lap - (target[i] - F[i]) * gsq / (F[i] * (1.0 - F[i]));
        else
          res[i] = lap + (target[i] - F[i]) * gsq / (F[i] * F[i]);
      }
      return res;
    };
  };

  if (opts.guess && opts.guess->size() == g.n && valid(*opts.guess)) {
    try {
      return newton_on_field(residual_at(rho), *opts.guess, valid, opts.tol,
                             opts.max_iter, "solve_F_equation");
    } catch (const ConvergenceError &) {
      // fall through to the continuation below
    }
  }

  // Continuation in the density from the stationary profile, where F = rhobar
  // is the exact root.
  const Field rhobar = solve_stationary(model, g, drive);
  Field F = rhobar;
  double s = 0.0, step = 1.0;
  while (s < 1.0) {
    const double snext = std::min(1.0, s + step);
    Field target = rhobar + snext * (rho - rhobar);
    try {
      F = newton_on_field(residual_at(target), F, valid, opts.tol, opts.max_iter,
                          "solve_F_equation");
      s = snext;
      step = std::min(1.0, 2.0 * step);
    } catch (const ConvergenceError &e) {
      step *= 0.5;
      if (step < 1e-3) {
        int cross = -1;
        for (int i = 1; i < g.n; ++i)
          if ((rho[i] - F[i]) * (rho[i - 1] - F[i - 1]) < 0.0) {
            cross = i;
            break;
          }
        std::string msg = std::string(e.what()) + " (continuation exhausted";
        if (cross >= 0)
          msg += ", density/slope crossing near cell " + std::to_string(cross);
        throw ConvergenceError(msg + ")");
      }
    }
  }
  return F;
}

} // namespace wc
