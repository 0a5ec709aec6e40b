#include "weakcontact/quasipotential.hpp"

#include <cmath>
#include <string>

namespace wc {

void gauss_legendre_01(int n, std::vector<double> &nodes, std::vector<double> &weights) {
  if (n < 1) throw ConfigError("gauss_legendre_01: need at least one node");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int k = 0; k < (n + 1) / 2; ++k) {
    double x = std::cos(M_PI * (k + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      // Legendre recurrence for P_n(x) and P_n'(x)
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[k] = 0.5 * (1.0 - x); // descending x maps to ascending node
    weights[k] = 0.5 * w;
    nodes[n - 1 - k] = 0.5 * (1.0 + x);
    weights[n - 1 - k] = 0.5 * w;
  }
}

Field dV_equilibrium(const ModelSpec &model, const Grid1D &g, const Field &rho,
                     const Drive &drive, double tol) {
  require_same_grid(g, rho, "dV_equilibrium rho");
  const Field rhobar = solve_stationary(model, g, drive);
  const CurrentField J = current_of(model, g, rhobar, drive);
  if (J.face.abs().maxCoeff() > tol)
    throw PreconditionError("dV_equilibrium: drive is not an equilibrium state");
  return map_fprime(model, rho) - map_fprime(model, rhobar);
}

QuasiPotentialEval dV_nonequilibrium(const ModelSpec &model, const Grid1D &g,
                                     const Field &rho, const Drive &drive) {
  QuasiPotentialEval out;
  out.F_aux = solve_F_equation(model, g, rho, drive);
  out.dV = map_fprime(model, rho) - map_fprime(model, out.F_aux);
  out.hj_residual = std::abs(hamiltonian_at_dv(model, g, rho, out.F_aux, drive));
  return out;
}

QuasiPotentialEval V_line_integral(const ModelSpec &model, const Grid1D &g,
                                   const Field &gamma, const Drive &drive, int n_path) {
  require_same_grid(g, gamma, "V_line_integral gamma");
  const Field rhobar = solve_stationary(model, g, drive);
  const Field dir = gamma - rhobar;
  const StateInterval iv = state_interval(model);

  std::vector<double> s, w;
  gauss_legendre_01(n_path, s, w);

  double V = 0.0;
  Field Fwarm = rhobar;
  for (int k = 0; k < n_path; ++k) {
    Field rho_s = rhobar + s[k] * dir;
    for (int i = 0; i < g.n; ++i)
      if (!iv.contains_strictly(rho_s[i]))
        throw DomainError("V_line_integral: segment exits the state interval at cell " +
                          std::to_string(i));
    FEquationOptions fo;
    fo.guess = &Fwarm;
    Fwarm = solve_F_equation(model, g, rho_s, drive, fo);
    const Field dV = map_fprime(model, rho_s) - map_fprime(model, Fwarm);
    V += w[k] * g.h * (dV * dir).sum();
  }

  FEquationOptions fo;
  fo.guess = &Fwarm;
  QuasiPotentialEval out;
  out.F_aux = solve_F_equation(model, g, gamma, drive, fo);
  out.dV = map_fprime(model, gamma) - map_fprime(model, out.F_aux);
  out.hj_residual = std::abs(hamiltonian_at_dv(model, g, gamma, out.F_aux, drive));
  out.V = V;
  if (V < -1e-8)
    throw ConvergenceError("V_line_integral: negative quasi-potential value");
  return out;
}

double time_reversal_check(const ModelSpec &model, const Grid1D &g, const Field &rho,
                           const Field &gamma_rate, const Drive &drive) {
  require_same_grid(g, gamma_rate, "time_reversal_check gamma");
  const QuasiPotentialEval qp = dV_nonequilibrium(model, g, rho, drive);
  const LagrangianResult adj = lagrangian_adjoint(model, g, rho, gamma_rate, qp.dV, drive);
  const LagrangianResult fwd = lagrangian(model, g, rho, Field(-gamma_rate), drive);
  const double pairing = g.h * (qp.dV * gamma_rate).sum();
  return std::abs(adj.value - fwd.value - pairing);
}

} // namespace wc
