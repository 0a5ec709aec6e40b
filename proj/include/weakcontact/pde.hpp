#ifndef WEAKCONTACT_PDE_HPP
#define WEAKCONTACT_PDE_HPP

#include <functional>
#include <vector>

#include "weakcontact/functionals.hpp"

namespace wc {

// Piecewise-linear protocol of reservoir drives; constant beyond the last node.
struct DriveSchedule {
  std::vector<double> times;
  std::vector<Drive> nodes;

  static DriveSchedule constant(const Drive &d);
  Drive at(double t) const;
  // Stretch all node times by a factor (quasi-static reparameterization).
  DriveSchedule stretched(double factor) const;
  double last_node_time() const;
};

enum class Scheme { SemiImplicit, ExplicitHeun };

struct SolverOptions {
  Scheme scheme = Scheme::SemiImplicit;
  double dt = 0.0;  // 0 picks h/4 (semi-implicit) or cfl*h^2/max D (explicit)
  double cfl = 0.2;
  double sample_dt = 0.0; // 0 keeps only the first and last frame
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Field> frames;
  std::vector<CurrentField> currents; // current at each stored frame
  double influx = 0.0;                // time-integrated net boundary influx
};

using StepObserver = std::function<void(double t, const Field &u, const CurrentField &J)>;

// Conservative finite-volume integration of du/dt + div J(u) = 0 with Robin
// exchange fluxes at the walls. Mass change equals the integrated influx.
Trajectory evolve_hydro(const ModelSpec &model, const Grid1D &g, const Field &rho0,
                        const DriveSchedule &schedule, double T,
                        const SolverOptions &opts = {}, const StepObserver &obs = {});

// Stationary profile: damped Newton on div J(rho) = 0 with a pseudo-time
// marching fallback; residual sup-norm below tol.
Field solve_stationary(const ModelSpec &model, const Grid1D &g, const Drive &drive,
                       const Field *guess = nullptr, double tol = 1e-10);

// Supplies the auxiliary profile F_aux (so dV = f'(rho) - f'(F_aux)) for the
// current density; re-evaluated along the adjoint evolution.
using DvProvider = std::function<Field(const Field &rho)>;

// Adjoint hydrodynamic evolution: du/dt + div Jadj(u) = 0 with the reversed
// Robin fluxes evaluated at the quasi-potential slope.
Trajectory evolve_adjoint(const ModelSpec &model, const Grid1D &g, const Field &rho0,
                          const Drive &drive, const DvProvider &dv, double T,
                          const SolverOptions &opts = {}, const StepObserver &obs = {});

struct FEquationOptions {
  double tol = 1e-10;
  int max_iter = 80;
  const Field *guess = nullptr; // warm start; tried before the continuation
};

// Auxiliary two-point boundary value problem defining the quasi-potential
// slope: model-specific bulk equation with exchange-rate boundary rows,
// solved by damped Newton with continuation from the stationary profile.
// Requires E = 0. For zero-range models the equation coincides with the
// stationarity problem and is delegated to solve_stationary.
Field solve_F_equation(const ModelSpec &model, const Grid1D &g, const Field &rho,
                       const Drive &drive, const FEquationOptions &opts = {});

} // namespace wc

#endif
