#ifndef WEAKCONTACT_THERMO_HPP
#define WEAKCONTACT_THERMO_HPP

#include <utility>
#include <vector>

#include "weakcontact/pde.hpp"

namespace wc {

// Energy bookkeeping along a driven trajectory. W decomposes exactly into the
// free-energy change plus the two nonnegative dissipation integrals; the
// renormalized work replaces them with their stationary-state-subtracted
// counterparts built on the quasi-potential slope.
struct WorkLedger {
  double W = 0.0;
  double dF = 0.0;
  double bulk_dissipation = 0.0;
  double boundary_dissipation = 0.0;
  double renorm_bulk = 0.0;
  double renorm_boundary = 0.0;
  double excess = 0.0;            // W - dF
  double renormalized = 0.0;      // dF + renorm_bulk + renorm_boundary
  double identity_residual = 0.0; // W - dF - bulk - boundary
  double horizon = 0.0;
};

struct WorkOptions {
  SolverOptions solver;
  // Decomposition assertion scale; applied as-is for the explicit scheme and
  // relaxed by 1e4 for the semi-implicit one (first order in dt). <=0 skips.
  double identity_tol = 1e-6;
  int dv_stride = 10;       // steps between auxiliary-profile refreshes
  double settle_tol = 1e-8; // terminal relaxation cutoff (sup distance)
  double settle_cap = 1000.0;
  double min_horizon = 0.0; // keep integrating past the schedule at least this long
};

// Runs the hydrodynamic evolution over [0,T] and accumulates the exchanged
// energy and its exact decomposition by per-step trapezoid rates.
WorkLedger work_exchanged(const ModelSpec &model, const Grid1D &g, const Field &rho0,
                          const DriveSchedule &schedule, double T,
                          const WorkOptions &opts = {});

// Total dissipation of an eventually-equilibrium protocol, integrated until
// the state settles at the terminal stationary profile (plus a geometric tail
// estimate from the measured late-time contraction).
double excess_work(const ModelSpec &model, const Grid1D &g, const Field &rho0,
                   const DriveSchedule &schedule, const WorkOptions &opts = {});

// Renormalized-work ledger for an eventually-constant protocol with possibly
// nonequilibrium terminal drive; integrates to the settle cutoff.
WorkLedger renormalized_work(const ModelSpec &model, const Grid1D &g, const Field &rho0,
                             const DriveSchedule &schedule, const WorkOptions &opts = {});

// Excess (or renormalized excess) for the schedule slowed by 1/delta, one row
// per delta, starting from the stationary profile of the initial drive.
std::vector<std::pair<double, double>> quasistatic_sweep(const ModelSpec &model,
                                                         const Grid1D &g,
                                                         const DriveSchedule &schedule,
                                                         const std::vector<double> &deltas,
                                                         const WorkOptions &opts = {},
                                                         int threads = 1);

} // namespace wc

#endif
