#ifndef WEAKCONTACT_QUASIPOTENTIAL_HPP
#define WEAKCONTACT_QUASIPOTENTIAL_HPP

#include "weakcontact/pde.hpp"

namespace wc {

struct QuasiPotentialEval {
  Field dV;                 // per-cell variational derivative
  double V = 0.0;           // line-integrated value (when requested)
  double hj_residual = 0.0; // |H(rho, dV)| at the evaluation point
  Field F_aux;              // auxiliary profile behind dV
};

// Equilibrium form f'(rho) - f'(rhobar); requires a reversible drive whose
// stationary profile carries zero current.
Field dV_equilibrium(const ModelSpec &model, const Grid1D &g, const Field &rho,
                     const Drive &drive, double tol = 1e-8);

// General form via the auxiliary two-point boundary value problem. Requires
// E = 0 and one of the reversible models.
QuasiPotentialEval dV_nonequilibrium(const ModelSpec &model, const Grid1D &g,
                                     const Field &rho, const Drive &drive);

// V(gamma) by Gauss-Legendre integration of <dV(rho_s), gamma - rhobar> along
// the straight segment rho_s = rhobar + s (gamma - rhobar); the node solves
// are warm-started from each other.
QuasiPotentialEval V_line_integral(const ModelSpec &model, const Grid1D &g,
                                   const Field &gamma, const Drive &drive,
                                   int n_path = 16);

// Residual of the time-reversal relation between the adjoint and forward
// Lagrangians at velocity gamma_rate.
double time_reversal_check(const ModelSpec &model, const Grid1D &g, const Field &rho,
                           const Field &gamma_rate, const Drive &drive);

// Nodes and weights of n-point Gauss-Legendre quadrature on [0,1].
void gauss_legendre_01(int n, std::vector<double> &nodes, std::vector<double> &weights);

} // namespace wc

#endif
