#ifndef WEAKCONTACT_FUNCTIONALS_HPP
#define WEAKCONTACT_FUNCTIONALS_HPP

#include <vector>

#include "weakcontact/grid.hpp"

namespace wc {

// Hamiltonian, free-energy and current functionals on the 1D grid, plus the
// Lagrangian as a concave maximization over the momentum field F.

double bulk_hamiltonian(const ModelSpec &model, const Grid1D &g, const Field &rho,
                        const Field &F, const Drive &drive);
double boundary_hamiltonian(const ModelSpec &model, const Grid1D &g, const Field &rho,
                            const Field &F, const Drive &drive);
double full_hamiltonian(const ModelSpec &model, const Grid1D &g, const Field &rho,
                        const Field &F, const Drive &drive);

double free_energy_functional(const ModelSpec &model, const Grid1D &g, const Field &rho);

// Face currents J = -grad d(rho) + sigma_hat E; the two wall faces carry the
// Robin flux fixed by the boundary exchange rate M'(0) at the density trace.
CurrentField current_of(const ModelSpec &model, const Grid1D &g, const Field &rho,
                        const Drive &drive);

// Conservative divergence: du_i/dt = -(J_{i+1}-J_i)/h.
Field divergence_rhs(const Grid1D &g, const CurrentField &J);

// Gradient of the discrete Hamiltonian in F, divided by h. For F=0 this is
// the grid's own hydrodynamic vector field (it reproduces divergence_rhs of
// current_of up to the O(h^2) weak-form boundary bookkeeping).
Field hamiltonian_F_gradient(const ModelSpec &model, const Grid1D &g, const Field &rho,
                             const Field &F, const Drive &drive);

struct LagrangianOptions {
  double grad_tol = 1e-10;
  int max_iter = 200;
};

struct LagrangianResult {
  double value = 0.0;
  Field argmax; // maximizing momentum field
  int iterations = 0;
};

// L(rho,G) = sup_F { <G,F> - H(rho,F) } by damped Newton, started at F=0.
LagrangianResult lagrangian(const ModelSpec &model, const Grid1D &g, const Field &rho,
                            const Field &G, const Drive &drive,
                            const LagrangianOptions &opts = {});

// Time-reversed cost sup_F { <G,F> - H(rho, dV - F) }, used by the
// time-reversal identity check.
LagrangianResult lagrangian_adjoint(const ModelSpec &model, const Grid1D &g,
                                    const Field &rho, const Field &G, const Field &dV,
                                    const Drive &drive,
                                    const LagrangianOptions &opts = {});

// Action of a sampled trajectory: trapezoid in time of L(u, du/dt) with
// second-order time differences (one-sided at the ends).
double action_of_samples(const ModelSpec &model, const Grid1D &g,
                         const std::vector<double> &times, const std::vector<Field> &frames,
                         const Drive &drive, const LagrangianOptions &opts = {});

struct CurrentDecomposition {
  CurrentField J;     // physical current
  CurrentField Js;    // symmetric part -sigma grad dV
  CurrentField Ja;    // J - Js
  CurrentField Jadj;  // adjoint current: -J + 2 Js inside, adjoint Robin flux at walls
};

// dV is represented through the auxiliary profile F_aux: dV = f'(rho)-f'(F_aux).
// In equilibrium F_aux is the constant stationary profile.
CurrentDecomposition current_decomposition(const ModelSpec &model, const Grid1D &g,
                                           const Field &rho, const Drive &drive,
                                           const Field &F_aux);

// Boundary Hamiltonian evaluated at the quasi-potential slope, with the wall
// argument formed from the traces of rho and F_aux (used by the orthogonality
// identities and the renormalized-work boundary term).
double boundary_hamiltonian_aux(const ModelSpec &model, const Grid1D &g, const Field &rho,
                                const Field &F_aux, const Drive &drive);

// Full Hamiltonian at dV = f'(rho)-f'(F_aux) (Hamilton-Jacobi residual).
double hamiltonian_at_dv(const ModelSpec &model, const Grid1D &g, const Field &rho,
                         const Field &F_aux, const Drive &drive);

struct OrthogonalityResiduals {
  double r15 = 0.0; // integral J_a sigma^-1 J_s minus the boundary term of H at dV
  double r16 = 0.0; // same integral plus the mobility-weighted boundary flux of J_a
};

// Discrete residuals of the two current-orthogonality identities; both vanish
// as O(h^2) when F_aux solves the stationary auxiliary equation.
OrthogonalityResiduals orthogonality_residuals(const ModelSpec &model, const Grid1D &g,
                                               const Field &rho, const Drive &drive,
                                               const Field &F_aux);

} // namespace wc

#endif
