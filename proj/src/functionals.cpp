#include "weakcontact/functionals.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace wc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::ArrayXd face_E(const Grid1D &g, const Drive &drive) {
  if (!drive.has_E()) return Eigen::ArrayXd::Zero(g.n + 1);
  require_same_grid(g, drive.E, "drive.E");
  return face_value(g, drive.E);
}

// Everything the discrete Hamiltonian needs that depends on rho only.
struct HamWorkspace {
  Grid1D g;
  Eigen::ArrayXd w;    // face weights
  Eigen::ArrayXd gd;   // face gradient of d(rho)
  Eigen::ArrayXd sig;  // compatible face mobility
  Eigen::ArrayXd Ef;   // face external field
  double rho_trL, rho_trR;

  HamWorkspace(const ModelSpec &model, const Grid1D &grid, const Field &rho,
               const Drive &drive)
      : g(grid),
        w(face_weights(grid)),
        gd(face_grad(grid, map_dprim(model, rho))),
        sig(face_mobility(model, grid, rho)),
        Ef(face_E(grid, drive)),
        rho_trL(trace_left(rho)),
        rho_trR(trace_right(rho)) {}
};

double bulk_value(const HamWorkspace &ws, const Eigen::ArrayXd &gF) {
  return (ws.w * (-ws.gd * gF + ws.sig * (ws.Ef + gF) * gF)).sum();
}

// Wall stencils. Trace: cells (0,1) or (n-1,n-2) with weights (1.5,-0.5).
// Extrapolated face gradient at the left wall: cells (0,1,2) * (-2,3,-1)/h.
void add_face_stencil(Eigen::VectorXd &acc, const Grid1D &g, int face, double coef) {
  const double ih = 1.0 / g.h;
  if (face == 0) {
    acc[0] += coef * -2.0 * ih;
    acc[1] += coef * 3.0 * ih;
    acc[2] += coef * -1.0 * ih;
  } else if (face == g.n) {
    acc[g.n - 1] += coef * 2.0 * ih;
    acc[g.n - 2] += coef * -3.0 * ih;
    acc[g.n - 3] += coef * 1.0 * ih;
  } else {
    acc[face] += coef * ih;
    acc[face - 1] += coef * -ih;
  }
}

} // namespace

double bulk_hamiltonian(const ModelSpec &model, const Grid1D &g, const Field &rho,
                        const Field &F, const Drive &drive) {
  require_same_grid(g, rho, "bulk_hamiltonian rho");
  require_same_grid(g, F, "bulk_hamiltonian F");
  HamWorkspace ws(model, g, rho, drive);
  return bulk_value(ws, face_grad(g, F));
}

double boundary_hamiltonian(const ModelSpec &model, const Grid1D &g, const Field &rho,
                            const Field &F, const Drive &drive) {
  require_same_grid(g, rho, "boundary_hamiltonian rho");
  require_same_grid(g, F, "boundary_hamiltonian F");
  const double mL =
      boundary_M(model, drive.lambda_left, trace_left(rho), trace_left(F), Side::Left);
  const double mR =
      boundary_M(model, drive.lambda_right, trace_right(rho), trace_right(F), Side::Right);
  if (std::isinf(mL) || std::isinf(mR))
    throw DomainError("boundary_hamiltonian: momentum trace beyond a KMP pole");
  return drive.kappa_left * mL + drive.kappa_right * mR;
}

double full_hamiltonian(const ModelSpec &model, const Grid1D &g, const Field &rho,
                        const Field &F, const Drive &drive) {
  return bulk_hamiltonian(model, g, rho, F, drive) +
         boundary_hamiltonian(model, g, rho, F, drive);
}

double free_energy_functional(const ModelSpec &model, const Grid1D &g, const Field &rho) {
  require_same_grid(g, rho, "free_energy_functional");
  double s = 0.0;
  for (int i = 0; i < g.n; ++i) s += free_energy(model, rho[i]);
  return s * g.h;
}

CurrentField current_of(const ModelSpec &model, const Grid1D &g, const Field &rho,
                        const Drive &drive) {
  require_same_grid(g, rho, "current_of");
  HamWorkspace ws(model, g, rho, drive);
  CurrentField J;
  J.face = -ws.gd + ws.sig * ws.Ef;
  // Robin fluxes at the walls: J.n = -kappa M'(0) with n the outward normal.
  J.face[0] = drive.kappa_left *
              boundary_M_prime0(model, drive.lambda_left, ws.rho_trL, Side::Left);
  J.face[g.n] = -drive.kappa_right *
                boundary_M_prime0(model, drive.lambda_right, ws.rho_trR, Side::Right);
  return J;
}

Field divergence_rhs(const Grid1D &g, const CurrentField &J) {
  if (J.face.size() != g.n + 1) throw ShapeError("divergence_rhs: face count mismatch");
  Field rhs(g.n);
  for (int i = 0; i < g.n; ++i) rhs[i] = -(J.face[i + 1] - J.face[i]) / g.h;
  return rhs;
}

namespace {

// Raw gradient and Hessian of H(rho, .) at F. The bulk part is quadratic in F,
// the walls add kappa M(trace) terms.
struct HamDerivatives {
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

double ham_value(const ModelSpec &model, const HamWorkspace &ws, const Drive &drive,
                 const Field &F) {
  const Eigen::ArrayXd gF = face_grad(ws.g, F);
  const double mL = boundary_M(model, drive.lambda_left, ws.rho_trL, trace_left(F), Side::Left);
  const double mR =
      boundary_M(model, drive.lambda_right, ws.rho_trR, trace_right(F), Side::Right);
  if (std::isinf(mL) || std::isinf(mR)) return kInf;
  return bulk_value(ws, gF) + drive.kappa_left * mL + drive.kappa_right * mR;
}

HamDerivatives ham_derivatives(const ModelSpec &model, const HamWorkspace &ws,
                               const Drive &drive, const Field &F) {
  const Grid1D &g = ws.g;
  const int n = g.n;
  const Eigen::ArrayXd gF = face_grad(g, F);
  HamDerivatives d;
  d.grad = Eigen::VectorXd::Zero(n);
  d.hess = Eigen::MatrixXd::Zero(n, n);

  for (int j = 0; j <= n; ++j) {
    const double coef = ws.w[j] * (-ws.gd[j] + ws.sig[j] * (ws.Ef[j] + 2.0 * gF[j]));
    add_face_stencil(d.grad, g, j, coef);
    // Hessian: 2 w sig a a^T per face.
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    add_face_stencil(a, g, j, 1.0);
    d.hess.noalias() += (2.0 * ws.w[j] * ws.sig[j]) * a * a.transpose();
  }

  const double pL = trace_left(F), pR = trace_right(F);
  const double m1L = boundary_M_deriv(model, drive.lambda_left, ws.rho_trL, pL, 1, Side::Left);
  const double m2L = boundary_M_deriv(model, drive.lambda_left, ws.rho_trL, pL, 2, Side::Left);
  const double m1R =
      boundary_M_deriv(model, drive.lambda_right, ws.rho_trR, pR, 1, Side::Right);
  const double m2R =
      boundary_M_deriv(model, drive.lambda_right, ws.rho_trR, pR, 2, Side::Right);
  const double cL[2] = {1.5, -0.5}, cR[2] = {1.5, -0.5};
  const int iL[2] = {0, 1}, iR[2] = {n - 1, n - 2};
  for (int a = 0; a < 2; ++a) {
    d.grad[iL[a]] += drive.kappa_left * m1L * cL[a];
    d.grad[iR[a]] += drive.kappa_right * m1R * cR[a];
    for (int b = 0; b < 2; ++b) {
      d.hess(iL[a], iL[b]) += drive.kappa_left * m2L * cL[a] * cL[b];
      d.hess(iR[a], iR[b]) += drive.kappa_right * m2R * cR[a] * cR[b];
    }
  }
  return d;
}

LagrangianResult maximize(const ModelSpec &model, const Grid1D &g, const Field &rho,
                          const Field &G, const Drive &drive, const Field *shift,
                          const LagrangianOptions &opts) {
  require_same_grid(g, rho, "lagrangian rho");
  require_same_grid(g, G, "lagrangian G");
  HamWorkspace ws(model, g, rho, drive);

  // Objective phi(F) = h <G,F> - H(rho, arg),  arg = F or (shift - F).
  auto arg_of = [&](const Field &F) -> Field { return shift ? Field(*shift - F) : F; };
  auto value = [&](const Field &F) -> double {
    const double hv = ham_value(model, ws, drive, arg_of(F));
    if (std::isinf(hv)) return -kInf;
    return g.h * (G * F).sum() - hv;
  };

  Field F = Field::Zero(g.n);
  double phi = value(F);
  if (std::isinf(phi))
    throw DomainError("lagrangian: zero momentum already beyond a KMP pole");

  LagrangianResult res;
  for (int it = 0; it < opts.max_iter; ++it) {
    const HamDerivatives hd = ham_derivatives(model, ws, drive, arg_of(F));
    const double s = shift ? -1.0 : 1.0;
    Eigen::VectorXd grad = g.h * G.matrix() - s * hd.grad;
    const double gnorm = grad.lpNorm<Eigen::Infinity>();
    if (gnorm <= opts.grad_tol) {
      res.value = phi;
      res.argmax = F;
      res.iterations = it;
      return res;
    }
    // Ascent direction: hess of -phi is hd.hess (positive semidefinite + walls).
    Eigen::MatrixXd P = hd.hess;
    P.diagonal().array() += 1e-13 * (1.0 + P.diagonal().array().abs().maxCoeff());
    Eigen::LDLT<Eigen::MatrixXd> ldlt(P);
    Eigen::VectorXd dir = ldlt.solve(grad);
    if (!dir.allFinite()) throw ConvergenceError("lagrangian: singular Newton system");

    double t = 1.0;
    const double slope = grad.dot(dir);
    bool stepped = false;
    while (t > 1e-14) {
      Field Ft = F + t * dir.array();
      const double pt = value(Ft);
      if (pt > phi + 1e-4 * t * slope && std::isfinite(pt)) {
        F = Ft;
        phi = pt;
        stepped = true;
        break;
      }
      t *= 0.5;
    }
    if (!stepped) {
      // At the numerical optimum the Armijo gain falls below roundoff in phi
      // before the gradient reaches grad_tol; accept the iterate then.
      if (gnorm <= 1e-8 * (1.0 + std::abs(phi))) {
        res.value = phi;
        res.argmax = F;
        res.iterations = it;
        return res;
      }
      throw ConvergenceError("lagrangian: line search stalled");
    }
    if (F.abs().maxCoeff() > 1e4 || phi > 1e100)
      throw UnboundedError("lagrangian: objective appears unbounded above");
  }
  throw ConvergenceError("lagrangian: no convergence in max_iter Newton steps");
}

} // namespace

Field hamiltonian_F_gradient(const ModelSpec &model, const Grid1D &g, const Field &rho,
                             const Field &F, const Drive &drive) {
  HamWorkspace ws(model, g, rho, drive);
  return ham_derivatives(model, ws, drive, F).grad.array() / g.h;
}

LagrangianResult lagrangian(const ModelSpec &model, const Grid1D &g, const Field &rho,
                            const Field &G, const Drive &drive,
                            const LagrangianOptions &opts) {
  return maximize(model, g, rho, G, drive, nullptr, opts);
}

LagrangianResult lagrangian_adjoint(const ModelSpec &model, const Grid1D &g,
                                    const Field &rho, const Field &G, const Field &dV,
                                    const Drive &drive, const LagrangianOptions &opts) {
  require_same_grid(g, dV, "lagrangian_adjoint dV");
  return maximize(model, g, rho, G, drive, &dV, opts);
}

double action_of_samples(const ModelSpec &model, const Grid1D &g,
                         const std::vector<double> &times, const std::vector<Field> &frames,
                         const Drive &drive, const LagrangianOptions &opts) {
  const size_t K = times.size();
  if (K < 3 || frames.size() != K) throw ShapeError("action: need >=3 uniform samples");
  const double dt = times[1] - times[0];
  for (size_t k = 1; k < K; ++k)
    if (std::abs(times[k] - times[k - 1] - dt) > 1e-9 * (std::abs(dt) + 1e-12))
      throw ShapeError("action: nonuniform time samples");

  double acc = 0.0;
  for (size_t k = 0; k < K; ++k) {
    Field du;
    if (k == 0)
      du = (-3.0 * frames[0] + 4.0 * frames[1] - frames[2]) / (2.0 * dt);
    else if (k == K - 1)
      du = (3.0 * frames[K - 1] - 4.0 * frames[K - 2] + frames[K - 3]) / (2.0 * dt);
    else
      du = (frames[k + 1] - frames[k - 1]) / (2.0 * dt);
    const double L = lagrangian(model, g, frames[k], du, drive, opts).value;
    acc += (k == 0 || k == K - 1 ? 0.5 : 1.0) * dt * L;
  }
  return acc;
}

CurrentDecomposition current_decomposition(const ModelSpec &model, const Grid1D &g,
                                           const Field &rho, const Drive &drive,
                                           const Field &F_aux) {
  require_same_grid(g, rho, "current_decomposition rho");
  require_same_grid(g, F_aux, "current_decomposition F_aux");
  const Eigen::ArrayXd gd = face_grad(g, map_dprim(model, rho));
  const Eigen::ArrayXd gfF = face_grad(g, map_fprime(model, F_aux));
  const Eigen::ArrayXd sig = face_mobility(model, g, rho);
  CurrentDecomposition out;
  out.J = current_of(model, g, rho, drive);
  // J_s = -sigma grad dV = -grad d(rho) + sigma_hat grad f'(F).
  out.Js.face = -gd + sig * gfF;
  out.Ja.face = out.J.face - out.Js.face;
  out.Jadj.face = -out.J.face + 2.0 * out.Js.face;
  // Wall entries of the adjoint current carry the flux its dynamics imposes:
  // Jadj . n = +kappa M'(dV trace), with the trace argument composed from the
  // traces of rho and F_aux.
  const double rtL = trace_left(rho), rtR = trace_right(rho);
  const double pL = free_energy_prime(model, rtL) - free_energy_prime(model, trace_left(F_aux));
  const double pR =
      free_energy_prime(model, rtR) - free_energy_prime(model, trace_right(F_aux));
  out.Jadj.face[0] =
      -drive.kappa_left * boundary_M_deriv(model, drive.lambda_left, rtL, pL, 1, Side::Left);
  out.Jadj.face[g.n] =
      drive.kappa_right * boundary_M_deriv(model, drive.lambda_right, rtR, pR, 1, Side::Right);
  return out;
}

OrthogonalityResiduals orthogonality_residuals(const ModelSpec &model, const Grid1D &g,
                                               const Field &rho, const Drive &drive,
                                               const Field &F_aux) {
  require_same_grid(g, rho, "orthogonality rho");
  require_same_grid(g, F_aux, "orthogonality F_aux");
  const Eigen::ArrayXd gd = face_grad(g, map_dprim(model, rho));
  const Eigen::ArrayXd gfF = face_grad(g, map_fprime(model, F_aux));
  const Eigen::ArrayXd sig = face_mobility(model, g, rho);
  const Eigen::ArrayXd w = face_weights(g);
  const Eigen::ArrayXd Js = -gd + sig * gfF;
  // Field-form J_a / sigma = -grad f'(F); the walls use the same form.
  const double integral = (w * (-gfF) * Js).sum();

  OrthogonalityResiduals r;
  r.r15 = integral - boundary_hamiltonian_aux(model, g, rho, F_aux, drive);

  const double rtL = trace_left(rho), rtR = trace_right(rho);
  const double ftL = trace_left(F_aux), ftR = trace_right(F_aux);
  const double JanL = sig[0] * gfF[0];   // J_a . n at x=0 (n = -1)
  const double JanR = -sig[g.n] * gfF[g.n];
  const double bd =
      (transport(model, rtL).d - transport(model, ftL).d) / transport(model, rtL).sigma * JanL +
      (transport(model, rtR).d - transport(model, ftR).d) / transport(model, rtR).sigma * JanR;
  r.r16 = integral + bd;
  return r;
}

double boundary_hamiltonian_aux(const ModelSpec &model, const Grid1D &g, const Field &rho,
                                const Field &F_aux, const Drive &drive) {
  require_same_grid(g, rho, "boundary_hamiltonian_aux rho");
  require_same_grid(g, F_aux, "boundary_hamiltonian_aux F_aux");
  const double rtL = trace_left(rho), rtR = trace_right(rho);
  const double pL = free_energy_prime(model, rtL) - free_energy_prime(model, trace_left(F_aux));
  const double pR =
      free_energy_prime(model, rtR) - free_energy_prime(model, trace_right(F_aux));
  return drive.kappa_left * boundary_M(model, drive.lambda_left, rtL, pL, Side::Left) +
         drive.kappa_right * boundary_M(model, drive.lambda_right, rtR, pR, Side::Right);
}

double hamiltonian_at_dv(const ModelSpec &model, const Grid1D &g, const Field &rho,
                         const Field &F_aux, const Drive &drive) {
  const Field dV = map_fprime(model, rho) - map_fprime(model, F_aux);
  return bulk_hamiltonian(model, g, rho, dV, drive) +
         boundary_hamiltonian_aux(model, g, rho, F_aux, drive);
}

} // namespace wc
