#ifndef WEAKCONTACT_GRID_HPP
#define WEAKCONTACT_GRID_HPP

#include <Eigen/Dense>

#include "weakcontact/errors.hpp"
#include "weakcontact/models.hpp"

namespace wc {

using Field = Eigen::ArrayXd; // per-cell values

struct Grid1D {
  int n = 0;      // number of cells on (0,1)
  double h = 0.0; // cell width 1/n

  Grid1D() = default;
  explicit Grid1D(int n_cells) : n(n_cells), h(1.0 / n_cells) {
    if (n_cells < 8) throw ConfigError("grid needs at least 8 cells");
  }
  double x(int i) const { return (i + 0.5) * h; }
  Field centers() const {
    Field v(n);
    for (int i = 0; i < n; ++i) v[i] = x(i);
    return v;
  }
};

// Time-frozen driving: reservoir potentials, per-cell field E, couplings.
struct Drive {
  double lambda_left = 0.0;
  double lambda_right = 0.0;
  Field E; // per-cell; empty means zero
  double kappa_left = 1.0;
  double kappa_right = 1.0;

  bool has_E() const { return E.size() > 0; }
};

// Face-indexed values J_j at x=j*h, j=0..n (two boundary faces included).
struct CurrentField {
  Eigen::ArrayXd face;
};

inline void require_same_grid(const Grid1D &g, const Field &a, const char *what) {
  if (a.size() != g.n) throw ShapeError(std::string(what) + ": field/grid size mismatch");
}

// Second-order boundary traces by linear extrapolation from the two cells
// nearest the wall.
inline double trace_left(const Field &u) { return 1.5 * u[0] - 0.5 * u[1]; }
inline double trace_right(const Field &u) {
  const auto n = u.size();
  return 1.5 * u[n - 1] - 0.5 * u[n - 2];
}

// Face gradients of a per-cell field: centered differences on interior faces,
// linear extrapolation of those gradients at the two boundary faces.
Eigen::ArrayXd face_grad(const Grid1D &g, const Field &u);

// Face values of the per-cell field E (arithmetic means; traces at the walls).
Eigen::ArrayXd face_value(const Grid1D &g, const Field &u);

// Trapezoid quadrature weights over faces: h/2 at the walls, h inside.
Eigen::ArrayXd face_weights(const Grid1D &g);

// Compatible face mobility sigma_hat = grad d(rho) / grad f'(rho), which makes
// sigma_hat * grad f'(rho) reproduce grad d(rho) = D grad rho exactly on the
// grid. Falls back to sigma at the face-mean density where f' is locally flat.
Eigen::ArrayXd face_mobility(const ModelSpec &model, const Grid1D &g, const Field &rho);

// Elementwise lifts of the scalar model functions.
Field map_fprime(const ModelSpec &model, const Field &rho);
Field map_dprim(const ModelSpec &model, const Field &rho);

} // namespace wc

#endif
