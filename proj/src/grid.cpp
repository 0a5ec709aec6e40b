#include "weakcontact/grid.hpp"

#include <cmath>

namespace wc {

Eigen::ArrayXd face_grad(const Grid1D &g, const Field &u) {
  require_same_grid(g, u, "face_grad");
  Eigen::ArrayXd grad(g.n + 1);
  for (int j = 1; j < g.n; ++j) grad[j] = (u[j] - u[j - 1]) / g.h;
  grad[0] = 2.0 * grad[1] - grad[2];
  grad[g.n] = 2.0 * grad[g.n - 1] - grad[g.n - 2];
  return grad;
}

Eigen::ArrayXd face_value(const Grid1D &g, const Field &u) {
  require_same_grid(g, u, "face_value");
  Eigen::ArrayXd v(g.n + 1);
  for (int j = 1; j < g.n; ++j) v[j] = 0.5 * (u[j] + u[j - 1]);
  v[0] = trace_left(u);
  v[g.n] = trace_right(u);
  return v;
}

Eigen::ArrayXd face_weights(const Grid1D &g) {
  Eigen::ArrayXd w = Eigen::ArrayXd::Constant(g.n + 1, g.h);
  w[0] = w[g.n] = 0.5 * g.h;
  return w;
}

namespace {

double clamp_interior(const StateInterval &iv, double rho) {
  const double lo = std::isfinite(iv.lo) ? iv.lo : -1e300;
  const double hi = std::isfinite(iv.hi) ? iv.hi : 1e300;
  const double eps = 1e-12 * (1.0 + std::abs(lo) + std::min(std::abs(hi), 1.0));
  return std::min(std::max(rho, lo + eps), hi - eps);
}

} // namespace

Eigen::ArrayXd face_mobility(const ModelSpec &model, const Grid1D &g, const Field &rho) {
  require_same_grid(g, rho, "face_mobility");
  const StateInterval iv = state_interval(model);
  const Field dd = map_dprim(model, rho);
  const Field fp = map_fprime(model, rho);
  Eigen::ArrayXd sig(g.n + 1);
  auto fallback = [&](double r) {
    return transport(model, clamp_interior(iv, r)).sigma;
  };
  for (int j = 1; j < g.n; ++j) {
    const double num = dd[j] - dd[j - 1];
    const double den = fp[j] - fp[j - 1];
    if (std::abs(den) > 1e-12 * (1.0 + std::abs(fp[j]) + std::abs(fp[j - 1])) &&
        num / den > 0.0)
      sig[j] = num / den;
    else
      sig[j] = fallback(0.5 * (rho[j] + rho[j - 1]));
  }
  // Wall faces: ratio of the extrapolated gradients, so that
  // sigma_hat * extrapolated grad f'(rho) = extrapolated grad d(rho).
  auto wall = [&](int a, int b, int c, double tr) {
    // gradient extrapolation 2*(v[b]-v[a]) - (v[c]-v[b]) for faces built from
    // cells a,b,c in wall-outward order
    const double num = 2.0 * (dd[b] - dd[a]) - (dd[c] - dd[b]);
    const double den = 2.0 * (fp[b] - fp[a]) - (fp[c] - fp[b]);
    if (std::abs(den) > 1e-12 * (1.0 + std::abs(fp[a]) + std::abs(fp[b])) && num / den > 0.0)
      return num / den;
    return fallback(tr);
  };
  const int n = g.n;
  sig[0] = wall(0, 1, 2, trace_left(rho));
  sig[n] = wall(n - 1, n - 2, n - 3, trace_right(rho));
  return sig;
}

Field map_fprime(const ModelSpec &model, const Field &rho) {
  Field out(rho.size());
  for (Eigen::Index i = 0; i < rho.size(); ++i) out[i] = free_energy_prime(model, rho[i]);
  return out;
}

Field map_dprim(const ModelSpec &model, const Field &rho) {
  Field out(rho.size());
  for (Eigen::Index i = 0; i < rho.size(); ++i) out[i] = transport(model, rho[i]).d;
  return out;
}

} // namespace wc
