#include "weakcontact/models.hpp"

#include <algorithm>
#include <cmath>

namespace wc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kZrMaxTerms = 200;
constexpr double kZrTailTol = 1e-14;

double zr_g_of(const ModelSpec &m, long k) {
  // Tabulated rates; k beyond the table continues at the last entry.
  if (k <= 0) return 0.0;
  if (m.zr_g.empty()) throw ConfigError("tabulated zero-range model without a rate table");
  if (k <= (long)m.zr_g.size()) return m.zr_g[k - 1];
  return m.zr_g.back();
}

// Truncated sums of the grand-canonical series for a tabulated rate g:
//   S_m = sum_k k^m phi^k / (g(1)...g(k)),  m = 0,1,2.
struct ZrSums {
  double s0, s1, s2;
};

ZrSums zr_series(const ModelSpec &m, double lambda) {
  const double phi = std::exp(lambda);
  double term = 1.0, s0 = 1.0, s1 = 0.0, s2 = 0.0;
  for (int k = 1; k <= kZrMaxTerms; ++k) {
    term *= phi / zr_g_of(m, k);
    s0 += term;
    s1 += k * term;
    s2 += double(k) * k * term;
    const double ratio = phi / zr_g_of(m, k + 1);
    if (ratio < 1.0) {
      // Geometric tail bound on the remaining mass.
      const double tail = term * ratio / (1.0 - ratio);
      if (tail <= kZrTailTol * s0 && k >= 4) return {s0, s1, s2};
    }
  }
  throw ConvergenceError("zero-range partition series did not converge in 200 terms "
                         "(lambda too close to or beyond the convergence abscissa)");
}

void require_lambda(const ModelSpec &m, double lambda) {
  if (!std::isfinite(lambda)) throw DomainError("chemical potential must be finite");
  if (m.kind == ModelKind::KMP && lambda >= 0.0)
    throw DomainError("KMP chemical potential must be negative");
  if (m.kind == ModelKind::ZeroRange && m.zr_rate == ZrRateKind::Constant && lambda >= 0.0)
    throw DomainError("constant-rate zero-range requires lambda < 0");
  if (m.kind == ModelKind::ZeroRange && m.zr_rate == ZrRateKind::Tabulated)
    zr_series(m, lambda); // throws past the convergence abscissa
}

void require_rho(const ModelSpec &m, double rho) {
  if (!state_interval(m).contains_strictly(rho))
    throw DomainError("density " + std::to_string(rho) + " outside the state interval of " +
                      model_name(m));
}

double zr_phi(const ModelSpec &m, double rho); // fugacity e^{Xi(rho)}

// Creation/annihilation coefficients of the exponential-family boundary
// functional M(p) = C (e^p - 1) + A (e^{-p} - 1).
struct ExpFamily {
  double C, A;
};

ExpFamily exp_family(const ModelSpec &m, double lambda, double rho, Side side) {
  switch (m.kind) {
    case ModelKind::SEP: {
      require_lambda(m, lambda);
      require_rho(m, rho);
      const double R = mean_R(m, lambda);
      return {(1.0 - rho) * R, rho * (1.0 - R)};
    }
    case ModelKind::ZeroRange: {
      require_lambda(m, lambda);
      require_rho(m, rho);
      return {std::exp(lambda), zr_phi(m, rho)};
    }
    case ModelKind::NonRevExclusion: {
      require_rho(m, rho);
      double plus, minus;
      nonrev_exchange_rates(m.nonrev, side, rho, plus, minus);
      return {(1.0 - rho) * plus, rho * minus};
    }
    default:
      throw ConfigError("exp_family: not an exponential-family boundary model");
  }
}

double zr_phi(const ModelSpec &m, double rho) {
  switch (m.zr_rate) {
    case ZrRateKind::Linear: return rho;
    case ZrRateKind::Constant: return rho / (1.0 + rho);
    case ZrRateKind::Tabulated: return std::exp(xi_inverse(m, rho));
  }
  throw ConfigError("unknown zero-range rate kind");
}

} // namespace

NonRevTable example_nonrev_table() {
  // Window 2. Flip rate of the site next to the wall grows when both window
  // sites are occupied; the second site flips at unit rate. The resulting
  // creation/annihilation balance shifts with the density, so no single
  // reservoir potential reproduces it.
  NonRevTable t;
  t.window = 2;
  t.left.assign(2, std::vector<double>(4, 1.0));
  for (int mask = 0; mask < 4; ++mask)
    t.left[0][mask] = 1.0 + 3.0 * ((mask & 1) && (mask & 2));
  t.right = t.left;
  return t;
}

void validate_model(const ModelSpec &m) {
  switch (m.kind) {
    case ModelKind::SEP:
    case ModelKind::KMP:
      return;
    case ModelKind::ZeroRange:
      if (m.zr_rate == ZrRateKind::Tabulated) {
        if (m.zr_g.empty()) throw ConfigError("tabulated zero-range needs g(1..K)");
        for (double g : m.zr_g)
          if (!(g > 0.0)) throw ConfigError("tabulated zero-range rates must be positive");
      }
      return;
    case ModelKind::NonRevExclusion: {
      const NonRevTable &t = m.nonrev;
      if (t.window < 1 || t.window > 12)
        throw ConfigError("non-reversible window must be in [1,12]");
      const size_t nmask = size_t(1) << t.window;
      for (const auto *tab : {&t.left, &t.right}) {
        if (tab->size() != size_t(t.window)) throw ConfigError("rate table size mismatch");
        bool any_positive = false;
        for (const auto &row : *tab) {
          if (row.size() != nmask) throw ConfigError("rate table row size mismatch");
          for (double c : row) {
            if (!(c >= 0.0)) throw ConfigError("rates must be nonnegative");
            any_positive |= c > 0.0;
          }
        }
        if (!any_positive) throw ConfigError("each boundary needs a positive rate");
      }
      return;
    }
  }
  throw ConfigError("unknown model kind");
}

StateInterval state_interval(const ModelSpec &m) {
  switch (m.kind) {
    case ModelKind::SEP:
    case ModelKind::NonRevExclusion:
      return {0.0, 1.0, false, false};
    case ModelKind::ZeroRange:
      return {0.0, kInf, false, true};
    case ModelKind::KMP:
      return {0.0, kInf, true, true};
  }
  throw ConfigError("unknown model kind");
}

double partition_Z(const ModelSpec &m, double lambda) {
  require_lambda(m, lambda);
  switch (m.kind) {
    case ModelKind::SEP:
    case ModelKind::NonRevExclusion:
      return 1.0 + std::exp(lambda);
    case ModelKind::KMP:
      return -1.0 / lambda;
    case ModelKind::ZeroRange:
      switch (m.zr_rate) {
        case ZrRateKind::Linear: return std::exp(std::exp(lambda));
        case ZrRateKind::Constant: return 1.0 / (1.0 - std::exp(lambda));
        case ZrRateKind::Tabulated: return zr_series(m, lambda).s0;
      }
  }
  throw ConfigError("unknown model kind");
}

double mean_R(const ModelSpec &m, double lambda) {
  require_lambda(m, lambda);
  const double phi = std::exp(lambda);
  switch (m.kind) {
    case ModelKind::SEP:
    case ModelKind::NonRevExclusion:
      return phi / (1.0 + phi);
    case ModelKind::KMP:
      return -1.0 / lambda;
    case ModelKind::ZeroRange:
      switch (m.zr_rate) {
        case ZrRateKind::Linear: return phi;
        case ZrRateKind::Constant: return phi / (1.0 - phi);
        case ZrRateKind::Tabulated: {
          const ZrSums s = zr_series(m, lambda);
          return s.s1 / s.s0;
        }
      }
  }
  throw ConfigError("unknown model kind");
}

double mean_R_prime(const ModelSpec &m, double lambda) {
  require_lambda(m, lambda);
  const double phi = std::exp(lambda);
  switch (m.kind) {
    case ModelKind::SEP:
    case ModelKind::NonRevExclusion:
      return phi / ((1.0 + phi) * (1.0 + phi));
    case ModelKind::KMP:
      return 1.0 / (lambda * lambda);
    case ModelKind::ZeroRange:
      switch (m.zr_rate) {
        case ZrRateKind::Linear: return phi;
        case ZrRateKind::Constant: return phi / ((1.0 - phi) * (1.0 - phi));
        case ZrRateKind::Tabulated: {
          const ZrSums s = zr_series(m, lambda);
          const double mean = s.s1 / s.s0;
          return s.s2 / s.s0 - mean * mean;
        }
      }
  }
  throw ConfigError("unknown model kind");
}

double xi_inverse(const ModelSpec &m, double rho) {
  require_rho(m, rho);
  switch (m.kind) {
    case ModelKind::SEP:
    case ModelKind::NonRevExclusion:
      return std::log(rho / (1.0 - rho));
    case ModelKind::KMP:
      return -1.0 / rho;
    case ModelKind::ZeroRange:
      switch (m.zr_rate) {
        case ZrRateKind::Linear: return std::log(rho);
        case ZrRateKind::Constant: return std::log(rho / (1.0 + rho));
        case ZrRateKind::Tabulated: {
          // Bracket, then bisection with Newton acceleration on monotone R.
          double lo = std::log(rho * zr_g_of(m, 1)) - 2.0;
          while (mean_R(m, lo) > rho) lo -= 4.0;
          // Grow hi; when the series stops converging, back off toward the
          // convergence abscissa instead.
          double hi = lo, step = 4.0;
          while (true) {
            try {
              if (mean_R(m, hi) > rho) break;
              lo = hi;
              hi += step;
            } catch (const ConvergenceError &) {
              step *= 0.5;
              hi -= step;
              if (step < 1e-12)
                throw ConvergenceError("xi_inverse: density not reachable below the convergence abscissa");
            }
          }
          double x = 0.5 * (lo + hi);
          for (int it = 0; it < 200; ++it) {
            const double r = mean_R(m, x) - rho;
            if (std::abs(r) <= 1e-13 * (1.0 + rho)) return x;
            (r > 0.0 ? hi : lo) = x;
            const double step = r / mean_R_prime(m, x);
            double xn = x - step;
            if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
            x = xn;
          }
          throw ConvergenceError("xi_inverse: no convergence");
        }
      }
  }
  throw ConfigError("unknown model kind");
}

double free_energy(const ModelSpec &m, double rho) {
  const double xi = xi_inverse(m, rho);
  return xi * rho - std::log(partition_Z(m, xi));
}

double free_energy_prime(const ModelSpec &m, double rho) { return xi_inverse(m, rho); }

double free_energy_second(const ModelSpec &m, double rho) {
  switch (m.kind) {
    case ModelKind::SEP:
    case ModelKind::NonRevExclusion:
      require_rho(m, rho);
      return 1.0 / (rho * (1.0 - rho));
    case ModelKind::KMP:
      require_rho(m, rho);
      return 1.0 / (rho * rho);
    case ModelKind::ZeroRange:
      switch (m.zr_rate) {
        case ZrRateKind::Linear:
          require_rho(m, rho);
          return 1.0 / rho;
        case ZrRateKind::Constant:
          require_rho(m, rho);
          return 1.0 / (rho * (1.0 + rho));
        case ZrRateKind::Tabulated:
          return 1.0 / mean_R_prime(m, xi_inverse(m, rho));
      }
  }
  throw ConfigError("unknown model kind");
}

Transport transport(const ModelSpec &m, double rho) {
  require_rho(m, rho);
  switch (m.kind) {
    case ModelKind::SEP:
    case ModelKind::NonRevExclusion:
      return {1.0, rho * (1.0 - rho), rho};
    case ModelKind::KMP:
      return {1.0, rho * rho, rho};
    case ModelKind::ZeroRange: {
      const double phi = zr_phi(m, rho);
      // D = Phi' = Phi * f'' by the chain rule through Xi.
      return {phi * free_energy_second(m, rho), phi, phi};
    }
  }
  throw ConfigError("unknown model kind");
}

double sigma_ratio(const ModelSpec &m, double rho, double F) {
  switch (m.kind) {
    case ModelKind::SEP:
    case ModelKind::NonRevExclusion:
      return 1.0 - rho - F;
    case ModelKind::KMP:
      return rho + F;
    case ModelKind::ZeroRange:
      return 1.0; // sigma = d = Phi
  }
  throw ConfigError("unknown model kind");
}

double boundary_M_deriv(const ModelSpec &m, double lambda, double rho, double p,
                        int order, Side side) {
  if (order < 0 || order > 2) throw ConfigError("boundary_M_deriv: order must be 0..2");
  if (m.kind == ModelKind::KMP) {
    require_lambda(m, lambda);
    require_rho(m, rho);
    const double tau = -1.0 / lambda;
    if (p >= 1.0 / tau || p <= -1.0 / rho) return kInf;
    const double a = tau / (rho + tau), b = rho / (rho + tau);
    const double u = 1.0 - tau * p, v = 1.0 + rho * p;
    switch (order) {
      case 0: return a * (1.0 / u - 1.0) + b * (1.0 / v - 1.0);
      case 1: return a * tau / (u * u) - b * rho / (v * v);
      default: return 2.0 * a * tau * tau / (u * u * u) + 2.0 * b * rho * rho / (v * v * v);
    }
  }
  const ExpFamily e = exp_family(m, lambda, rho, side);
  const double ep = std::exp(p), em = std::exp(-p);
  switch (order) {
    case 0: return e.C * (ep - 1.0) + e.A * (em - 1.0);
    case 1: return e.C * ep - e.A * em;
    default: return e.C * ep + e.A * em;
  }
}

double boundary_M(const ModelSpec &m, double lambda, double rho, double p, Side side) {
  return boundary_M_deriv(m, lambda, rho, p, 0, side);
}

double boundary_M_prime0(const ModelSpec &m, double lambda, double rho, Side side) {
  if (m.kind == ModelKind::KMP) {
    require_lambda(m, lambda);
    require_rho(m, rho);
    return -1.0 / lambda - rho; // tau - rho
  }
  const ExpFamily e = exp_family(m, lambda, rho, side);
  return e.C - e.A;
}

double boundary_A(const ModelSpec &m, double lambda, double rho, double p,
                  double kappa, Side side) {
  if (!(kappa > 0.0)) throw ConfigError("coupling strength kappa must be positive");
  const double M = boundary_M(m, lambda, rho, p, side);
  if (std::isinf(M)) return kInf;
  return kappa * (M - p * boundary_M_prime0(m, lambda, rho, side));
}

double boundary_A_bound(const ModelSpec &m, double lambda, double rho, Side side) {
  double plo = -1.0, phi = 1.0;
  if (m.kind == ModelKind::KMP) {
    const double tau = mean_R(m, lambda);
    plo = std::max(plo, -1.0 / rho * 0.999);
    phi = std::min(phi, 1.0 / tau * 0.999);
  }
  double c0 = 0.0;
  const int samples = 2001;
  for (int i = 0; i < samples; ++i) {
    const double p = plo + (phi - plo) * i / (samples - 1);
    if (std::abs(p) < 1e-6) continue;
    c0 = std::max(c0, boundary_A(m, lambda, rho, p, 1.0, side) / (p * p));
  }
  return c0;
}

void nonrev_exchange_rates(const NonRevTable &t, Side side, double rho,
                           double &plus, double &minus) {
  const auto &tab = (side == Side::Left) ? t.left : t.right;
  const int ell = t.window;
  const int nmask = 1 << ell;
  plus = minus = 0.0;
  for (int mask = 0; mask < nmask; ++mask) {
    double w = 1.0;
    for (int i = 0; i < ell; ++i) w *= (mask >> i & 1) ? rho : 1.0 - rho;
    for (int j = 0; j < ell; ++j) {
      plus += w * tab[j][mask & ~(1 << j)];
      minus += w * tab[j][mask | (1 << j)];
    }
  }
}

std::string model_name(const ModelSpec &m) {
  switch (m.kind) {
    case ModelKind::SEP: return "SEP";
    case ModelKind::KMP: return "KMP";
    case ModelKind::NonRevExclusion: return "NonRevExclusion";
    case ModelKind::ZeroRange:
      switch (m.zr_rate) {
        case ZrRateKind::Linear: return "ZeroRange(Linear)";
        case ZrRateKind::Constant: return "ZeroRange(Constant)";
        case ZrRateKind::Tabulated: return "ZeroRange(Tabulated)";
      }
  }
  return "unknown";
}

} // namespace wc
