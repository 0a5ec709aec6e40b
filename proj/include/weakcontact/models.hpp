#ifndef WEAKCONTACT_MODELS_HPP
#define WEAKCONTACT_MODELS_HPP

#include <limits>
#include <string>
#include <vector>

#include "weakcontact/errors.hpp"

namespace wc {

// The four lattice-gas models and their single-site thermodynamics:
// partition function Z, mean density R, inverse map Xi, free energy f,
// transport coefficients (D, sigma, d) and the boundary exchange
// functional M with its Taylor remainder A.

enum class ModelKind { SEP, ZeroRange, KMP, NonRevExclusion };
enum class ZrRateKind { Linear, Constant, Tabulated };
enum class Side { Left, Right };

// Boundary rate tables for the non-reversible exclusion model. The window
// covers the `window` sites nearest to the wall; rates[j][mask] is the flip
// rate of window site j when the window configuration is `mask`
// (bit i of mask = occupation of the (i+1)-th site from the wall).
struct NonRevTable {
  int window = 0;
  std::vector<std::vector<double>> left;  // [window][1<<window]
  std::vector<std::vector<double>> right; // same layout, window counted from the right wall
};

struct ModelSpec {
  ModelKind kind = ModelKind::SEP;
  ZrRateKind zr_rate = ZrRateKind::Linear;
  std::vector<double> zr_g; // Tabulated only: g(1..K), g(k)=g(K) for k>K
  NonRevTable nonrev;

  static ModelSpec sep() { return ModelSpec{ModelKind::SEP, ZrRateKind::Linear, {}, {}}; }
  static ModelSpec kmp() { return ModelSpec{ModelKind::KMP, ZrRateKind::Linear, {}, {}}; }
  static ModelSpec zero_range(ZrRateKind r, std::vector<double> g = {}) {
    return ModelSpec{ModelKind::ZeroRange, r, std::move(g), {}};
  }
  static ModelSpec nonrev_exclusion(NonRevTable t) {
    return ModelSpec{ModelKind::NonRevExclusion, ZrRateKind::Linear, {}, std::move(t)};
  }
};

// An example window-2 rate table whose creation/annihilation balance depends
// on the density, so no effective chemical potential exists (the x13-style
// boundary identity fails for it; see tests).
NonRevTable example_nonrev_table();

struct StateInterval {
  double lo = 0.0;
  double hi = 1.0;
  bool lo_open = false;
  bool hi_open = false;
  bool contains_strictly(double rho) const {
    return rho > lo && rho < hi;
  }
};

struct Transport {
  double D;      // diffusivity
  double sigma;  // mobility
  double d;      // primitive of D, normalized d(0)=0 (SEP/ZR) or d(rho)=rho (KMP)
};

StateInterval state_interval(const ModelSpec &model);

void validate_model(const ModelSpec &model);

// lambda must lie in the model's admissible set (KMP: lambda<0; ZeroRange
// beyond the linear rate: below the series' abscissa of convergence).
double partition_Z(const ModelSpec &model, double lambda);
double mean_R(const ModelSpec &model, double lambda);
double mean_R_prime(const ModelSpec &model, double lambda); // variance, > 0

// Inverse of mean_R; rho strictly inside the state interval.
double xi_inverse(const ModelSpec &model, double rho);

double free_energy(const ModelSpec &model, double rho);
double free_energy_prime(const ModelSpec &model, double rho);  // = xi_inverse
double free_energy_second(const ModelSpec &model, double rho); // = 1/R'(Xi(rho))

Transport transport(const ModelSpec &model, double rho);

// Smooth divided difference (sigma(rho)-sigma(F))/(d(rho)-d(F)); closed form
// per model so no 0/0 guard is needed at rho=F.
double sigma_ratio(const ModelSpec &model, double rho, double F);

// Boundary exchange functional M^bd_{lambda,rho}(p) and p-derivatives.
// KMP: finite only for p in (-1/rho, 1/tau); +inf is returned outside.
// NonRevExclusion ignores lambda and uses the side's rate table.
double boundary_M(const ModelSpec &model, double lambda, double rho, double p,
                  Side side = Side::Left);
double boundary_M_deriv(const ModelSpec &model, double lambda, double rho, double p,
                        int order, Side side = Side::Left);
double boundary_M_prime0(const ModelSpec &model, double lambda, double rho,
                         Side side = Side::Left);

// First-order Taylor remainder kappa*[M(p) - p*M'(0)]; nonnegative.
double boundary_A(const ModelSpec &model, double lambda, double rho, double p,
                  double kappa, Side side = Side::Left);

// Quadratic bound constant: sup over |p|<=1 (clipped to the KMP pole interval)
// of A(p)/(kappa p^2), by dense sampling.
double boundary_A_bound(const ModelSpec &model, double lambda, double rho,
                        Side side = Side::Left);

// Mean creation/annihilation rates of the non-reversible boundary window,
// by exact enumeration under the Bernoulli(rho) product law.
// plus = sum_j E[c_j | site j forced empty], minus = same with site j occupied.
void nonrev_exchange_rates(const NonRevTable &table, Side side, double rho,
                           double &plus, double &minus);

std::string model_name(const ModelSpec &model);

} // namespace wc

#endif
