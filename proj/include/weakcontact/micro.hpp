#ifndef WEAKCONTACT_MICRO_HPP
#define WEAKCONTACT_MICRO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "weakcontact/grid.hpp"
#include "weakcontact/models.hpp"

namespace wc {

// Continuous-time kinetic Monte Carlo for the lattice models on N sites with
// bulk events at rate N^2 and boundary exchanges at rate kappa*N (the weak
// contact scaling; drive.kappa_* multiplies all boundary rates). Rejection
// free: a binary-indexed tree over per-event rates drives the direct method.
struct MicroConfig {
  ModelSpec model;
  int N = 0;
  Drive drive; // lambda_left/right and kappa_left/right; bond bias E unsupported
  std::uint64_t seed = 1;
  double t_burn = 1.0;    // discarded warm-up, macroscopic time units
  double t_measure = 4.0; // measurement window
  // When positive the run is event-driven instead: max_events measured events
  // after a burn-in of max_events/10.
  long long max_events = 0;
  int batches = 16;      // batch-mean count for the standard errors
  double zr_cap = 1e6;   // per-site occupation cap, zero-range only
  int histogram_max = 0; // zero-range: record pooled occupation histogram 0..max
  std::string event_log; // optional binary event log (u64 time bits, u32 event id)
};

struct EmpiricalProfile {
  Eigen::ArrayXd mean; // per-site time-averaged occupation or energy
  Eigen::ArrayXd sem;  // batch-mean standard errors
  // exclusion models with N <= 12: time fraction spent in each configuration
  std::vector<double> state_occupancy;
  std::vector<double> zr_histogram; // pooled occupation-time fractions
  long long events = 0;
  double horizon = 0.0; // measured time span
};

EmpiricalProfile simulate(const MicroConfig &cfg);

// Dense stationary distribution of the exclusion-type generators (2^N states,
// N <= 12), built from the same rates as simulate and solved by elimination.
struct GeneratorOracle {
  Eigen::VectorXd pi;        // stationary distribution over bit masks
  Eigen::ArrayXd marginal;   // per-site occupation probabilities
  double current_left = 0.0; // mean particle flux entering at each wall
  double current_right = 0.0;
  double residual = 0.0; // ||pi Q||_inf
};

GeneratorOracle exact_generator_oracle(const MicroConfig &cfg);

// Discrete zero-range activity profile: phi is harmonic in the bulk with
// Robin-type rows N*(phi_1 - phi_0) + kappa*(e^lambda - phi_0) = 0 at the
// walls. lambda_N = log(phi) and mean_N = R(lambda_N) per site.
struct ZrDiscreteSolution {
  Eigen::ArrayXd phi;
  Eigen::ArrayXd lambda;
  Eigen::ArrayXd mean;
};

ZrDiscreteSolution zr_discrete_phi(const ModelSpec &model, int N, double lambda_left,
                                   double lambda_right, double kappa = 1.0);

} // namespace wc

#endif
