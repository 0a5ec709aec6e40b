#include <doctest.h>

#include <cmath>

#include "weakcontact/micro.hpp"

using namespace wc;

namespace {

MicroConfig sep_cfg(int N, double lL, double lR) {
  MicroConfig c;
  c.model = ModelSpec::sep();
  c.N = N;
  c.drive.lambda_left = lL;
  c.drive.lambda_right = lR;
  c.seed = 20250823;
  return c;
}

double tv_distance(const std::vector<double> &p, const Eigen::VectorXd &q) {
  double s = 0.0;
  for (size_t m = 0; m < p.size(); ++m) s += std::abs(p[m] - q[int(m)]);
  return 0.5 * s;
}

} // namespace

TEST_CASE("identical seeds reproduce the trajectory bitwise") {
  MicroConfig c = sep_cfg(16, -0.4, 0.7);
  c.max_events = 20000;
  EmpiricalProfile a = simulate(c);
  EmpiricalProfile b = simulate(c);
  CHECK(a.events == b.events);
  CHECK(a.horizon == b.horizon);
  CHECK((a.mean == b.mean).all());
  c.seed += 1;
  EmpiricalProfile d = simulate(c);
  CHECK((a.mean != d.mean).any());
}

TEST_CASE("dense generator at equilibrium gives the product Bernoulli measure") {
  const double lam = 0.3;
  MicroConfig c = sep_cfg(4, lam, lam);
  GeneratorOracle o = exact_generator_oracle(c);
  const double rho = mean_R(c.model, lam);
  CHECK(o.residual < 1e-10);
  for (int m = 0; m < 16; ++m) {
    double p = 1.0;
    for (int i = 0; i < 4; ++i) p *= ((m >> i) & 1) ? rho : 1.0 - rho;
    CHECK(std::abs(o.pi[m] - p) < 1e-12);
  }
  for (int i = 0; i < 4; ++i) CHECK(std::abs(o.marginal[i] - rho) < 1e-12);
  CHECK(std::abs(o.current_left) < 1e-12);
  CHECK(std::abs(o.current_right) < 1e-12);
}

TEST_CASE("empirical occupancy matches the dense generator in total variation") {
  MicroConfig c = sep_cfg(4, std::log(0.25), std::log(3.0));
  GeneratorOracle o = exact_generator_oracle(c);
  c.max_events = 1000000;
  EmpiricalProfile p = simulate(c);
  REQUIRE(p.state_occupancy.size() == 16);
  CHECK(tv_distance(p.state_occupancy, o.pi) <= 0.01);
  // stationary current balance: what enters on the left leaves on the right
  CHECK(std::abs(o.current_left + o.current_right) < 1e-10);
}

TEST_CASE("non-reversible boundary rates still yield an exact stationary solve") {
  MicroConfig c;
  c.model = ModelSpec::nonrev_exclusion(example_nonrev_table());
  c.N = 5;
  c.drive.lambda_left = 0.0;
  c.drive.lambda_right = 0.0;
  GeneratorOracle o = exact_generator_oracle(c);
  CHECK(o.residual < 1e-10);
  CHECK(std::abs(o.pi.sum() - 1.0) < 1e-12);
  CHECK((o.pi.array() > 0.0).all());

  c.max_events = 400000;
  EmpiricalProfile p = simulate(c);
  CHECK(tv_distance(p.state_occupancy, o.pi) < 0.03);
}

TEST_CASE("oracle rejects oversized and non-exclusion inputs") {
  MicroConfig c = sep_cfg(13, 0.0, 0.0);
  CHECK_THROWS_AS(exact_generator_oracle(c), ConfigError);
  c.N = 4;
  c.model = ModelSpec::kmp();
  c.drive.lambda_left = c.drive.lambda_right = -1.0;
  CHECK_THROWS_AS(exact_generator_oracle(c), ConfigError);
}

TEST_CASE("sep profile approaches the weak-contact stationary solution") {
  MicroConfig c = sep_cfg(32, std::log(0.25), std::log(4.0));
  c.t_burn = 3.0;
  c.t_measure = 100.0;
  EmpiricalProfile p = simulate(c);
  // discrete stationary profile: linear with Robin-type wall rows
  const int N = c.N;
  const double S = 0.6 / (3.0 - 1.0 / N);
  double sup = 0.0;
  for (int i = 0; i < N; ++i)
    sup = std::max(sup, std::abs(p.mean[i] - (0.2 + S + S * i / double(N))));
  CHECK(sup < 0.02);
}

TEST_CASE("kmp energies equilibrate to the reservoir temperature") {
  MicroConfig c;
  c.model = ModelSpec::kmp();
  c.N = 16;
  c.drive.lambda_left = c.drive.lambda_right = -1.0 / 1.3; // mean 1.3
  c.seed = 7;
  c.t_burn = 2.0;
  c.t_measure = 20.0;
  EmpiricalProfile p = simulate(c);
  for (int i = 0; i < c.N; ++i)
    CHECK(std::abs(p.mean[i] - 1.3) < std::max(4.0 * p.sem[i], 0.05));
}

TEST_CASE("zero-range occupations follow the product measure at equal activities") {
  MicroConfig c;
  c.model = ModelSpec::zero_range(ZrRateKind::Linear);
  c.N = 8;
  c.drive.lambda_left = c.drive.lambda_right = std::log(0.8);
  c.seed = 5;
  c.t_burn = 2.0;
  c.t_measure = 80.0;
  c.histogram_max = 8;
  EmpiricalProfile p = simulate(c);
  // linear rates: Poisson(e^lambda) marginals
  for (int i = 0; i < c.N; ++i)
    CHECK(std::abs(p.mean[i] - 0.8) < std::max(4.0 * p.sem[i], 0.03));
  double pk = std::exp(-0.8);
  for (int k = 0; k <= 6; ++k) {
    CHECK(std::abs(p.zr_histogram[k] - pk) < 0.015);
    pk *= 0.8 / (k + 1);
  }
}

TEST_CASE("discrete activity profile is affine and matches the elimination oracle") {
  ModelSpec m = ModelSpec::zero_range(ZrRateKind::Linear);
  const double lam = std::log(0.7);
  ZrDiscreteSolution eq = zr_discrete_phi(m, 12, lam, lam);
  CHECK((eq.phi - 0.7).abs().maxCoeff() < 1e-13);
  CHECK((eq.mean - 0.7).abs().maxCoeff() < 1e-13);

  const int N = 10;
  const double kap = 1.5, pL = 0.5, pR = 1.5;
  ZrDiscreteSolution s = zr_discrete_phi(m, N, std::log(pL), std::log(pR), kap);
  for (int i = 1; i + 1 < N; ++i)
    CHECK(std::abs(s.phi[i + 1] - 2.0 * s.phi[i] + s.phi[i - 1]) < 1e-12);
  // independent 2x2 elimination for the affine solution phi_i = a + b i
  const double b = kap * (pR - pL) / (2.0 * N + kap * (N - 1.0));
  const double a = pL + b * N / kap;
  for (int i = 0; i < N; ++i) CHECK(std::abs(s.phi[i] - (a + b * i)) < 1e-12);

  CHECK_THROWS_AS(zr_discrete_phi(m, 10, 0.0, 0.5, 0.0), StructureError);
  CHECK_THROWS_AS(zr_discrete_phi(ModelSpec::sep(), 10, 0.0, 0.5), ConfigError);
}

TEST_CASE("zero-range profile tracks the discrete activity prediction") {
  ModelSpec m = ModelSpec::zero_range(ZrRateKind::Linear);
  MicroConfig c;
  c.model = m;
  c.N = 20;
  c.drive.lambda_left = std::log(0.5);
  c.drive.lambda_right = std::log(1.5);
  c.seed = 11;
  c.t_burn = 4.0;
  c.t_measure = 40.0;
  EmpiricalProfile p = simulate(c);
  ZrDiscreteSolution s = zr_discrete_phi(m, c.N, c.drive.lambda_left,
                                         c.drive.lambda_right);
  for (int i = 0; i < c.N; ++i)
    CHECK(std::abs(p.mean[i] - s.mean[i]) < std::max(4.0 * p.sem[i], 0.03));
}

TEST_CASE("zero-range occupations beyond the cap raise a resource error") {
  MicroConfig c;
  c.model = ModelSpec::zero_range(ZrRateKind::Linear);
  c.N = 4;
  c.drive.lambda_left = c.drive.lambda_right = std::log(60.0); // mean above the cap
  c.zr_cap = 50.0;
  c.t_measure = 100.0;
  CHECK_THROWS_AS(simulate(c), ResourceError);
}

TEST_CASE("config validation rejects malformed runs") {
  MicroConfig c = sep_cfg(2, 0.0, 0.0);
  CHECK_THROWS_AS(simulate(c), ConfigError);
  c.N = 8;
  c.batches = 4;
  CHECK_THROWS_AS(simulate(c), ConfigError);
  c.batches = 16;
  c.drive.E = Eigen::ArrayXd::Constant(8, 1.0);
  CHECK_THROWS_AS(simulate(c), ConfigError);
}
