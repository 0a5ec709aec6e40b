#include <doctest.h>

#include <cmath>
#include <random>

#include "weakcontact/thermo.hpp"

using namespace wc;

namespace {

Drive sep_neq() {
  Drive d;
  d.lambda_left = std::log(0.2 / 0.8);
  d.lambda_right = std::log(0.8 / 0.2);
  return d;
}

Drive eq_drive(double lam) {
  Drive d;
  d.lambda_left = d.lambda_right = lam;
  return d;
}

} // namespace

TEST_CASE("equilibrium rest state exchanges no energy") {
  Grid1D g(32);
  Drive d = eq_drive(0.3);
  Field rhobar = solve_stationary(ModelSpec::sep(), g, d);
  WorkLedger led =
      work_exchanged(ModelSpec::sep(), g, rhobar, DriveSchedule::constant(d), 1.0);
  CHECK(std::abs(led.W) < 1e-10);
  CHECK(std::abs(led.bulk_dissipation) < 1e-10);
  CHECK(std::abs(led.boundary_dissipation) < 1e-10);
  CHECK(std::abs(led.dF) < 1e-10);
}

TEST_CASE("steady nonequilibrium state dissipates at the closed-form rate") {
  Grid1D g(128);
  Drive d = sep_neq();
  Field rhobar = solve_stationary(ModelSpec::sep(), g, d);
  const double T = 10.0;
  WorkLedger led =
      work_exchanged(ModelSpec::sep(), g, rhobar, DriveSchedule::constant(d), T);
  // rho = 0.4 + 0.2x, J = -0.2: bulk rate int J^2/sigma = 0.4 log 1.5 and each
  // wall contributes 0.2 log(8/3).
  const double rate = 0.4 * std::log(1.5) + 0.4 * std::log(8.0 / 3.0);
  CHECK(led.W / T == doctest::Approx(rate).epsilon(1e-3));
  CHECK(std::abs(led.dF) < 1e-8);
  CHECK(led.bulk_dissipation > 0.0);
  CHECK(led.boundary_dissipation > 0.0);
  CHECK(std::abs(led.identity_residual) < 1e-8 * (led.W + 1.0));
}

TEST_CASE("work decomposition is exact for driven protocols under Heun stepping") {
  Grid1D g(48);
  std::mt19937_64 eng(11u);
  std::uniform_real_distribution<double> uni(-0.8, 0.8);
  for (int trial = 0; trial < 5; ++trial) {
    DriveSchedule s;
    s.times = {0.0, 0.5, 1.0};
    for (int k = 0; k < 3; ++k) {
      Drive d;
      d.lambda_left = uni(eng);
      d.lambda_right = uni(eng);
      s.nodes.push_back(d);
    }
    Field rho0 = solve_stationary(ModelSpec::sep(), g, s.at(0.0));
    WorkOptions wo;
    wo.solver.scheme = Scheme::ExplicitHeun;
    WorkLedger led = work_exchanged(ModelSpec::sep(), g, rho0, s, 1.0, wo);
    CHECK(std::abs(led.identity_residual) <= 1e-6 * (std::abs(led.W) + 1.0));
    CHECK(led.W >= led.dF - 1e-9);
    CHECK(led.bulk_dissipation >= -1e-10);
    CHECK(led.boundary_dissipation >= -1e-12);
  }
}

TEST_CASE("excess work of a relaxation path equals the quasi-potential") {
  Grid1D g(64);
  Drive d = eq_drive(0.0); // terminal equilibrium with density 1/2
  ModelSpec m = ModelSpec::sep();
  Field rho0 = Field::Constant(g.n, 0.6);
  const double wex = excess_work(m, g, rho0, DriveSchedule::constant(d));
  const double V = free_energy(m, 0.6) - free_energy(m, 0.5);
  CHECK(wex == doctest::Approx(V).epsilon(0.01));

  Field rhobar = Field::Constant(g.n, 0.5);
  CHECK(std::abs(excess_work(m, g, rhobar, DriveSchedule::constant(d))) < 1e-10);

  CHECK_THROWS_AS(excess_work(m, g, rho0, DriveSchedule::constant(sep_neq())),
                  PreconditionError);
}

TEST_CASE("renormalized work coincides with work for equilibrium drives") {
  Grid1D g(64);
  Drive d = eq_drive(0.0);
  ModelSpec m = ModelSpec::sep();
  Field rho0 = 0.5 + 0.1 * (4.0 * g.centers()).sin();
  WorkOptions wo;
  wo.min_horizon = 1.0;
  WorkLedger led = renormalized_work(m, g, rho0, DriveSchedule::constant(d), wo);
  CHECK(led.renorm_boundary == doctest::Approx(led.boundary_dissipation).epsilon(1e-8));
  CHECK(std::abs(led.renormalized - led.W) < 2e-3);
}

TEST_CASE("renormalized work stays finite at a nonequilibrium steady state") {
  Grid1D g(48);
  Drive d = sep_neq();
  ModelSpec m = ModelSpec::sep();
  Field rhobar = solve_stationary(m, g, d);
  WorkOptions wo;
  wo.min_horizon = 2.0;
  wo.settle_tol = 1e-7;
  WorkLedger led = renormalized_work(m, g, rhobar, DriveSchedule::constant(d), wo);
  CHECK(std::abs(led.renormalized) < 1e-8);
  CHECK(std::abs(led.renorm_bulk) < 1e-8);
  CHECK(std::abs(led.renorm_boundary) < 1e-8);
  // the plain work keeps growing linearly meanwhile
  CHECK(led.W > 0.5);
}

TEST_CASE("quasistatic sweep decays roughly linearly in the driving speed") {
  Grid1D g(32);
  DriveSchedule s;
  s.times = {0.0, 1.0};
  s.nodes = {eq_drive(0.0), eq_drive(0.5)};
  std::vector<std::pair<double, double>> rows =
      quasistatic_sweep(ModelSpec::sep(), g, s, {0.4, 0.2, 0.1});
  CHECK(rows[0].second > rows[1].second);
  CHECK(rows[1].second > rows[2].second);
  const double r1 = rows[0].second / rows[1].second;
  const double r2 = rows[1].second / rows[2].second;
  CHECK(r1 > 1.5);
  CHECK(r1 < 2.5);
  CHECK(r2 > 1.5);
  CHECK(r2 < 2.5);
}
