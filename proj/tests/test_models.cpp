#include <doctest.h>

#include <cmath>
#include <random>

#include "weakcontact/models.hpp"

using namespace wc;

namespace {

const ModelSpec kSep = ModelSpec::sep();
const ModelSpec kKmp = ModelSpec::kmp();
const ModelSpec kZrLin = ModelSpec::zero_range(ZrRateKind::Linear);
const ModelSpec kZrConst = ModelSpec::zero_range(ZrRateKind::Constant);

ModelSpec tabulated_linear() {
  std::vector<double> g(60);
  for (int k = 1; k <= 60; ++k) g[k - 1] = k;
  return ModelSpec::zero_range(ZrRateKind::Tabulated, g);
}

// Random admissible (lambda, rho) pairs per model, kept away from interval
// edges so f' stays well scaled.
struct Sampler {
  std::mt19937_64 rng{20250823};
  double uniform(double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng);
  }
  double lambda(const ModelSpec &m) {
    switch (m.kind) {
      case ModelKind::KMP: return uniform(-4.0, -0.3);
      case ModelKind::ZeroRange:
        if (m.zr_rate == ZrRateKind::Constant) return uniform(-3.0, -0.2);
        if (m.zr_rate == ZrRateKind::Tabulated) return uniform(-2.0, 1.5);
        return uniform(-2.0, 1.0);
      default: return uniform(-2.5, 2.5);
    }
  }
  double rho(const ModelSpec &m) {
    switch (m.kind) {
      case ModelKind::KMP: return uniform(0.2, 4.0);
      case ModelKind::ZeroRange:
        if (m.zr_rate == ZrRateKind::Constant) return uniform(0.05, 3.0);
        return uniform(0.05, 3.0);
      default: return uniform(0.05, 0.95);
    }
  }
};

} // namespace

TEST_CASE("partition function closed forms") {
  CHECK(partition_Z(kSep, 0.0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(partition_Z(kKmp, -1.0) == doctest::Approx(1.0).epsilon(1e-14));

  // Oracle: brute-force sum of 1/k! for the linear rate at lambda=0.
  double brute = 0.0, term = 1.0;
  for (int k = 0; k < 40; ++k) {
    brute += term;
    term /= (k + 1);
  }
  CHECK(partition_Z(kZrLin, 0.0) == doctest::Approx(brute).epsilon(1e-14));
  CHECK(std::abs(partition_Z(kZrLin, 0.0) - 2.718281828459045) < 1e-12);
}

TEST_CASE("mean density closed forms") {
  CHECK(mean_R(kSep, 0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(mean_R(kKmp, -2.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(mean_R(kSep, std::log(4.0)) == doctest::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("xi_inverse inverts mean_R") {
  CHECK(xi_inverse(kSep, 0.5) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(xi_inverse(kKmp, 2.0) == doctest::Approx(-0.5).epsilon(1e-14));

  // Constant-rate oracle: brute-force geometric series, bisection on the mean.
  {
    const double target = 1.0;
    double lo = -10.0, hi = -1e-9;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      double z = 0.0, s1 = 0.0, t = 1.0;
      for (int k = 0; k < 4000; ++k) {
        z += t;
        s1 += k * t;
        t *= std::exp(mid);
      }
      (s1 / z < target ? lo : hi) = mid;
    }
    const double oracle = 0.5 * (lo + hi);
    CHECK(xi_inverse(kZrConst, 1.0) == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(xi_inverse(kZrConst, 1.0) == doctest::Approx(-std::log(2.0)).epsilon(1e-10));
  }

  Sampler s;
  for (const ModelSpec &m : {kSep, kKmp, kZrLin, kZrConst, tabulated_linear()}) {
    for (int i = 0; i < 60; ++i) {
      const double lam = s.lambda(m);
      const double rho = mean_R(m, lam);
      CHECK(std::abs(mean_R(m, xi_inverse(m, rho)) - rho) <= 1e-12 * (1.0 + rho));
      // strict monotonicity of R
      CHECK(mean_R(m, lam + 1e-3) > mean_R(m, lam));
    }
  }
}

TEST_CASE("free energy values and convexity") {
  CHECK(free_energy(kSep, 0.5) == doctest::Approx(-std::log(2.0)).epsilon(1e-14));
  CHECK(free_energy_prime(kSep, 0.5) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(free_energy_prime(kKmp, 1.0) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(free_energy(kKmp, 1.0) == doctest::Approx(-1.0).epsilon(1e-14));

  Sampler s;
  for (const ModelSpec &m : {kSep, kKmp, kZrLin, kZrConst}) {
    for (int i = 0; i < 30; ++i) {
      double a = s.rho(m), b = s.rho(m);
      const double mid = 0.5 * (a + b);
      CHECK(free_energy(m, mid) <= 0.5 * (free_energy(m, a) + free_energy(m, b)) + 1e-12);
    }
  }
}

TEST_CASE("transport coefficients and Einstein relation") {
  {
    Transport t = transport(kSep, 0.5);
    CHECK(t.D == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(t.sigma == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(t.d == doctest::Approx(0.5).epsilon(1e-14));
  }
  {
    Transport t = transport(kKmp, 2.0);
    CHECK(t.D == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(t.sigma == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(t.d == doctest::Approx(2.0).epsilon(1e-14));
  }
  Sampler s;
  for (const ModelSpec &m : {kSep, kKmp, kZrLin, kZrConst, tabulated_linear()}) {
    for (int i = 0; i < 50; ++i) {
      const double rho = s.rho(m);
      const Transport t = transport(m, rho);
      CHECK(std::abs(t.D - t.sigma * free_energy_second(m, rho)) <= 1e-10 * (1.0 + t.D));
    }
  }
}

TEST_CASE("tabulated series matches closed forms") {
  const ModelSpec tab = tabulated_linear();
  Sampler s;
  for (int i = 0; i < 40; ++i) {
    const double lam = s.uniform(-2.0, 1.5);
    CHECK(partition_Z(tab, lam) == doctest::Approx(partition_Z(kZrLin, lam)).epsilon(1e-12));
    CHECK(mean_R(tab, lam) == doctest::Approx(mean_R(kZrLin, lam)).epsilon(1e-12));
  }
  std::vector<double> ones(40, 1.0);
  const ModelSpec tab1 = ModelSpec::zero_range(ZrRateKind::Tabulated, ones);
  for (int i = 0; i < 40; ++i) {
    const double lam = s.uniform(-3.0, -0.5);
    CHECK(mean_R(tab1, lam) == doctest::Approx(mean_R(kZrConst, lam)).epsilon(1e-12));
  }
}

TEST_CASE("boundary_M values") {
  CHECK(boundary_M(kSep, 0.0, 0.5, 0.0) == doctest::Approx(0.0).epsilon(1e-14));
  const double expected = 0.25 * (std::exp(1.0) + std::exp(-1.0) - 2.0);
  CHECK(boundary_M(kSep, 0.0, 0.5, 1.0) == doctest::Approx(expected).epsilon(1e-14));

  // KMP root of M at p=(rho-tau)/(rho tau): symbolic-substitution oracle.
  for (double lam : {-0.5, -1.3, -3.0}) {
    const double tau = mean_R(kKmp, lam);
    for (double rho : {0.3, 1.0, 2.5}) {
      const double p = (rho - tau) / (rho * tau);
      CHECK(std::abs(boundary_M(kKmp, lam, rho, p)) <= 1e-12);
    }
  }

  // KMP pole structure: +inf outside (-1/rho, 1/tau).
  CHECK(std::isinf(boundary_M(kKmp, -1.0, 2.0, 1.0)));  // tau=1, p at the pole
  CHECK(std::isinf(boundary_M(kKmp, -1.0, 2.0, -0.5))); // p at -1/rho
  CHECK(std::isfinite(boundary_M(kKmp, -1.0, 2.0, 0.99)));
}

TEST_CASE("boundary_M_prime0 and finite differences") {
  CHECK(boundary_M_prime0(kSep, 0.0, 0.5) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(boundary_M_prime0(kKmp, -1.0, 2.0) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(boundary_M_prime0(kZrLin, 0.0, 1.0) == doctest::Approx(0.0).epsilon(1e-14));

  Sampler s;
  for (const ModelSpec &m : {kSep, kKmp, kZrLin, kZrConst}) {
    for (int i = 0; i < 25; ++i) {
      const double lam = s.lambda(m), rho = s.rho(m);
      const double eps = 1e-5;
      const double fd =
          (boundary_M(m, lam, rho, eps) - boundary_M(m, lam, rho, -eps)) / (2.0 * eps);
      CHECK(std::abs(fd - boundary_M_prime0(m, lam, rho)) <= 1e-7 * (1.0 + std::abs(fd)));
      const double fd2 = (boundary_M(m, lam, rho, eps) + boundary_M(m, lam, rho, -eps)) /
                         (eps * eps);
      CHECK(std::abs(fd2 - boundary_M_deriv(m, lam, rho, 0.0, 2)) <=
            1e-4 * (1.0 + std::abs(fd2)));
    }
  }
}

TEST_CASE("boundary identity: M vanishes at f'(rho)-lambda") {
  Sampler s;
  for (const ModelSpec &m : {kSep, kKmp, kZrLin, kZrConst, tabulated_linear()}) {
    for (int i = 0; i < 100; ++i) {
      const double lam = s.lambda(m), rho = s.rho(m);
      const double p = free_energy_prime(m, rho) - lam;
      CHECK(std::abs(boundary_M(m, lam, rho, p)) <= 1e-10);
    }
  }
}

TEST_CASE("boundary identity: argument swap") {
  Sampler s;
  for (const ModelSpec &m : {kSep, kKmp, kZrLin, kZrConst}) {
    for (int i = 0; i < 100; ++i) {
      const double lam = s.lambda(m), rho = s.rho(m), q = s.rho(m);
      const double lhs =
          boundary_M(m, lam, rho, free_energy_prime(m, rho) - free_energy_prime(m, q));
      const double rhs = boundary_M(m, lam, rho, free_energy_prime(m, q) - lam);
      // For KMP both arguments cross their poles under the same condition, so
      // the identity extends to matched infinities.
      if (std::isinf(lhs) || std::isinf(rhs)) {
        CHECK(lhs == rhs);
        continue;
      }
      CHECK(std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(rhs)));
    }
  }
}

TEST_CASE("boundary identity: mobility transfer (SEP and zero range)") {
  Sampler s;
  for (const ModelSpec &m : {kSep, kZrLin, kZrConst}) {
    for (int i = 0; i < 100; ++i) {
      const double mu = s.lambda(m);
      double rho = s.rho(m), q = s.rho(m);
      if (std::abs(rho - q) < 1e-3) continue;
      const Transport tq = transport(m, q);
      const double dd = transport(m, rho).d - tq.d;
      const double lhs =
          tq.sigma / dd *
          boundary_M(m, mu, rho, free_energy_prime(m, rho) - free_energy_prime(m, q));
      CHECK(std::abs(lhs - boundary_M_prime0(m, mu, q)) <= 1e-10 * (1.0 + std::abs(lhs)));
    }
  }
}

TEST_CASE("boundary flux sign condition") {
  Sampler s;
  for (const ModelSpec &m : {kSep, kKmp, kZrLin, kZrConst}) {
    for (int i = 0; i < 100; ++i) {
      const double lam = s.lambda(m), rho = s.rho(m);
      const double gap = free_energy_prime(m, rho) - lam;
      const double mp = boundary_M_prime0(m, lam, rho);
      if (std::abs(gap) > 1e-8)
        CHECK(gap * mp < 0.0);
      else
        CHECK(std::abs(mp) <= 1e-6);
    }
  }
}

TEST_CASE("boundary Taylor remainder is a nonnegative quadratic-bounded form") {
  CHECK(boundary_A(kSep, 0.0, 0.5, 0.0, 1.0) == doctest::Approx(0.0));
  const double expected = 0.25 * (std::exp(1.0) + std::exp(-1.0) - 2.0);
  CHECK(boundary_A(kSep, 0.0, 0.5, 1.0, 1.0) == doctest::Approx(expected).epsilon(1e-13));

  Sampler s;
  for (const ModelSpec &m : {kSep, kKmp, kZrLin, kZrConst}) {
    for (int i = 0; i < 250; ++i) {
      const double lam = s.lambda(m), rho = s.rho(m);
      const double kappa = s.uniform(0.2, 3.0);
      double p = s.uniform(-1.0, 1.0);
      if (m.kind == ModelKind::KMP) {
        const double tau = mean_R(m, lam);
        p = s.uniform(-0.95 / rho, 0.95 / tau);
      }
      const double A = boundary_A(m, lam, rho, p, kappa);
      CHECK(A >= -1e-12);
      if (std::abs(p) <= 1.0) {
        const double c0 = boundary_A_bound(m, lam, rho);
        CHECK(A <= kappa * c0 * p * p * (1.0 + 1e-6) + 1e-12);
      }
    }
  }
}

TEST_CASE("non-reversible window model breaks the boundary identity") {
  const ModelSpec nr = ModelSpec::nonrev_exclusion(example_nonrev_table());
  validate_model(nr);

  // Exchange rates by direct expectation check at a hand point: window table
  // gives plus = 2, minus = 2 + 3 rho.
  double plus, minus;
  nonrev_exchange_rates(nr.nonrev, Side::Left, 0.25, plus, minus);
  CHECK(plus == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(minus == doctest::Approx(2.75).epsilon(1e-13));

  // "Naive equilibrium argument": the wall density rho* where the mean flux
  // vanishes defines an effective potential; a reversible wall would then
  // annihilate M at p = f'(rho) - f'(rho*) for every rho. Here it does not.
  double lo = 1e-6, hi = 1.0 - 1e-6;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (boundary_M_prime0(nr, 0.0, mid) > 0.0 ? lo : hi) = mid;
  }
  const double rho_star = 0.5 * (lo + hi);
  const double lam_eff = free_energy_prime(nr, rho_star);
  double worst = 0.0;
  for (double rho : {0.2, 0.4, 0.6, 0.8}) {
    const double p = free_energy_prime(nr, rho) - lam_eff;
    worst = std::max(worst, std::abs(boundary_M(nr, 0.0, rho, p)));
  }
  CHECK(worst > 1e-3);

  // The reversible models pass the same construction (control experiment).
  for (const ModelSpec &m : {kSep}) {
    const double lam = 0.3;
    double lo2 = 1e-6, hi2 = 1.0 - 1e-6;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo2 + hi2);
      (boundary_M_prime0(m, lam, mid) > 0.0 ? lo2 : hi2) = mid;
    }
    const double lam2 = free_energy_prime(m, 0.5 * (lo2 + hi2));
    CHECK(std::abs(boundary_M(m, lam, 0.7, free_energy_prime(m, 0.7) - lam2)) < 1e-9);
  }
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(partition_Z(kKmp, 0.1), DomainError);
  CHECK_THROWS_AS(xi_inverse(kSep, 1.0), DomainError);
  CHECK_THROWS_AS(xi_inverse(kKmp, 0.0), DomainError);
  CHECK_THROWS_AS(partition_Z(kZrConst, 0.5), DomainError);
  std::vector<double> bad = {1.0, -2.0};
  CHECK_THROWS_AS(validate_model(ModelSpec::zero_range(ZrRateKind::Tabulated, bad)),
                  ConfigError);
  NonRevTable t = example_nonrev_table();
  t.left[0][1] = -1.0;
  CHECK_THROWS_AS(validate_model(ModelSpec::nonrev_exclusion(t)), ConfigError);
}
