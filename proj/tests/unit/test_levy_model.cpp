#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "levyctl/errors.hpp"
#include "levyctl/levy_model.hpp"
#include "oracles.hpp"

using namespace levyctl;
using doctest::Approx;

TEST_CASE("Brownian exponent and derivative") {
  const auto m = LevyModel::brownian_drift(0.0, std::sqrt(2.0));
  CHECK(m.psi(3.0) == Approx(9.0).epsilon(1e-14));
  CHECK(m.psi_prime(3.0) == Approx(6.0).epsilon(1e-14));
  CHECK(m.phi(0.04) == Approx(0.2).epsilon(1e-12));

  const auto drift = LevyModel::brownian_drift(1.0, 0.0);
  CHECK(drift.psi_prime(0.7) == 1.0);
  CHECK(drift.psi_prime(42.0) == 1.0);
  CHECK(drift.phi(0.03) == Approx(0.03).epsilon(1e-12));
  CHECK(drift.variation() == Variation::Bounded);
}

TEST_CASE("psi vanishes at zero for every kind") {
  const std::vector<LevyModel> models = {
      LevyModel::brownian_drift(0.3, 1.0),
      LevyModel::hyper_exponential(0.5, 0.2, {{1.0, 2.0}, {0.5, 5.0}}),
      oracle::ref_model(),
      LevyModel::beta_family({0.1, 3.0, 1.0, 0.1, 2.5}, 0.0),
      LevyModel::beta_family({0.4, 2.0, 1.5, 0.2, 0.5}, 0.0),
  };
  for (const auto& m : models) CHECK(m.psi(0.0) == 0.0);
}

TEST_CASE("beta-family exponent equals its Levy-density integral") {
  const auto p = oracle::ref_beta();
  const auto m = oracle::ref_model();
  // For lambda < 2 the beta-function part is int (e^{sz} - 1) nu(dz) without compensation.
  for (double s : {0.5, 1.0, 2.0}) {
    const double jumps =
        oracle::against_beta_density(p, [s](double z) { return std::expm1(s * z); });
    const double want = p.delta_hat * s + 0.5 * 0.04 * s * s + jumps;
    CHECK(oracle::rel_err(m.psi(s), want) < 1e-6);
  }
}

TEST_CASE("compensated identity holds for every lambda regime") {
  for (double lambda : {0.5, 1.5, 2.5}) {
    const BetaParams p{0.3, 3.0, 1.0, 0.1, lambda};
    const double sigma = 0.2;
    const auto m = LevyModel::beta_family(p, sigma);
    for (double s : {0.5, 1.0, 2.0}) {
      const double lhs = m.psi(s) - s * m.psi_prime(0.0) - 0.5 * sigma * sigma * s * s;
      CHECK(oracle::rel_err(lhs, oracle::beta_compensated(p, s)) < 1e-6);
    }
  }
}

TEST_CASE("hyperexponential exponent matches the density integral") {
  const double c = 0.5, sigma = 0.2;
  const auto m = LevyModel::hyper_exponential(c, sigma, {{1.0, 2.0}, {0.5, 5.0}});
  for (double s : {0.3, 1.0, 4.0}) {
    double want = c * s + 0.5 * sigma * sigma * s * s;
    for (auto [rate, eta] : {std::pair{1.0, 2.0}, std::pair{0.5, 5.0}}) {
      auto dens = [rate = rate, eta = eta](double z) { return rate * eta * std::exp(eta * z); };
      want += oracle::quad([&](double z) { return oracle::expm1_minus_linear(s * z) * dens(z); }, -1.0, 0.0);
      want += oracle::quad_to_inf([&](double t) { return std::expm1(-s * (1.0 + t)) * dens(-1.0 - t); },
                                  0.0);
    }
    CHECK(oracle::rel_err(m.psi(s), want) < 1e-10);
  }
}

TEST_CASE("psi' agrees with central differences") {
  const std::vector<LevyModel> models = {
      oracle::ref_model(),
      LevyModel::beta_family({0.1, 3.0, 1.0, 0.1, 2.5}, 0.0),
      LevyModel::hyper_exponential(0.5, 0.0, {{1.0, 2.0}}),
  };
  const double h = 1e-6;
  for (const auto& m : models) {
    for (double s : {0.0, 0.1, 0.7, 1.3, 3.0, 10.0}) {
      const double fd = (m.psi(s + h) - m.psi(s - h)) / (2 * h);
      CHECK(oracle::rel_err(m.psi_prime(s), fd) < 1e-5);
    }
  }
  // psi'(0+) is the mean; the finite difference is tight there.
  const auto m = oracle::ref_model();
  const double fd0 = (m.psi(h) - m.psi(-h)) / (2 * h);
  CHECK(oracle::rel_err(m.mean(), fd0) < 1e-6);
}

TEST_CASE("Phi(q) solves psi = q") {
  const auto m = oracle::ref_model();
  const double phi = m.phi(oracle::kQ);
  CHECK(std::abs(m.psi(phi) - oracle::kQ) <= 1e-12);
  // Independent bisection on the increasing branch.
  const double ref = oracle::bisect([&](double s) { return m.psi(s) - oracle::kQ; }, 0.5, 5.0);
  CHECK(phi == Approx(ref).epsilon(1e-11));

  std::mt19937_64 gen(12345);
  std::uniform_real_distribution<double> u(std::log(0.001), 0.0);
  const std::vector<LevyModel> models = {m, LevyModel::brownian_drift(-0.2, 0.5),
                                         LevyModel::hyper_exponential(1.0, 0.0, {{0.8, 1.5}})};
  for (const auto& model : models) {
    for (int i = 0; i < 20; ++i) {
      const double q = std::exp(u(gen));
      const double p = model.phi(q);
      CHECK(p > 0.0);
      CHECK(std::abs(model.psi(p) - q) <= 1e-12 * std::max(1.0, q) + 1e-15);
    }
  }
}

TEST_CASE("psi is convex on the positive axis") {
  const auto m = oracle::ref_model();
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  for (int i = 0; i < 200; ++i) {
    double s[3] = {u(gen), u(gen), u(gen)};
    std::sort(s, s + 3);
    if (s[2] - s[0] < 1e-3) continue;
    const double w = (s[1] - s[0]) / (s[2] - s[0]);
    CHECK(m.psi(s[1]) <= (1 - w) * m.psi(s[0]) + w * m.psi(s[2]) + 1e-12);
  }
  for (double s : {0.0, 0.5, 2.0, 8.0}) CHECK(m.psi_second(s) > 0.0);
}

TEST_CASE("variation classification") {
  CHECK(oracle::ref_model().variation() == Variation::Unbounded);
  CHECK(LevyModel::hyper_exponential(1.0, 0.0, {{1.0, 2.0}}).variation() == Variation::Bounded);
  CHECK_FALSE(LevyModel::hyper_exponential(1.0, 0.0, {{1.0, 2.0}}).infinite_activity());

  const BetaParams p{0.1, 3.0, 1.0, 0.1, 1.5};
  const auto bv = LevyModel::beta_family(p, 0.0);
  CHECK(bv.variation() == Variation::Bounded);
  CHECK(bv.infinite_activity());
  CHECK(bv.bv_drift() == Approx(0.1).epsilon(1e-12));
  // int_{-1}^0 |z| nu(dz) is finite for lambda < 2.
  const double first = oracle::against_beta_density(
      p, [](double z) { return z > -1.0 ? -z : 0.0; });
  CHECK(std::isfinite(first));
  CHECK(bv.mid_jump_first_moment(1e-12) == Approx(first).epsilon(1e-6));

  CHECK(LevyModel::beta_family({0.1, 3.0, 1.0, 0.1, 2.5}, 0.0).variation() == Variation::Unbounded);
  CHECK_FALSE(LevyModel::beta_family({0.1, 3.0, 1.0, 0.1, 0.5}, 0.0).infinite_activity());
}

TEST_CASE("jump-measure summaries match quadrature") {
  const auto p = oracle::ref_beta();
  const auto m = oracle::ref_model();
  for (double eps : {1e-3, 0.1, 1.0}) {
    const double tail = oracle::against_beta_density(p, [](double) { return 1.0; }, -eps);
    CHECK(oracle::rel_err(m.tail_mass(eps), tail) < 1e-8);
    const double second = oracle::quad(
        [&](double t) {
          const double z = -t * t * t * t;
          return t > 0.0 ? z * z * oracle::beta_density(p, z) * 4.0 * t * t * t : 0.0;
        },
        0.0, std::pow(eps, 0.25));
    CHECK(oracle::rel_err(m.small_jump_second_moment(eps), second) < 1e-8);
  }
  CHECK(m.levy_density(-0.5) == Approx(oracle::beta_density(p, -0.5)).epsilon(1e-14));
}

TEST_CASE("pole scales") {
  const auto m = oracle::ref_model();
  const auto eta = m.pole_scales(4);
  REQUIRE(eta.size() == 4);
  for (int k = 0; k < 4; ++k) CHECK(eta[k] == Approx(1.0 * (3.0 + k)));
  CHECK(LevyModel::brownian_drift(0.1, 1.0).pole_scales(5).empty());
}

TEST_CASE("invalid models are rejected") {
  CHECK_THROWS_AS(LevyModel::beta_family({0.1, 3.0, 1.0, 0.1, 1.0}, 0.2), ConfigError);
  CHECK_THROWS_AS(LevyModel::beta_family({0.1, 3.0, 1.0, 0.1, 2.0}, 0.2), ConfigError);
  CHECK_THROWS_AS(LevyModel::beta_family({0.1, -3.0, 1.0, 0.1, 1.5}, 0.2), ConfigError);
  CHECK_THROWS_AS(LevyModel::brownian_drift(0.1, -1.0), ConfigError);
  CHECK_THROWS_AS(LevyModel::hyper_exponential(0.1, 0.0, {}), ConfigError);
  // Bounded variation with a non-positive drift is a negative subordinator.
  CHECK_THROWS_AS(LevyModel::brownian_drift(-1.0, 0.0), AssumptionViolation);
  CHECK_THROWS_AS(LevyModel::beta_family({-0.1, 3.0, 1.0, 0.1, 1.5}, 0.0), AssumptionViolation);
  CHECK_THROWS_AS(LevyModel::hyper_exponential(-1.0, 0.0, {{1.0, 2.0}}), AssumptionViolation);
}

TEST_CASE("poles of psi are reported") {
  const auto m = oracle::ref_model();
  // alpha + s / beta = 0 at s = -3.
  CHECK_THROWS_AS(m.psi(-3.0), DomainError);
  CHECK_THROWS_AS(m.psi_prime(-4.0), DomainError);
  CHECK(std::isfinite(m.psi(-3.5)));
  const auto h = LevyModel::hyper_exponential(0.5, 0.2, {{1.0, 2.0}});
  CHECK_THROWS_AS(h.psi(-2.0), DomainError);
}
