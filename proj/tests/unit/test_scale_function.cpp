#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "levyctl/errors.hpp"
#include "levyctl/scale_function.hpp"
#include "oracles.hpp"

using namespace levyctl;
using doctest::Approx;

namespace {

const ScaleFunction& ref_sf() {
  static const ScaleFunction sf = ScaleFunction::build(oracle::ref_model(), oracle::kQ);
  return sf;
}

// int_0^X e^{-sx} W(x) dx, written through W_phi so nothing overflows.
double laplace(const ScaleFunction& sf, double s) {
  const double d = s - sf.phi();
  const double X = std::log(1e8) / d + 10.0;
  return oracle::quad_split([&](double x) { return std::exp(-d * x) * sf.W_phi(x); }, 0.0, X,
                            {0.01, 0.1, 1.0, 5.0, 20.0}, 1e-10);
}

}  // namespace

TEST_CASE("Brownian closed form") {
  const auto m = LevyModel::brownian_drift(0.0, std::sqrt(2.0));
  const auto sf = ScaleFunction::build(m, 0.04);
  CHECK(sf.phi() == Approx(0.2).epsilon(1e-12));
  for (double x : {0.0, 0.1, 1.0, 5.0, 30.0}) {
    const double want = (std::exp(0.2 * x) - std::exp(-0.2 * x)) / 0.4;
    CHECK(sf.W(x) == Approx(want).epsilon(1e-12).scale(1e-12));
  }
  const oracle::BrownianW ref(0.3, 1.0, 0.1);
  const auto sf2 = ScaleFunction::build(LevyModel::brownian_drift(0.3, 1.0), 0.1);
  for (double x : {0.05, 0.5, 2.0, 10.0}) {
    CHECK(oracle::rel_err(sf2.W(x), ref.W(x)) < 1e-12);
    CHECK(oracle::rel_err(sf2.W_prime(x), ref.W_prime(x)) < 1e-12);
    CHECK(oracle::rel_err(sf2.W_bar(x), ref.W_bar(x)) < 1e-12);
    CHECK(oracle::rel_err(sf2.Z(x), ref.Z(x)) < 1e-12);
  }
}

TEST_CASE("values on and below zero") {
  const auto& sf = ref_sf();
  CHECK(sf.W(-1.0) == 0.0);
  CHECK(sf.W_bar(-1.0) == 0.0);
  CHECK(sf.Z(-2.0) == 1.0);
  CHECK(sf.Z_bar(-2.0) == -2.0);
  CHECK(sf.Z(0.0) == 1.0);
  CHECK(sf.Z_bar(0.0) == 0.0);
  CHECK(sf.R(0.0) == Approx(oracle::ref_model().mean() / oracle::kQ).epsilon(1e-14));
  CHECK(sf.W_phi(-1.0) == 0.0);
  // Unbounded variation with sigma = 0.2.
  CHECK(sf.W(0.0) == 0.0);
  CHECK(sf.W_at_zero() == 0.0);
  CHECK(sf.W_prime(0.0, Side::Right) == Approx(2.0 / (0.2 * 0.2)).epsilon(1e-14));
  CHECK(sf.W_prime_at_zero() == Approx(50.0).epsilon(1e-14));
}

TEST_CASE("bounded variation starts at 1/delta") {
  const double c = 0.8, rate = 1.0, eta = 2.0, q = 0.05;
  const auto m = LevyModel::hyper_exponential(c, 0.0, {{rate, eta}});
  const auto sf = ScaleFunction::build(m, q);
  const double delta = m.bv_drift();
  CHECK(sf.W_at_zero() == Approx(1.0 / delta).epsilon(1e-13));
  CHECK(sf.W(0.0) == Approx(1.0 / delta).epsilon(1e-13));
  // Finite jump measure: W'(0+) = (q + nu(R)) / delta^2.
  CHECK(sf.W_prime_at_zero() == Approx((q + rate) / (delta * delta)).epsilon(1e-12));
  CHECK(sf.W_prime(1e-7) == Approx(sf.W_prime_at_zero()).epsilon(1e-5));

  const auto bv_beta = LevyModel::beta_family({0.1, 3.0, 1.0, 0.1, 1.5}, 0.0);
  ScaleOptions opt;
  opt.strict_truncation = false;
  const auto sfb = ScaleFunction::build(bv_beta, 0.03, opt);
  CHECK(sfb.W_at_zero() == Approx(1.0 / 0.1).epsilon(1e-12));
}

TEST_CASE("Z from quadrature of W") {
  const double q = 0.1;
  const auto sf = ScaleFunction::build(LevyModel::brownian_drift(0.3, 1.0), q);
  const double integral = oracle::quad([&](double y) { return sf.W(y); }, 0.0, 1.0, 1e-12);
  CHECK(sf.Z(1.0) == Approx(1.0 + q * integral).epsilon(1e-10));
  const auto& p = ref_sf();
  for (double x : {0.3, 1.0, 4.0}) {
    const double wb = oracle::quad_split([&](double y) { return p.W(y); }, 0.0, x, {1e-3, 0.05}, 1e-9);
    CHECK(oracle::rel_err(p.W_bar(x), wb) < 1e-9);
    const double zb =
        x + oracle::kQ * oracle::quad_split([&](double y) { return p.W_bar(y); }, 0.0, x, {0.05}, 1e-9);
    CHECK(oracle::rel_err(p.Z_bar(x), zb) < 1e-9);
  }
}

TEST_CASE("W_phi is increasing towards 1/psi'(Phi)") {
  const auto& sf = ref_sf();
  const double limit = 1.0 / oracle::ref_model().psi_prime(sf.phi());
  CHECK(sf.psi_prime_phi() == Approx(oracle::ref_model().psi_prime(sf.phi())).epsilon(1e-14));
  CHECK(std::abs(sf.W_phi(50.0) - limit) < 1e-4);
  double prev = sf.W_phi(0.0);
  for (double x = 0.5; x <= 50.0; x += 0.5) {
    const double w = sf.W_phi(x);
    CHECK(w >= prev);
    prev = w;
  }
}

TEST_CASE("Laplace transform identity") {
  const auto m = oracle::ref_model();
  const auto& sf = ref_sf();
  for (double ds : {0.5, 1.0, 2.0}) {
    const double s = sf.phi() + ds;
    CHECK(oracle::rel_err(laplace(sf, s), 1.0 / (m.psi(s) - oracle::kQ)) < 1e-5);
  }
  SUBCASE("K = 30 without strict truncation") {
    ScaleOptions opt;
    opt.K = 30;
    opt.strict_truncation = false;
    const auto sf30 = ScaleFunction::build(m, oracle::kQ, opt);
    for (double ds : {0.5, 1.0, 2.0}) {
      const double s = sf30.phi() + ds;
      CHECK(oracle::rel_err(laplace(sf30, s), 1.0 / (m.psi(s) - oracle::kQ)) < 1e-5);
    }
  }
}

TEST_CASE("hyperexponential matches partial fractions") {
  const double c = 0.4, sigma = 0.5, rate = 1.2, eta = 3.0, q = 0.07;
  const auto m = LevyModel::hyper_exponential(c, sigma, {{rate, eta}});
  const auto sf = ScaleFunction::build(m, q);
  const oracle::HyperExpW ref(oracle::hyper_linear_coefficient(c, rate, eta), sigma, rate, eta, q);
  CHECK(sf.phi() == Approx(ref.roots[0]).epsilon(1e-12));
  REQUIRE(sf.roots().size() == 2);
  CHECK(sf.roots()[0] == Approx(-ref.roots[1]).epsilon(1e-11));
  CHECK(sf.roots()[1] == Approx(-ref.roots[2]).epsilon(1e-11));
  CHECK(sf.W(0.0) == 0.0);
  CHECK(std::abs(ref.W(0.0)) < 1e-14);
  for (double x : {0.01, 0.3, 1.0, 5.0, 20.0}) CHECK(oracle::rel_err(sf.W(x), ref.W(x)) < 1e-10);
}

TEST_CASE("roots interlace with the poles") {
  const auto& sf = ref_sf();
  const auto& xi = sf.roots();
  const auto& eta = sf.poles();
  REQUIRE(xi.size() >= 10);
  CHECK(xi[0] > 0.0);
  for (std::size_t k = 0; k + 1 < xi.size() && k < eta.size(); ++k) {
    CHECK(xi[k] < eta[k]);
    CHECK(eta[k] < xi[k + 1]);
  }
  const auto m = oracle::ref_model();
  // Root error estimated from the residual and the local slope.
  for (std::size_t k : {0u, 1u, 10u, 100u, 999u})
    CHECK(std::abs(m.psi(-xi[k]) - oracle::kQ) / std::abs(m.psi_prime(-xi[k])) < 1e-12 * std::max(1.0, xi[k]));
}

TEST_CASE("W is nonnegative, nondecreasing and log-concave") {
  const std::vector<ScaleFunction> sfs = {
      ref_sf(),
      ScaleFunction::build(LevyModel::brownian_drift(0.3, 1.0), 0.1),
      ScaleFunction::build(LevyModel::hyper_exponential(0.8, 0.0, {{1.0, 2.0}}), 0.05),
  };
  for (const auto& sf : sfs) {
    double prev_w = 0.0, prev_ratio = std::numeric_limits<double>::infinity();
    for (double x = 0.02; x <= 15.0; x += 0.02) {
      const double w = sf.W(x);
      CHECK(w >= prev_w);
      const double ratio = sf.W_prime(x, Side::Right) / w;
      CHECK(ratio <= prev_ratio * (1 + 1e-10));
      prev_w = w;
      prev_ratio = ratio;
    }
  }
}

TEST_CASE("derivatives agree with finite differences") {
  const auto& sf = ref_sf();
  const double h = 1e-5;
  for (double x : {0.05, 0.3, 1.0, 3.0, 8.0}) {
    CHECK(oracle::rel_err(sf.W_prime(x), (sf.W(x + h) - sf.W(x - h)) / (2 * h)) < 1e-7);
    CHECK(oracle::rel_err(sf.W_second(x), (sf.W_prime(x + h) - sf.W_prime(x - h)) / (2 * h)) < 1e-5);
    CHECK(oracle::rel_err(sf.iterated(1, x), sf.W_bar(x)) < 1e-13);
    CHECK(oracle::rel_err(sf.iterated(2, x + h) - sf.iterated(2, x - h), 2 * h * sf.W_bar(x)) < 1e-6);
  }
}

TEST_CASE("log-scaled evaluation beyond overflow") {
  const auto& sf = ref_sf();
  const auto small = sf.W_log(5.0);
  CHECK(std::exp(small.log_scale) * small.mantissa == Approx(sf.W(5.0)).epsilon(1e-13));
  const double x = 600.0;  // Phi x is far above the double range
  const auto big = sf.W_log(x);
  CHECK(std::isfinite(big.log_scale));
  CHECK(big.mantissa > 0.0);
  const double want = sf.phi() * x - std::log(sf.psi_prime_phi());
  CHECK(big.log_scale + std::log(big.mantissa) == Approx(want).epsilon(1e-12));
}

TEST_CASE("doubling the series length is a no-op at the default") {
  const auto m = oracle::ref_model();
  ScaleOptions o1, o2;
  o2.K = 2 * o1.K;
  const auto a = ScaleFunction::build(m, oracle::kQ, o1);
  const auto b = ScaleFunction::build(m, oracle::kQ, o2);
  double worst = 0.0;
  for (double x = 0.01; x <= 20.0; x *= 1.1) worst = std::max(worst, oracle::rel_err(a.W(x), b.W(x)));
  CHECK(worst < 1e-8);
}

TEST_CASE("coefficient methods agree") {
  const auto m = oracle::ref_model();
  ScaleOptions prod;
  prod.method = CoefficientMethod::Product;
  const auto a = ScaleFunction::build(m, oracle::kQ, prod);
  const auto& b = ref_sf();
  for (double x = 0.01; x <= 20.0; x *= 1.3) CHECK(oracle::rel_err(a.W(x), b.W(x)) < 1e-5);
}

TEST_CASE("truncation is flagged or rejected") {
  const auto m = oracle::ref_model();
  ScaleOptions opt;
  opt.K = 20;
  opt.tail_correction = false;
  CHECK_THROWS_AS(ScaleFunction::build(m, oracle::kQ, opt), ConvergenceError);
  opt.strict_truncation = false;
  const auto sf = ScaleFunction::build(m, oracle::kQ, opt);
  CHECK(sf.truncation_flagged());
  CHECK(sf.truncation_indicator() > opt.tail_tol);
  CHECK(ref_sf().truncation_indicator() <= ScaleOptions{}.tail_tol);
  CHECK_THROWS_AS(ScaleFunction::build(m, -1.0), ConfigError);
}
