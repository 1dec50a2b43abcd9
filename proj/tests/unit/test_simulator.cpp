#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "levyctl/barrier_solver.hpp"
#include "levyctl/errors.hpp"
#include "levyctl/simulator.hpp"
#include "levyctl/value_function.hpp"
#include "oracles.hpp"

using namespace levyctl;
using doctest::Approx;

namespace {

using Words = std::array<std::uint32_t, 4>;

bool same_bits(double x, double y) { return std::memcmp(&x, &y, sizeof x) == 0; }

bool same(const SimResult& r, const SimResult& s) {
  bool ok = same_bits(r.cost.mean, s.cost.mean) && same_bits(r.cost.se, s.cost.se) &&
            same_bits(r.EU.mean, s.EU.mean) && same_bits(r.ED.mean, s.ED.mean) &&
            same_bits(r.min_state, s.min_state) && same_bits(r.max_state, s.max_state) &&
            r.occupation.size() == s.occupation.size();
  for (std::size_t k = 0; ok && k < r.occupation.size(); ++k)
    ok = same_bits(r.occupation[k].mass, s.occupation[k].mass) && same_bits(r.occupation[k].se, s.occupation[k].se);
  return ok;
}

// Brownian test bed: closed-form scale functions and the bridge scheme is exact in law.
const double qb = 0.1;
const LevyModel& bm() {
  static const LevyModel m = LevyModel::brownian_drift(0.3, 1.0);
  return m;
}

}  // namespace

TEST_CASE("Philox4x32-10 known-answer vectors") {
  CHECK(Philox::bijection({0, 0, 0, 0}, {0, 0}) == Words{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox::bijection({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        Words{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox::bijection({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        Words{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("Philox streams are reproducible and distinct") {
  Philox a(7, 3), b(7, 3), c(7, 4), d(8, 3);
  const auto x = a(), y = b(), z = c(), w = d();
  CHECK(x == y);
  CHECK(x != z);
  CHECK(x != w);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = a.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  CHECK(sum / 1e5 == Approx(0.5).epsilon(0.01));
}

TEST_CASE("hyperexponential increments have the exact first two moments") {
  // Finite activity is simulated exactly, so the moments are psi'(0) dt and psi''(0) dt.
  const auto m = LevyModel::hyper_exponential(0.8, 0.4, {{1.0, 2.0}, {0.5, 0.7}});
  const double dt = 0.5;
  const IncrementSampler s(m, dt, 1e-3, SmallJumpMode::DriftCompensate);
  Philox rng(11, 0);
  const int n = 400000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = s.sample(rng);
    s1 += x;
    s2 += x * x;
  }
  const double mean = s1 / n, var = s2 / n - mean * mean;
  const double want_var = m.psi_second(0.0) * dt;
  CHECK(std::abs(mean - m.psi_prime(0.0) * dt) < 4.0 * std::sqrt(want_var / n));
  CHECK(var == Approx(want_var).epsilon(0.02));
}

TEST_CASE("beta-family increments match the Laplace exponent") {
  const auto m = oracle::ref_model();
  Philox rng(5, 0);
  const int n = 20000;
  const double theta = 0.5;
  const IncrementSampler sampler(m, 1.0, 1e-2, SmallJumpMode::GaussianApprox);
  double acc = 0.0, acc2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = std::exp(theta * sampler.sample(rng));
    acc += e;
    acc2 += e * e;
  }
  const double mean = acc / n, se = std::sqrt((acc2 / n - mean * mean) / n);
  CHECK(std::abs(mean - std::exp(m.psi(theta))) < 4.0 * se + 1e-3);
  // The free function agrees with the sampler it wraps.
  Philox r1(9, 0), r2(9, 0);
  CHECK(sample_increment(m, 1.0, r1, 1e-2, SmallJumpMode::GaussianApprox) == sampler.sample(r2));
}

TEST_CASE("deterministic drift reflected at the lower barrier") {
  const auto m = LevyModel::drift_only(-0.2);
  const auto cost = CostSpec::quadratic(1.0, 1.0, 3.0, 4.0, qb);
  SimConfig cfg;
  cfg.n_paths = 3;
  cfg.dt = 0.01;
  cfg.horizon = 60.0;
  const auto r = simulate_reflected(m, -0.5, 1.0, -0.5, cfg, cost);
  const double rho = std::exp(-qb * cfg.dt);
  const double N = static_cast<double>(r.steps);
  const double discrete = 0.2 * cfg.dt * rho * (1.0 - std::pow(rho, N)) / (1.0 - rho);
  CHECK(r.EU.mean == Approx(discrete).epsilon(1e-11));
  CHECK(r.EU.mean == Approx((1.0 - std::exp(-qb * cfg.horizon)) * 0.2 / qb).epsilon(1e-3));
  CHECK(r.EU.se < 1e-12);
  CHECK(r.ED.mean == 0.0);
  CHECK(r.min_state == -0.5);
  CHECK(r.max_state == -0.5);
  const double running = cost.f(-0.5) * cfg.dt * (0.5 + rho * (1.0 - std::pow(rho, N - 1)) / (1.0 - rho) +
                                                   0.5 * std::pow(rho, N));
  CHECK(r.cost.mean == Approx(running + 3.0 * discrete).epsilon(1e-11));
}

TEST_CASE("reflection keeps the state in [a, b]") {
  const auto cost = CostSpec::quadratic(1.0, 1.0, 10.0, 10.0, oracle::kQ);
  SimConfig cfg;
  cfg.n_paths = 200;
  cfg.dt = 0.01;
  cfg.horizon = 160.0;
  for (auto scheme : {ReflectionScheme::Endpoint, ReflectionScheme::BrownianBridge}) {
    cfg.reflection = scheme;
    const auto r = simulate_reflected(oracle::ref_model(), -0.7, 0.9, 3.0, cfg, cost);
    CHECK(r.min_state >= -0.7);
    CHECK(r.max_state <= 0.9);
    CHECK(r.ED.mean >= 2.1);
    CHECK(r.EU.mean > 0.0);
    if (scheme == ReflectionScheme::Endpoint) CHECK(r.both_controls_steps == 0);
    double mass = 0.0;
    for (const auto& bin : r.occupation) mass += bin.mass;
    const double rho = std::exp(-oracle::kQ * cfg.dt);
    CHECK(mass == Approx(cfg.dt * (0.5 + rho * (1.0 - std::pow(rho, r.steps)) / (1.0 - rho) -
                                   0.5 * std::pow(rho, r.steps)))
                      .epsilon(1e-10));
  }
}

TEST_CASE("results do not depend on the thread count") {
  const auto cost = CostSpec::quadratic(1.0, 1.0, 10.0, 10.0, oracle::kQ);
  SimConfig cfg;
  cfg.n_paths = 37;
  cfg.dt = 0.05;
  cfg.horizon = 160.0;
  const auto r1 = simulate_reflected(oracle::ref_model(), -0.7, 0.9, 0.0, cfg, cost);
  cfg.threads = 3;
  const auto r3 = simulate_reflected(oracle::ref_model(), -0.7, 0.9, 0.0, cfg, cost);
  CHECK(same(r1, r3));
  cfg.rng_seed = 2;
  CHECK_FALSE(same(r1, simulate_reflected(oracle::ref_model(), -0.7, 0.9, 0.0, cfg, cost)));
}

TEST_CASE("the small-jump cutoff is inert without jumps") {
  const auto cost = CostSpec::quadratic(1.0, 1.0, 10.0, 10.0, qb);
  SimConfig cfg;
  cfg.n_paths = 50;
  cfg.dt = 0.01;
  cfg.horizon = 50.0;
  const auto r1 = simulate_reflected(bm(), -1.0, 1.0, 0.0, cfg, cost);
  cfg.small_jump_cutoff = 2e-3;
  CHECK(same(r1, simulate_reflected(bm(), -1.0, 1.0, 0.0, cfg, cost)));
}

TEST_CASE("exit functionals") {
  SimConfig cfg;
  cfg.n_paths = 4000;
  cfg.dt = 1e-3;
  cfg.horizon = 50.0;
  const auto at_b = estimate_exit_functionals(bm(), 2.0, 2.0, qb, cfg);
  CHECK(at_b.up.mean == 1.0);
  CHECK(at_b.down.mean == 0.0);

  const oracle::BrownianW w(0.3, 1.0, qb);
  const double b = 2.0;
  for (double x : {0.5, 1.0, 1.6}) {
    const auto e = estimate_exit_functionals(bm(), x, b, qb, cfg);
    const double up = w.W(x) / w.W(b), down = w.Z(x) - w.Z(b) * w.W(x) / w.W(b);
    CHECK(std::abs(e.up.mean - up) < 4.0 * e.up.se + 5e-3);
    CHECK(std::abs(e.down.mean - down) < 4.0 * e.down.se + 5e-3);
    CHECK(e.up.se > 0.0);
  }
}

TEST_CASE("Brownian bridge simulation reproduces the value function") {
  const auto cost = CostSpec::quadratic(1.0, 1.0, 10.0, 10.0, qb);
  const auto sf = ScaleFunction::build(bm(), qb);
  const auto sol = BarrierProblem(sf, cost).solve();
  const auto vf = ValueFunction::optimal(sf, cost, sol);
  SimConfig cfg;
  cfg.n_paths = 4000;
  cfg.dt = 0.01;
  cfg.horizon = 100.0;
  cfg.reflection = ReflectionScheme::BrownianBridge;
  cfg.histogram_bins = 8;
  for (double x0 : {sol.a_star, 0.5 * (sol.a_star + sol.b_star), sol.b_star + 0.5}) {
    const auto r = simulate_reflected(bm(), sol.a_star, sol.b_star, x0, cfg, cost);
    const auto e = vf.expected_discounted_controls(x0);
    CHECK(std::abs(r.cost.mean - vf.value(x0)) < 4.0 * r.cost.se + 2e-3 * vf.value(x0));
    CHECK(std::abs(r.EU.mean - e.EU) < 4.0 * r.EU.se + 1e-2 * e.EU);
    CHECK(std::abs(r.ED.mean - e.ED) < 4.0 * r.ED.se + 1e-2 * e.ED);
    if (x0 == sol.a_star) {
      for (const auto& bin : r.occupation) {
        const double want = oracle::quad([&](double y) { return vf.resolvent_density(x0, y).density; },
                                         bin.left, bin.right, 1e-10);
        CHECK(std::abs(bin.mass - want) < 4.0 * bin.se + 2e-3 * want);
      }
    }
  }
}

TEST_CASE("single-barrier policies use a surrogate upper barrier") {
  const auto cost = CostSpec::linear(1.0, 1.0, 2.0, 15.0, qb);
  const auto sf = ScaleFunction::build(bm(), qb);
  const auto sol = BarrierProblem(sf, cost).solve();
  REQUIRE(sol.case_tag == CaseTag::Case2);
  SimConfig cfg;
  cfg.n_paths = 500;
  cfg.dt = 0.01;
  cfg.horizon = 50.0;
  const auto r = simulate_reflected(bm(), sol.a_star, sol.b_star, 0.0, cfg, cost);
  CHECK(r.surrogate_upper);
  CHECK(r.b == Approx(sol.a_star + 50.0 / sf.phi()));
  CHECK(r.surrogate_hit_probability < 1e-3);
  CHECK(r.counts());
}

TEST_CASE("configuration validation") {
  const auto cost = CostSpec::quadratic(1.0, 1.0, 10.0, 10.0, qb);
  auto bad = [&](auto mutate) {
    SimConfig cfg;
    cfg.horizon = 50.0;
    mutate(cfg);
    return cfg;
  };
  CHECK_THROWS_AS(bad([](SimConfig& c) { c.n_paths = 0; }).validate(qb), ConfigError);
  CHECK_THROWS_AS(bad([](SimConfig& c) { c.dt = 0.2; }).validate(qb), ConfigError);
  CHECK_THROWS_AS(bad([](SimConfig& c) { c.horizon = 10.0; }).validate(qb), ConfigError);
  CHECK_THROWS_AS(bad([](SimConfig& c) { c.small_jump_cutoff = 1.5; }).validate(qb), ConfigError);
  CHECK_THROWS_AS(bad([](SimConfig& c) { c.threads = 0; }).validate(qb), ConfigError);
  CHECK_THROWS_AS(bad([](SimConfig& c) { c.histogram_bins = 0; }).validate(qb), ConfigError);
  CHECK_NOTHROW(bad([](SimConfig&) {}).validate(qb));
  SimConfig cfg;
  cfg.horizon = 50.0;
  CHECK_THROWS_AS(simulate_reflected(bm(), 1.0, 1.0, 0.0, cfg, cost), ConfigError);
  CHECK_THROWS_AS(estimate_exit_functionals(bm(), 0.0, 1.0, qb, cfg), ConfigError);
  CHECK_THROWS_AS(estimate_exit_functionals(bm(), 2.0, 1.0, qb, cfg), ConfigError);
}
