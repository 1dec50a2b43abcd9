#include "levyctl/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

// Boost 1.74 pchip calls isnan unqualified.
#include <math.h>
#include <boost/math/interpolators/pchip.hpp>

#include "levyctl/errors.hpp"
#include "levyctl/numerics.hpp"

namespace levyctl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kTablePoints = 4096;

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError("sim: " + msg);
}

Estimate estimate(const std::vector<double>& v) {
  const std::size_t n = v.size();
  Estimate e;
  if (n == 0) return e;
  e.mean = pairwise_sum(v.data(), n) / static_cast<double>(n);
  if (n > 1) {
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = (v[i] - e.mean) * (v[i] - e.mean);
    e.se = std::sqrt(pairwise_sum(d.data(), n) / static_cast<double>(n - 1) /
                     static_cast<double>(n));
  }
  return e;
}

// Runs body(path) for every path, split into contiguous blocks per thread.
template <class Body>
void for_paths(std::int64_t n, int threads, Body&& body) {
  threads = std::max(1, static_cast<int>(std::min<std::int64_t>(threads, n)));
  if (threads == 1) {
    for (std::int64_t p = 0; p < n; ++p) body(p);
    return;
  }
  std::vector<std::thread> pool;
  const std::int64_t chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::int64_t lo = t * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (std::int64_t p = lo; p < hi; ++p) body(p);
    });
  }
  for (auto& th : pool) th.join();
}

// Minimum and maximum of a Brownian bridge from y0 to y1 with variance s2 over the step.
double bridge_min(double y0, double y1, double s2, Philox& rng) {
  const double d = y1 - y0;
  return 0.5 * (y0 + y1 - std::sqrt(d * d - 2.0 * s2 * std::log(rng.uniform())));
}
double bridge_max(double y0, double y1, double s2, Philox& rng) {
  const double d = y1 - y0;
  return 0.5 * (y0 + y1 + std::sqrt(d * d - 2.0 * s2 * std::log(rng.uniform())));
}

}  // namespace

void SimConfig::validate(double q) const {
  require(n_paths >= 1, "n_paths must be >= 1");
  require(std::isfinite(dt) && dt > 0.0, "dt must be > 0");
  require(std::isfinite(q) && q > 0.0, "q must be > 0");
  require(dt <= 0.01 / q * (1.0 + 1e-12), "dt must be <= 0.01/q");
  require(std::isfinite(horizon) && horizon >= dt, "horizon must be >= dt");
  require(std::exp(-q * horizon) <= 0.01, "horizon too short: exp(-q T) must be <= 0.01");
  require(std::isfinite(small_jump_cutoff) && small_jump_cutoff > 0.0 && small_jump_cutoff < 1.0,
          "small_jump_cutoff must lie in (0, 1)");
  require(histogram_bins >= 1, "histogram_bins must be >= 1");
  require(threads >= 1, "threads must be >= 1");
}

// Inverse CDF of |z| for beta-family jumps beyond the cutoff. The abscissa is
// s = -log(tail fraction), which stays well resolved at both ends.
struct IncrementSampler::Table {
  boost::math::interpolators::pchip<std::vector<double>> inv;
  double s_max;
  double y_max;
  double tail_rate;
};

IncrementSampler::IncrementSampler(const LevyModel& model, double dt, double cutoff,
                                   SmallJumpMode mode)
    : model_(&model), dt_(dt), sqrt_dt_(std::sqrt(dt)) {
  if (!(dt > 0.0)) throw ConfigError("sim: dt must be > 0");
  drift_ = model.generator_drift();
  diffusion_ = model.sigma();
  switch (model.kind()) {
    case LevyKind::BrownianDrift: break;
    case LevyKind::HyperExponential: {
      drift_ += model.mid_jump_first_moment(0.0);
      double acc = 0.0;
      for (const auto& j : model.hyper_jumps()) {
        acc += j.rate;
        hyper_cdf_.push_back(acc);
      }
      jump_rate_ = acc;
      break;
    }
    case LevyKind::BetaFamily: {
      if (model.beta_params().varpi == 0.0) break;
      cutoff_ = cutoff;
      drift_ += model.mid_jump_first_moment(cutoff);
      if (mode == SmallJumpMode::GaussianApprox)
        diffusion_ = std::sqrt(diffusion_ * diffusion_ + model.small_jump_second_moment(cutoff));
      jump_rate_ = model.tail_mass(cutoff);
      const auto& p = model.beta_params();
      const double ab = p.alpha * p.beta;
      const double y_max =
          std::max(2.0 * cutoff + 1.0, std::log(p.varpi / (ab * 1e-15 * jump_rate_)) / ab);
      const auto dens = [&model](double y) { return model.levy_density(-y); };
      std::vector<double> y(kTablePoints);
      for (int i = 0; i < kTablePoints; ++i)
        y[i] = cutoff * std::pow(y_max / cutoff, static_cast<double>(i) / (kTablePoints - 1));
      std::vector<double> tail(kTablePoints);
      const double abs_tol = 1e-17 * jump_rate_;
      const double beyond = integrate(dens, y_max, kInf, {}, 1e-12, abs_tol).value;
      tail[kTablePoints - 1] = beyond;
      for (int i = kTablePoints - 2; i >= 0; --i)
        tail[i] = tail[i + 1] + integrate(dens, y[i], y[i + 1], {}, 1e-12, abs_tol).value;
      jump_rate_ = tail[0];
      std::vector<double> s(kTablePoints), logy(kTablePoints);
      for (int i = 0; i < kTablePoints; ++i) {
        s[i] = -std::log(tail[i] / tail[0]);
        logy[i] = std::log(y[i]);
      }
      const double s_max = s.back();
      // Beyond y_max the density is exponential with rate alpha*beta to machine precision.
      table_.reset(new Table{boost::math::interpolators::pchip<std::vector<double>>(
                                 std::move(s), std::move(logy)),
                             s_max, y_max, ab});
      break;
    }
  }
}

IncrementSampler::~IncrementSampler() = default;
IncrementSampler::IncrementSampler(IncrementSampler&&) noexcept = default;

double IncrementSampler::draw_jump(Philox& rng) const {
  if (table_) {
    const double s = rng.exponential();
    if (s >= table_->s_max) return -(table_->y_max + rng.exponential() / table_->tail_rate);
    return -std::exp(table_->inv(s));
  }
  const double u = rng.uniform() * jump_rate_;
  std::size_t j = std::upper_bound(hyper_cdf_.begin(), hyper_cdf_.end(), u) - hyper_cdf_.begin();
  j = std::min(j, hyper_cdf_.size() - 1);
  return -rng.exponential() / model_->hyper_jumps()[j].eta;
}

double IncrementSampler::jumps(Philox& rng) const {
  if (jump_rate_ <= 0.0) return 0.0;
  const long n = rng.poisson(jump_rate_ * dt_);
  double sum = 0.0;
  for (long i = 0; i < n; ++i) sum += draw_jump(rng);
  return sum;
}

double sample_increment(const LevyModel& model, double dt, Philox& rng, double cutoff,
                        SmallJumpMode mode) {
  return IncrementSampler(model, dt, cutoff, mode).sample(rng);
}

SimResult simulate_reflected(const LevyModel& model, double a, double b, double x0,
                             const SimConfig& cfg, const CostSpec& cost) {
  const double q = cost.q();
  cfg.validate(q);
  SimResult res;
  if (std::isinf(b) && b > 0.0) {
    b = a + 50.0 / model.phi(q);
    res.surrogate_upper = true;
  }
  if (!(std::isfinite(a) && std::isfinite(b) && a < b))
    throw ConfigError("sim: barriers must satisfy a < b");
  if (!std::isfinite(x0)) throw ConfigError("sim: x0 must be finite");
  res.a = a;
  res.b = b;
  res.x0 = x0;

  const IncrementSampler sampler(model, cfg.dt, cfg.small_jump_cutoff, cfg.small_jump_mode);
  const std::int64_t N = static_cast<std::int64_t>(std::ceil(cfg.horizon / cfg.dt - 1e-9));
  const std::int64_t P = cfg.n_paths;
  const int bins = cfg.histogram_bins;
  const double width = (b - a) / bins;
  const double step_disc = std::exp(-q * cfg.dt);
  const double s2dt = sampler.diffusion() * sampler.diffusion() * cfg.dt;
  const bool bridge = cfg.reflection == ReflectionScheme::BrownianBridge && s2dt > 0.0;
  const double CU = cost.C_U(), CD = cost.C_D();

  std::vector<double> cost_v(P), eu_v(P), ed_v(P), hit_v(P), lo_v(P), hi_v(P), both_v(P);
  std::vector<double> hist(static_cast<std::size_t>(P) * bins, 0.0);

  for_paths(P, cfg.threads, [&](std::int64_t p) {
    Philox rng(cfg.rng_seed, static_cast<std::uint64_t>(p));
    double* h = &hist[static_cast<std::size_t>(p) * bins];
    const auto bin_of = [&](double y) {
      return std::clamp(static_cast<int>((y - a) / width), 0, bins - 1);
    };
    double y = x0, U = 0.0, D = 0.0;
    if (y < a) {
      U = a - y;
      y = a;
    } else if (y > b) {
      D = y - b;
      y = b;
    }
    double lo = y, hi = y, disc = 1.0, fy = cost.f(y), running = 0.0;
    bool hit = D > 0.0;
    double both = 0.0;
    h[bin_of(y)] += 0.5 * cfg.dt;
    for (std::int64_t n = 0; n < N; ++n) {
      double dU = 0.0, dD = 0.0;
      if (bridge) {
        const double y1 = y + sampler.continuous(rng);
        dU = std::max(0.0, a - bridge_min(y, y1, s2dt, rng));
        dD = std::max(0.0, bridge_max(y, y1, s2dt, rng) - b);
        if (dU > 0.0 && dD > 0.0) {
          // Both barriers touched within one step: keep the side the endpoint lies on.
          if (y1 - a < b - y1)
            dD = 0.0;
          else
            dU = 0.0;
        }
        y = y1 + dU - dD;
        const double J = sampler.jumps(rng);
        y += J;
      } else {
        y += sampler.sample(rng);
      }
      if (y < a) {
        dU += a - y;
        y = a;
      } else if (y > b) {
        dD += y - b;
        y = b;
      }
      const double disc1 = disc * step_disc;
      const double f1 = cost.f(y);
      running += 0.5 * cfg.dt * (disc * fy + disc1 * f1);
      U += disc1 * dU;
      D += disc1 * dD;
      if (dD > 0.0) hit = true;
      if (dU > 0.0 && dD > 0.0) both += 1.0;
      h[bin_of(y)] += (n + 1 == N ? 0.5 : 1.0) * cfg.dt * disc1;
      lo = std::min(lo, y);
      hi = std::max(hi, y);
      disc = disc1;
      fy = f1;
    }
    cost_v[p] = running + CU * U + CD * D;
    eu_v[p] = U;
    ed_v[p] = D;
    hit_v[p] = hit ? 1.0 : 0.0;
    lo_v[p] = lo;
    hi_v[p] = hi;
    both_v[p] = both;
  });

  res.cost = estimate(cost_v);
  res.EU = estimate(eu_v);
  res.ED = estimate(ed_v);
  res.n_paths = P;
  res.steps = N;
  res.surrogate_hit_probability =
      res.surrogate_upper ? pairwise_sum(hit_v.data(), P) / static_cast<double>(P) : 0.0;
  res.min_state = *std::min_element(lo_v.begin(), lo_v.end());
  res.max_state = *std::max_element(hi_v.begin(), hi_v.end());
  res.both_controls_steps = static_cast<std::int64_t>(pairwise_sum(both_v.data(), P));
  std::vector<double> col(P);
  for (int k = 0; k < bins; ++k) {
    for (std::int64_t p = 0; p < P; ++p) col[p] = hist[static_cast<std::size_t>(p) * bins + k];
    const Estimate e = estimate(col);
    res.occupation.push_back({a + k * width, k + 1 == bins ? b : a + (k + 1) * width, e.mean, e.se});
  }
  return res;
}

ExitEstimate estimate_exit_functionals(const LevyModel& model, double x0, double b, double q,
                                       const SimConfig& cfg) {
  cfg.validate(q);
  if (!(std::isfinite(b) && b > 0.0 && x0 > 0.0 && x0 <= b))
    throw ConfigError("sim: exit functionals need 0 < x0 <= b");
  const IncrementSampler sampler(model, cfg.dt, cfg.small_jump_cutoff, cfg.small_jump_mode);
  const std::int64_t N = static_cast<std::int64_t>(std::ceil(cfg.horizon / cfg.dt - 1e-9));
  const std::int64_t P = cfg.n_paths;
  const double s2dt = sampler.diffusion() * sampler.diffusion() * cfg.dt;
  const double step_disc = std::exp(-q * cfg.dt);
  std::vector<double> up(P, 0.0), down(P, 0.0);

  for_paths(P, cfg.threads, [&](std::int64_t p) {
    if (x0 >= b) {
      up[p] = 1.0;
      return;
    }
    Philox rng(cfg.rng_seed, static_cast<std::uint64_t>(p));
    double y = x0, disc = 1.0;
    for (std::int64_t n = 0; n < N; ++n) {
      disc *= step_disc;
      double y1 = y + sampler.continuous(rng);
      bool hit_up = y1 >= b, hit_down = y1 <= 0.0;
      if (s2dt > 0.0) {
        // Crossing probabilities of the Brownian bridge between grid points.
        if (!hit_up) hit_up = rng.uniform() < std::exp(-2.0 * (b - y) * (b - y1) / s2dt);
        if (!hit_down) hit_down = rng.uniform() < std::exp(-2.0 * y * y1 / s2dt);
      }
      if (hit_up && hit_down) {
        if (y1 - 0.0 < b - y1)
          hit_up = false;
        else
          hit_down = false;
      }
      if (hit_up) {
        up[p] = disc;
        return;
      }
      if (hit_down) {
        down[p] = disc;
        return;
      }
      y = y1 + sampler.jumps(rng);
      if (y < 0.0) {
        down[p] = disc;
        return;
      }
    }
  });
  return {estimate(up), estimate(down)};
}

}  // namespace levyctl
