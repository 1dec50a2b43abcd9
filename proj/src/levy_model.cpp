#include "levyctl/levy_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "levyctl/errors.hpp"
#include "levyctl/numerics.hpp"
#include "levyctl/special.hpp"

namespace levyctl {

namespace {

constexpr double kPoleTol = 1e-8;
constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

std::string to_string(LevyKind k) {
  switch (k) {
    case LevyKind::BrownianDrift: return "BrownianDrift";
    case LevyKind::HyperExponential: return "HyperExponential";
    case LevyKind::BetaFamily: return "BetaFamily";
  }
  return "?";
}

std::string to_string(Variation v) { return v == Variation::Bounded ? "Bounded" : "Unbounded"; }

LevyModel LevyModel::brownian_drift(double c, double sigma) {
  require(std::isfinite(c), "drift c must be finite");
  require(std::isfinite(sigma) && sigma >= 0.0, "sigma must be >= 0");
  LevyModel m;
  m.kind_ = LevyKind::BrownianDrift;
  m.c_ = c;
  m.sigma_ = sigma;
  m.finish();
  return m;
}

LevyModel LevyModel::drift_only(double c) {
  require(std::isfinite(c), "drift c must be finite");
  LevyModel m;
  m.kind_ = LevyKind::BrownianDrift;
  m.c_ = c;
  m.gen_drift_ = c;
  return m;
}

LevyModel LevyModel::hyper_exponential(double c, double sigma, std::vector<ExpJump> jumps) {
  require(std::isfinite(c), "drift c must be finite");
  require(std::isfinite(sigma) && sigma >= 0.0, "sigma must be >= 0");
  require(!jumps.empty(), "hyperexponential model needs at least one jump term");
  for (const auto& j : jumps) {
    require(std::isfinite(j.rate) && j.rate > 0.0, "jump rate must be > 0");
    require(std::isfinite(j.eta) && j.eta > 0.0, "jump scale eta must be > 0");
  }
  std::sort(jumps.begin(), jumps.end(), [](auto& x, auto& y) { return x.eta < y.eta; });
  std::vector<ExpJump> merged;
  for (const auto& j : jumps) {
    if (!merged.empty() && merged.back().eta == j.eta)
      merged.back().rate += j.rate;
    else
      merged.push_back(j);
  }
  LevyModel m;
  m.kind_ = LevyKind::HyperExponential;
  m.c_ = c;
  m.sigma_ = sigma;
  m.jumps_ = std::move(merged);
  m.finish();
  return m;
}

LevyModel LevyModel::beta_family(const BetaParams& p, double sigma) {
  require(std::isfinite(p.delta_hat), "delta_hat must be finite");
  require(std::isfinite(p.alpha) && p.alpha > 0.0, "alpha must be > 0");
  require(std::isfinite(p.beta) && p.beta > 0.0, "beta must be > 0");
  require(std::isfinite(p.varpi) && p.varpi >= 0.0, "varpi must be >= 0");
  require(std::isfinite(p.lambda) && p.lambda > 0.0 && p.lambda < 3.0 && p.lambda != 1.0 &&
              p.lambda != 2.0,
          "lambda must lie in (0,3) excluding 1 and 2");
  require(std::isfinite(sigma) && sigma >= 0.0, "sigma must be >= 0");
  LevyModel m;
  m.kind_ = LevyKind::BetaFamily;
  m.bp_ = p;
  m.sigma_ = sigma;
  m.beta_b0_ = beta_fn(p.alpha, 1.0 - p.lambda);
  m.finish();
  return m;
}

void LevyModel::finish() {
  if (kind_ == LevyKind::BetaFamily) {
    // c = psi'(0) + int_{-inf}^{-1} |z| nu(dz)
    const double far = integrate([this](double y) { return y * levy_density(-y); }, 1.0, kInf)
                           .value;
    gen_drift_ = psi_prime(0.0) + far;
  } else {
    gen_drift_ = c_;
  }
  if (variation() == Variation::Bounded && !(bv_drift() > 0.0))
    throw AssumptionViolation(
        "bounded-variation model with non-positive drift is the negative of a subordinator");
}

double LevyModel::beta_jump_part(double s) const {
  const double x = bp_.alpha + s / bp_.beta;
  return (bp_.varpi / bp_.beta) * (beta_fn(x, 1.0 - bp_.lambda, kPoleTol) - beta_b0_);
}

double LevyModel::psi(double s) const {
  if (s == 0.0) return 0.0;
  double v = 0.5 * sigma_ * sigma_ * s * s;
  switch (kind_) {
    case LevyKind::BrownianDrift:
      v += c_ * s;
      break;
    case LevyKind::HyperExponential:
      v += c_ * s;
      for (const auto& j : jumps_) {
        if (std::abs(j.eta + s) < 1e-14 * j.eta)
          throw DomainError("psi evaluated at a pole of the hyperexponential model");
        const double m1 = -std::expm1(-j.eta) / j.eta - std::exp(-j.eta);
        v += j.rate * (-s / (j.eta + s) + s * m1);
      }
      break;
    case LevyKind::BetaFamily:
      v += bp_.delta_hat * s;
      if (bp_.varpi > 0.0) v += beta_jump_part(s);
      break;
  }
  return v;
}

double LevyModel::psi_prime(double s) const {
  double v = sigma_ * sigma_ * s;
  switch (kind_) {
    case LevyKind::BrownianDrift:
      v += c_;
      break;
    case LevyKind::HyperExponential:
      v += c_;
      for (const auto& j : jumps_) {
        if (std::abs(j.eta + s) < 1e-14 * j.eta)
          throw DomainError("psi' evaluated at a pole of the hyperexponential model");
        const double m1 = -std::expm1(-j.eta) / j.eta - std::exp(-j.eta);
        v += j.rate * (-j.eta / ((j.eta + s) * (j.eta + s)) + m1);
      }
      break;
    case LevyKind::BetaFamily: {
      v += bp_.delta_hat;
      if (bp_.varpi > 0.0) {
        const double x = bp_.alpha + s / bp_.beta;
        const double y = x + 1.0 - bp_.lambda;
        const double b = beta_fn(x, 1.0 - bp_.lambda, kPoleTol);
        v += bp_.varpi / (bp_.beta * bp_.beta) * b * (digamma(x) - digamma(y));
      }
      break;
    }
  }
  return v;
}

double LevyModel::psi_second(double s) const {
  double v = sigma_ * sigma_;
  switch (kind_) {
    case LevyKind::BrownianDrift:
      break;
    case LevyKind::HyperExponential:
      for (const auto& j : jumps_) {
        const double d = j.eta + s;
        v += j.rate * 2.0 * j.eta / (d * d * d);
      }
      break;
    case LevyKind::BetaFamily:
      if (bp_.varpi > 0.0) {
        const double x = bp_.alpha + s / bp_.beta;
        const double y = x + 1.0 - bp_.lambda;
        const double b = beta_fn(x, 1.0 - bp_.lambda, kPoleTol);
        const double d = digamma(x) - digamma(y);
        v += bp_.varpi / (bp_.beta * bp_.beta * bp_.beta) * b *
             (d * d + trigamma(x) - trigamma(y));
      }
      break;
  }
  return v;
}

double LevyModel::phi(double q) const {
  if (!(q > 0.0) || !std::isfinite(q)) throw ConfigError("q must be > 0");
  // psi is convex with psi(0) = 0 < q, so psi - q has a single positive root.
  double hi = 1.0;
  int expansions = 0;
  while (psi(hi) <= q) {
    hi *= 2.0;
    if (++expansions > 1100) throw ConvergenceError("cannot bracket Phi(q)");
  }
  double lo = 0.0;
  // Newton from the right end of a convex function decreases monotonically to the root;
  // bisection keeps the iterate inside the bracket if rounding disturbs that.
  double s = hi;
  for (int it = 0; it < 200; ++it) {
    const double g = psi(s) - q;
    if (g == 0.0) return s;
    if (g > 0)
      hi = s;
    else
      lo = s;
    const double d = psi_prime(s);
    double next = (d > 0.0) ? s - g / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) <= 1e-15 * std::max(1.0, std::abs(s))) {
      s = next;
      break;
    }
    s = next;
  }
  if (std::abs(psi(s) - q) > 1e-12 * q)
    throw ConvergenceError("Phi(q) root finder did not converge");
  return s;
}

Variation LevyModel::variation() const {
  if (sigma_ > 0.0) return Variation::Unbounded;
  if (kind_ == LevyKind::BetaFamily && bp_.varpi > 0.0 && bp_.lambda > 2.0)
    return Variation::Unbounded;
  return Variation::Bounded;
}

bool LevyModel::infinite_activity() const {
  return kind_ == LevyKind::BetaFamily && bp_.varpi > 0.0 && bp_.lambda > 1.0;
}

bool LevyModel::has_jumps() const {
  switch (kind_) {
    case LevyKind::BrownianDrift: return false;
    case LevyKind::HyperExponential: return true;
    case LevyKind::BetaFamily: return bp_.varpi > 0.0;
  }
  return false;
}

double LevyModel::bv_drift() const {
  switch (kind_) {
    case LevyKind::BrownianDrift: return c_;
    case LevyKind::HyperExponential: {
      double d = c_;
      for (const auto& j : jumps_) d += j.rate * (-std::expm1(-j.eta) / j.eta - std::exp(-j.eta));
      return d;
    }
    case LevyKind::BetaFamily:
      if (bp_.varpi > 0.0 && bp_.lambda > 2.0) return kInf;
      return bp_.delta_hat;
  }
  return c_;
}

double LevyModel::levy_density(double z) const {
  if (!(z < 0.0) || std::isinf(z)) return 0.0;
  switch (kind_) {
    case LevyKind::BrownianDrift: return 0.0;
    case LevyKind::HyperExponential: {
      double v = 0.0;
      for (const auto& j : jumps_) v += j.rate * j.eta * std::exp(j.eta * z);
      return v;
    }
    case LevyKind::BetaFamily: {
      if (bp_.varpi == 0.0) return 0.0;
      const double bz = bp_.beta * z;
      return bp_.varpi * std::exp(bp_.alpha * bz - bp_.lambda * std::log(-std::expm1(bz)));
    }
  }
  return 0.0;
}

// y^k nu(-y) computed in log space so tiny y neither overflows nor yields inf * 0.
double LevyModel::weighted_beta_density(double y, int k) const {
  if (!(y > 1e-300) || std::isinf(y)) return 0.0;
  const double by = bp_.beta * y;
  return bp_.varpi *
         std::exp(k * std::log(y) - bp_.alpha * by - bp_.lambda * std::log(-std::expm1(-by)));
}

double LevyModel::tail_mass(double eps) const {
  switch (kind_) {
    case LevyKind::BrownianDrift: return 0.0;
    case LevyKind::HyperExponential: {
      double v = 0.0;
      for (const auto& j : jumps_) v += j.rate * std::exp(-j.eta * std::max(eps, 0.0));
      return v;
    }
    case LevyKind::BetaFamily: {
      if (bp_.varpi == 0.0) return 0.0;
      if (eps <= 0.0) {
        if (infinite_activity()) return kInf;
        return (bp_.varpi / bp_.beta) * beta_b0_;
      }
      // substitute y = e^t on (eps, 1) to tame the singularity, plain on (1, inf)
      double v = 0.0;
      if (eps < 1.0)
        v += integrate([this](double t) { return weighted_beta_density(std::exp(t), 1); },
                       std::log(eps), 0.0).value;
      v += integrate([this](double y) { return levy_density(-y); }, std::max(eps, 1.0), kInf)
               .value;
      return v;
    }
  }
  return 0.0;
}

double LevyModel::small_jump_second_moment(double eps) const {
  if (eps <= 0.0) return 0.0;
  switch (kind_) {
    case LevyKind::BrownianDrift: return 0.0;
    case LevyKind::HyperExponential: {
      double v = 0.0;
      for (const auto& j : jumps_) {
        const double x = j.eta * eps;
        v += j.rate * (2.0 - std::exp(-x) * (x * x + 2.0 * x + 2.0)) / (j.eta * j.eta);
      }
      return v;
    }
    case LevyKind::BetaFamily:
      if (bp_.varpi == 0.0) return 0.0;
      return integrate([this](double t) { return weighted_beta_density(std::exp(t), 3); }, -kInf,
                       std::log(eps)).value;
  }
  return 0.0;
}

double LevyModel::mid_jump_first_moment(double eps) const {
  if (eps >= 1.0) return 0.0;
  eps = std::max(eps, 0.0);
  switch (kind_) {
    case LevyKind::BrownianDrift: return 0.0;
    case LevyKind::HyperExponential: {
      double v = 0.0;
      for (const auto& j : jumps_)
        v += j.rate * ((1.0 + j.eta * eps) * std::exp(-j.eta * eps) -
                       (1.0 + j.eta) * std::exp(-j.eta)) / j.eta;
      return v;
    }
    case LevyKind::BetaFamily: {
      if (bp_.varpi == 0.0) return 0.0;
      if (eps == 0.0 && variation() == Variation::Unbounded) return kInf;
      const double lo = eps > 0.0 ? std::log(eps) : -kInf;
      return integrate([this](double t) { return weighted_beta_density(std::exp(t), 2); }, lo, 0.0)
          .value;
    }
  }
  return 0.0;
}

std::vector<double> LevyModel::pole_scales(std::size_t count) const {
  std::vector<double> out;
  if (kind_ == LevyKind::HyperExponential) {
    for (std::size_t i = 0; i < jumps_.size() && i < count; ++i) out.push_back(jumps_[i].eta);
  } else if (kind_ == LevyKind::BetaFamily && bp_.varpi > 0.0) {
    for (std::size_t k = 1; k <= count; ++k)
      out.push_back(bp_.beta * (bp_.alpha + static_cast<double>(k) - 1.0));
  }
  return out;
}

}  // namespace levyctl
