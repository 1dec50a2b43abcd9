#include "levyctl/value_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "levyctl/errors.hpp"

namespace levyctl {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

ValueFunction ValueFunction::general(ScaleFunction sf, CostSpec cost, double a, double b) {
  if (!(b > a)) throw DomainError("value function needs a < b");
  ValueFunction v(std::move(sf), std::move(cost));
  v.mode_ = ValueMode::General;
  v.a_ = a;
  v.b_ = b;
  if (std::isfinite(b)) {
    v.Gamma_ = v.cost_.C_D() + v.cost_.C_U() +
               v.cost_.phi_conv(v.sf_, a, b, Integrand::FTildePrime, 0);
    v.W_ba_ = v.sf_.W(b - a);
  }
  v.va_ = v.inner_value(a);
  v.vb_ = std::isfinite(b) ? v.inner_value(b) : kInf;
  return v;
}

ValueFunction ValueFunction::optimal(ScaleFunction sf, CostSpec cost, const BarrierSolution& sol) {
  ValueFunction v(std::move(sf), std::move(cost));
  v.mode_ = ValueMode::Optimal;
  v.a_ = sol.a_star;
  v.b_ = sol.b_star;
  v.va_ = v.inner_value(v.a_);
  v.vb_ = std::isfinite(v.b_) ? v.inner_value(v.b_) : kInf;
  return v;
}

double ValueFunction::inner_value(double x) const {
  const double q = cost_.q(), y = x - a_;
  if (mode_ == ValueMode::Optimal)
    return -cost_.C_U() * (sf_.mean() / q + x) + cost_.f_tilde(a_) / q * sf_.Z(y) -
           cost_.phi_conv(sf_, a_, x, Integrand::FTilde, 0);
  double v = -cost_.C_U() * sf_.R(y) + cost_.f(a_) / q * sf_.Z(y) -
             cost_.phi_conv(sf_, a_, x, Integrand::F, 0);
  if (std::isfinite(b_)) v += Gamma_ / (q * W_ba_) * sf_.Z(y);
  return v;
}

double ValueFunction::inner_d1(double x) const {
  double d = -cost_.C_U() - cost_.phi_conv(sf_, a_, x, Integrand::FTildePrime, 0);
  if (mode_ == ValueMode::General && std::isfinite(b_)) d += Gamma_ * sf_.W(x - a_) / W_ba_;
  return d;
}

double ValueFunction::inner_d2(double x, Side side) const {
  double d = -cost_.phi_conv(sf_, a_, x, Integrand::FTildePrime, 1, side);
  if (mode_ == ValueMode::General && std::isfinite(b_))
    d += Gamma_ * sf_.W_prime(x - a_, Side::Right) / W_ba_;
  return d;
}

double ValueFunction::value(double x) const {
  if (x <= a_) return va_ - cost_.C_U() * (x - a_);
  if (x >= b_) return vb_ + cost_.C_D() * (x - b_);
  return inner_value(x);
}

double ValueFunction::derivative(double x, Side side) const {
  if (x < a_ || (x == a_ && side == Side::Left)) return -cost_.C_U();
  if (x > b_ || (x == b_ && side == Side::Right)) return cost_.C_D();
  return inner_d1(x);
}

double ValueFunction::second_derivative(double x, Side side) const {
  if (x < a_ || (x == a_ && side == Side::Left)) return 0.0;
  if (x > b_ || (x == b_ && side == Side::Right)) return 0.0;
  return inner_d2(x, side);
}

void ValueFunction::require_finite_b() const {
  if (!std::isfinite(b_)) throw DomainError("quantity needs a finite upper barrier");
}

ExpectedControls ValueFunction::expected_discounted_controls(double x) const {
  require_finite_b();
  const double q = cost_.q();
  const double xc = std::clamp(x, a_, b_);
  const double zx = sf_.Z(xc - a_), qw = q * sf_.W(b_ - a_);
  ExpectedControls e{-sf_.R(xc - a_) + sf_.Z(b_ - a_) * zx / qw, zx / qw};
  if (x < a_) e.EU += a_ - x;
  if (x > b_) e.ED += x - b_;
  return e;
}

ResolventValue ValueFunction::resolvent_density(double x, double y) const {
  require_finite_b();
  if (y < a_ || y > b_) return {0.0, 0.0};
  const double xc = std::clamp(x, a_, b_);
  const double k = sf_.Z(xc - a_) / (cost_.q() * sf_.W(b_ - a_));
  return {k * sf_.W_prime(b_ - y, Side::Right) - sf_.W(xc - y), k * sf_.W_at_zero()};
}

double ValueFunction::hjb_residual(const LevyModel& model, double x,
                                   const VerifyOptions& opt) const {
  const double v = value(x);
  const double v1 = derivative(x, Side::Right);
  const double v2 = second_derivative(x, Side::Right);
  const double s = model.sigma();
  double res = model.generator_drift() * v1 + 0.5 * s * s * v2 - cost_.q() * v + cost_.f(x);
  if (!model.has_jumps()) return res;

  const double eps = opt.eps_gen;
  // kinks of the integrand in the jump size y = -z
  std::vector<double> kinks;
  for (double barrier : {a_, b_})
    if (std::isfinite(barrier) && x - barrier > 0.0) kinks.push_back(x - barrier);

  // y >= 1: no compensator
  auto far = [&](double y) {
    const double nu = model.levy_density(-y);
    return nu == 0.0 ? 0.0 : (value(x - y) - v) * nu;
  };
  double J = integrate(far, 1.0, kInf, kinks, opt.quad_rel, opt.quad_abs).value;
  // eps < y < 1, in t = log y
  std::vector<double> tk;
  for (double k : kinks)
    if (k > eps && k < 1.0) tk.push_back(std::log(k));
  auto mid = [&](double t) {
    const double y = std::exp(t);
    const double nu = model.levy_density(-y);
    return nu == 0.0 ? 0.0 : (value(x - y) - v + v1 * y) * nu * y;
  };
  J += integrate(mid, std::log(eps), 0.0, tk, opt.quad_rel, opt.quad_abs).value;
  J += 0.5 * v2 * model.small_jump_second_moment(eps);
  return res + J;
}

std::vector<double> ValueFunction::verification_grid(const VerifyOptions& opt) const {
  const int n = opt.points_per_region;
  std::vector<double> xs;
  auto logspace = [](double lo, double hi, int m) {
    std::vector<double> v;
    for (int i = 0; i < m; ++i)
      v.push_back(lo * std::pow(hi / lo, m == 1 ? 0.0 : static_cast<double>(i) / (m - 1)));
    return v;
  };
  for (double d : logspace(1e-4 * opt.span, opt.span, n)) xs.push_back(a_ - d);
  if (std::isfinite(b_)) {
    const double L = b_ - a_;
    for (double d : logspace(1e-5 * L, 0.5 * L, n / 2)) xs.push_back(a_ + d);
    for (double d : logspace(1e-5 * L, 0.5 * L, n - n / 2 - 1)) xs.push_back(b_ - d);
    for (double d : logspace(1e-4 * opt.span, opt.span, n)) xs.push_back(b_ + d);
  } else {
    for (double d : logspace(1e-5 * opt.span_no_upper, opt.span_no_upper, n)) xs.push_back(a_ + d);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

VerificationReport ValueFunction::verify(const LevyModel& model, const VerifyOptions& opt) const {
  const auto xs = verification_grid(opt);
  std::vector<VerificationPoint> pts(xs.size());
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const double x = xs[i];
      auto& p = pts[i];
      p.x = x;
      p.region = x < a_ ? Region::Below : (x > b_ ? Region::Above : Region::Inside);
      p.v = value(x);
      p.v1 = derivative(x, Side::Right);
      p.v2 = second_derivative(x, Side::Right);
      p.residual = hjb_residual(model, x, opt);
    }
  };
  const int nt = std::max(1, opt.threads);
  if (nt == 1) {
    work(0, xs.size());
  } else {
    std::vector<std::thread> th;
    const std::size_t chunk = (xs.size() + nt - 1) / nt;
    for (int t = 0; t < nt; ++t) {
      const std::size_t lo = std::min(xs.size(), t * chunk), hi = std::min(xs.size(), lo + chunk);
      th.emplace_back(work, lo, hi);
    }
    for (auto& t : th) t.join();
  }

  VerificationReport r;
  r.convexity_checked = cost_.convex();
  const double cu = cost_.C_U(), cd = cost_.C_D();
  r.min_outside_residual = kInf;
  r.min_second_derivative = kInf;
  for (const auto& p : pts) {
    r.max_slope_violation = std::max({r.max_slope_violation, -cu - p.v1, p.v1 - cd});
    const double scaled = p.residual / (1.0 + std::abs(cost_.f(p.x)));
    if (p.region == Region::Inside)
      r.max_inside_residual = std::max(r.max_inside_residual, std::abs(scaled));
    else
      r.min_outside_residual = std::min(r.min_outside_residual, scaled);
    r.min_second_derivative = std::min(r.min_second_derivative, p.v2);
  }
  r.slope_ok = r.max_slope_violation <= opt.tol_slope * std::max(1.0, cu + cd);
  r.inside_ok = r.max_inside_residual <= opt.tol_gen;
  r.outside_ok = r.min_outside_residual >= -opt.tol_gen;
  r.convex_ok = !r.convexity_checked || r.min_second_derivative >= -opt.tol_convex;
  r.points = std::move(pts);
  return r;
}

}  // namespace levyctl
