#include "levyctl/barrier_solver.hpp"

#include <cmath>
#include <limits>

#include "levyctl/errors.hpp"

namespace levyctl {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string to_string(CaseTag c) { return c == CaseTag::Case1 ? "Case1" : "Case2"; }

BarrierProblem::BarrierProblem(ScaleFunction sf, CostSpec cost, SolverOptions opt)
    : sf_(std::move(sf)), cost_(std::move(cost)), opt_(opt) {
  if (std::abs(sf_.q() - cost_.q()) > 1e-14 * cost_.q())
    throw ConfigError("cost and scale function use different discount rates");
  a_bar_ = cost_.a_bar();
  a_under_ = cost_.a_underline(sf_);
  if (!(a_under_ < a_bar_)) throw AssumptionViolation("a_underline is not below a_bar");
}

double BarrierProblem::Gamma(double a, double b) const {
  if (b < a) throw DomainError("Gamma(a, b) needs b >= a");
  return cost_.C_D() + cost_.C_U() + cost_.phi_conv(sf_, a, b, Integrand::FTildePrime, 0);
}

double BarrierProblem::gamma(double a, double b, Side side) const {
  if (b < a) throw DomainError("gamma(a, b) needs b >= a");
  return cost_.phi_conv(sf_, a, b, Integrand::FTildePrime, 1, side);
}

double BarrierProblem::b_tilde(double a) const { return b_tilde_impl(a, nullptr); }

double BarrierProblem::b_tilde_impl(double a, double* cap_used) const {
  if (!(a < a_bar_)) throw DomainError("b_tilde(a) needs a < a_bar");
  ++b_tilde_calls_;
  auto g = [&](double b) { return gamma(a, b, Side::Left); };
  const double phi = sf_.phi();
  double cap = a + opt_.b_cap_factor / phi;
  // gamma(a, b) < 0 for a < b <= a_bar
  double prev = a_bar_, gprev = g(prev);
  double step = 1e-2 / phi;
  for (int round = 0; round < 2; ++round) {
    while (prev < cap) {
      const double b = std::min(prev + step, cap);
      const double gb = g(b);
      // Where gamma(a, .) only approaches zero from below, its roundoff can be positive.
      const double noise = 1e-12 * sf_.W(b - a) * (std::abs(cost_.f_tilde_prime(a)) + std::abs(cost_.f_tilde_prime(b)));
      if (gb > noise) {
        auto r = brent(g, prev, b, gprev, gb, 1e-15 * std::max(1.0, std::abs(b)));
        if (!r.converged) throw ConvergenceError("b_tilde root finder did not converge");
        if (cap_used) *cap_used = cap;
        return r.x;
      }
      prev = b;
      gprev = gb;
      step *= 2.0;
    }
    cap = a + 2.0 * opt_.b_cap_factor / phi;
  }
  if (cap_used) *cap_used = cap;
  return kInf;
}

double BarrierProblem::Gamma_underline(double a) const {
  double cap = 0.0;
  const double b = b_tilde_impl(a, &cap);
  if (std::isfinite(b)) return Gamma(a, b);
  if (cost_.Psi(sf_, a) < 0.0) return -kInf;
  return Gamma(a, cap);
}

double BarrierProblem::Gamma_underline_limit() const {
  const double c_inf = cost_.f_tilde_prime_at_infinity();
  return cost_.C_U() + cost_.C_D() - c_inf / cost_.q();
}

void BarrierProblem::check_sign_structure(double a) const {
  const double phi = sf_.phi();
  const double lo = std::max(a, a_bar_);
  const double span = a + opt_.b_cap_factor / phi - lo;
  const int n = opt_.prescan_points;
  std::vector<double> vals;
  double scale = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    const double v = gamma(a, lo + span * t * t, Side::Left);
    vals.push_back(v);
    scale = std::max(scale, std::abs(v));
  }
  const double thr = 1e-10 * scale;
  bool positive = false;
  for (double v : vals) {
    if (v > thr) positive = true;
    if (positive && v < -thr)
      throw AssumptionViolation("gamma(a, .) turns negative after being positive at a = " +
                                std::to_string(a) + ": single-crossing structure fails");
  }
}

BarrierSolution BarrierProblem::solve() const {
  b_tilde_calls_ = 0;
  BarrierSolution sol;
  sol.a_bar = a_bar_;
  sol.a_underline = a_under_;
  const double width = a_bar_ - a_under_;
  const double a_eps = a_under_ + opt_.case2_eps * width;
  sol.diag.a_eps = a_eps;
  check_sign_structure(a_eps);
  check_sign_structure(a_under_ + 0.5 * width);
  double cap = 0.0;
  sol.diag.Gamma_limit = Gamma_underline_limit();
  sol.diag.Gamma_underline_at_eps = Gamma_underline(a_eps);

  if (sol.diag.Gamma_limit >= 0.0) {
    sol.case_tag = CaseTag::Case2;
    sol.a_star = a_under_;
    sol.b_star = kInf;
    sol.Gamma_residual = std::abs(cost_.Psi(sf_, a_under_));
    sol.gamma_residual = std::numeric_limits<double>::quiet_NaN();
    sol.diag.bracket_lo = sol.diag.bracket_hi = a_under_;
    sol.diag.b_tilde_calls = b_tilde_calls_;
    return sol;
  }

  // Gamma_underline approaches its limit slowly, so the lower end of the bracket may
  // have to move much closer to a_underline than a_eps.
  double a_lo = a_eps, G_lo = sol.diag.Gamma_underline_at_eps;
  double t = a_eps - a_under_;
  while (!(G_lo < 0.0)) {
    t *= 1e-2;
    if (t < 1e-15 * std::max(1.0, std::abs(a_under_)))
      throw ConvergenceError("a* cannot be separated from a_underline in double precision");
    a_lo = a_under_ + t;
    G_lo = Gamma_underline(a_lo);
  }

  auto G = [&](double a) { return Gamma_underline(a); };
  const double G_hi = cost_.C_U() + cost_.C_D();
  auto r = brent(G, a_lo, a_bar_, G_lo, G_hi, 1e-15 * std::max(1.0, std::abs(a_bar_)),
                 0.01 * opt_.tol_fit, 500);
  if (!r.converged) throw ConvergenceError("outer search for a* did not converge");
  sol.case_tag = CaseTag::Case1;
  sol.a_star = r.x;
  sol.b_star = b_tilde_impl(r.x, &cap);
  if (!std::isfinite(sol.b_star)) throw ConvergenceError("b* not found below the cap");
  sol.diag.outer_iterations = r.iterations;
  sol.diag.bracket_lo = a_lo;
  sol.diag.bracket_hi = a_bar_;
  sol.diag.b_cap = cap;
  sol.Gamma_residual = std::abs(Gamma(sol.a_star, sol.b_star));
  sol.gamma_residual = std::abs(gamma(sol.a_star, sol.b_star, Side::Left));
  double w = 0.0;
  for (double d = 1e-9; d <= 1.0; d *= 2.0) {
    if (std::abs(gamma(sol.a_star, sol.b_star + d)) > opt_.tol_fit) break;
    w = d;
  }
  sol.diag.b_star_zero_width = w;
  sol.diag.b_tilde_calls = b_tilde_calls_;
  if (sol.Gamma_residual > opt_.tol_fit * std::max(1.0, cost_.C_U() + cost_.C_D()))
    throw ConvergenceError("smooth-fit residual Gamma(a*, b*) = " +
                           std::to_string(sol.Gamma_residual) + " exceeds tolerance");
  return sol;
}

BarrierSolution solve(const LevyModel& model, const CostSpec& cost, const ScaleOptions& sopt,
                      const SolverOptions& opt) {
  BarrierProblem p(ScaleFunction::build(model, cost.q(), sopt), cost, opt);
  return p.solve();
}

}  // namespace levyctl
