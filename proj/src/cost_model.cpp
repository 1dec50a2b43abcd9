#include "levyctl/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "levyctl/errors.hpp"

namespace levyctl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_common(double C_U, double C_D, double q) {
  if (!std::isfinite(C_U) || !std::isfinite(C_D)) throw ConfigError("C_U and C_D must be finite");
  if (!(C_U + C_D >= 1e-12)) throw ConfigError("C_U + C_D must be positive");
  if (!(q > 0.0) || !std::isfinite(q)) throw ConfigError("q must be > 0");
}

}  // namespace

std::string to_string(CostKind k) {
  switch (k) {
    case CostKind::Quadratic: return "Quadratic";
    case CostKind::Linear: return "Linear";
    case CostKind::Generic: return "Generic";
  }
  return "?";
}

CostSpec CostSpec::quadratic(double am, double ap, double C_U, double C_D, double q) {
  check_common(C_U, C_D, q);
  if (!(am > 0.0) || !(ap > 0.0) || !std::isfinite(am) || !std::isfinite(ap))
    throw ConfigError("quadratic cost needs alpha_minus > 0 and alpha_plus > 0");
  CostSpec c;
  c.kind_ = CostKind::Quadratic;
  c.am_ = am;
  c.ap_ = ap;
  c.cu_ = C_U;
  c.cd_ = C_D;
  c.q_ = q;
  c.f_ = PiecewisePolynomial({0.0}, {{0.0, 0.0, am}, {0.0, 0.0, ap}});
  c.finish();
  return c;
}

CostSpec CostSpec::linear(double am, double ap, double C_U, double C_D, double q) {
  check_common(C_U, C_D, q);
  if (!std::isfinite(am) || !std::isfinite(ap)) throw ConfigError("slopes must be finite");
  if (!(q * C_U + ap > 0.0 && 0.0 > q * C_U - am))
    throw AssumptionViolation("linear cost requires q*C_U + alpha_plus > 0 > q*C_U - alpha_minus");
  CostSpec c;
  c.kind_ = CostKind::Linear;
  c.am_ = am;
  c.ap_ = ap;
  c.cu_ = C_U;
  c.cd_ = C_D;
  c.q_ = q;
  c.f_ = PiecewisePolynomial({0.0}, {{0.0, -am}, {0.0, ap}});
  c.finish();
  return c;
}

CostSpec CostSpec::generic(PiecewisePolynomial f, double C_U, double C_D, double q) {
  check_common(C_U, C_D, q);
  double scale = 1.0;
  for (double b : f.breaks()) scale = std::max(scale, std::abs(f(b)));
  if (f.max_jump() > 1e-10 * scale) throw ConfigError("generic cost must be continuous");
  CostSpec c;
  c.kind_ = CostKind::Generic;
  c.route_ = Route::Quadrature;
  c.cu_ = C_U;
  c.cd_ = C_D;
  c.q_ = q;
  c.f_ = std::move(f);
  c.finish();
  return c;
}

void CostSpec::finish() {
  ft_ = f_.plus_linear(0.0, cu_ * q_);
  ftp_ = ft_.derivative();
  a_bar_ = solve_a_bar();
}

CostSpec CostSpec::with_route(Route r) const {
  CostSpec c = *this;
  c.route_ = r;
  return c;
}

CostSpec CostSpec::scaled(double k) const {
  if (!(k > 0.0)) throw ConfigError("scale factor must be positive");
  CostSpec c = *this;
  c.am_ *= k;
  c.ap_ *= k;
  c.cu_ *= k;
  c.cd_ *= k;
  c.f_ = f_.scaled(k);
  c.finish();
  return c;
}

double CostSpec::f_tilde_prime(double x) const {
  const double l = ftp_(x, Side::Left), r = ftp_(x, Side::Right);
  if (ftp_.is_breakpoint(x) && l != r)
    throw DomainError("f~' evaluated at a kink without a side selector");
  return r;
}

double CostSpec::f_tilde_prime_at_infinity() const {
  auto c = ftp_.pieces().back();
  while (c.size() > 1 && c.back() == 0.0) c.pop_back();
  if (c.size() == 1) return c[0];
  if (c.back() < 0.0) throw AssumptionViolation("f~' decreases to -inf");
  return kInf;
}

const PiecewisePolynomial& CostSpec::integrand_poly(Integrand h) const {
  switch (h) {
    case Integrand::F: return f_;
    case Integrand::FTilde: return ft_;
    case Integrand::FTildePrime: return ftp_;
  }
  return f_;
}

bool CostSpec::convex() const {
  const auto d1 = f_.derivative();
  const auto d2 = d1.derivative();
  for (double b : f_.breaks())
    if (d1(b, Side::Right) < d1(b, Side::Left) - 1e-12) return false;
  // second derivative of each piece sampled over its span (pieces are polynomials)
  for (std::size_t i = 0; i < d2.num_pieces(); ++i) {
    const double lo = i == 0 ? (f_.breaks().empty() ? -50.0 : f_.breaks().front() - 50.0)
                             : f_.breaks()[i - 1];
    const double hi = i + 1 == d2.num_pieces()
                          ? (f_.breaks().empty() ? 50.0 : f_.breaks().back() + 50.0)
                          : f_.breaks()[i];
    for (double x : linspace(lo, hi, 101))
      if (poly_eval(d2.pieces()[i], x) < -1e-12) return false;
  }
  return true;
}

double CostSpec::solve_a_bar() const {
  if (kind_ == CostKind::Quadratic)
    return cu_ >= 0.0 ? -q_ * cu_ / (2.0 * am_) : -q_ * cu_ / (2.0 * ap_);
  if (kind_ == CostKind::Linear) return 0.0;
  auto g = [this](double x) { return ftp_(x, Side::Right); };
  double lo = -1.0, hi = 1.0;
  while (g(lo) >= 0.0) {
    lo *= 2.0;
    if (lo < -1e6) throw AssumptionViolation("f~' has no sign change: a_bar not found");
  }
  while (g(hi) <= 0.0) {
    hi *= 2.0;
    if (hi > 1e6) throw AssumptionViolation("f~' has no sign change: a_bar not found");
  }
  // Bisection also lands on a jump of f~'.
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double ab = 0.5 * (lo + hi);
  // f~ must decrease left of a_bar and increase right of it.
  std::vector<double> probes;
  for (double d = 1e-6; d <= 1e6; d *= 2.0) {
    probes.push_back(ab - d);
    probes.push_back(ab + d);
  }
  const auto& br = ftp_.breaks();
  for (std::size_t j = 0; j + 1 < br.size(); ++j)
    for (int k = 0; k <= 32; ++k) probes.push_back(br[j] + (br[j + 1] - br[j]) * k / 32.0);
  for (double b : br) {
    probes.push_back(b);
    probes.push_back(b - 1e-9 * std::max(1.0, std::abs(b)));
  }
  for (double x : probes) {
    const double v = g(x);
    if ((x < ab && v > 0.0) || (x > ab && v < 0.0))
      throw AssumptionViolation("f~' changes sign more than once (near x = " +
                                std::to_string(x) + "): a_bar is not unique");
  }
  return ab;
}

double CostSpec::Psi(const ScaleFunction& sf, double s) const {
  return route_ == Route::ClosedForm ? Psi_closed(sf, s) : Psi_quad(sf, s);
}

double CostSpec::Psi_closed(const ScaleFunction& sf, double s) const {
  const double phi = sf.phi();
  const auto& br = ftp_.breaks();
  const auto& pc = ftp_.pieces();
  double total = 0.0;
  for (std::size_t j = ftp_.piece_index(s, Side::Right); j < pc.size(); ++j) {
    const double lo = std::max(j == 0 ? -kInf : br[j - 1], s);
    const double hi = j + 1 == pc.size() ? kInf : br[j];
    const int deg = static_cast<int>(pc[j].size()) - 1;
    double at_lo = 0.0, at_hi = 0.0, pw = phi;
    for (int m = 0; m <= deg; ++m) {
      at_lo += poly_derivative_eval(pc[j], m, lo) / pw;
      if (std::isfinite(hi)) at_hi += poly_derivative_eval(pc[j], m, hi) / pw;
      pw *= phi;
    }
    total += std::exp(-phi * (lo - s)) * at_lo;
    if (std::isfinite(hi)) total -= std::exp(-phi * (hi - s)) * at_hi;
  }
  return total;
}

double CostSpec::Psi_quad(const ScaleFunction& sf, double s) const {
  const double phi = sf.phi();
  auto g = [&](double u) { return std::exp(-phi * (u - s)) * ftp_(u, Side::Right); };
  return integrate(g, s, kInf, ftp_.breaks(), quad_tol.rel, quad_tol.abs).value;
}

double CostSpec::a_underline(const ScaleFunction& sf) const {
  if (std::abs(sf.q() - q_) > 1e-14 * q_)
    throw ConfigError("cost and scale function use different discount rates");
  auto g = [&](double a) { return Psi(sf, a); };
  const double hi = a_bar_;
  double ghi = g(hi);
  if (!(ghi > 0.0)) throw AssumptionViolation("Psi(a_bar; f~') is not positive");
  double span = 1.0, lo = hi - span, glo = g(lo);
  while (!(glo < 0.0)) {
    span *= 2.0;
    if (span > 1e6) throw ConvergenceError("bracket expansion for a_underline exceeds 1e6");
    lo = hi - span;
    glo = g(lo);
  }
  auto r = brent(g, lo, hi, glo, ghi, 1e-15 * std::max(1.0, std::abs(hi)));
  if (!r.converged) throw ConvergenceError("a_underline root finder did not converge");
  return r.x;
}

double CostSpec::phi_conv(const ScaleFunction& sf, double s, double x, Integrand h, int order,
                          Side side) const {
  if (order < 0 || order > 1) throw DomainError("phi_conv supports orders 0 and 1");
  if (x < s || (x == s && (order == 0 || side == Side::Left))) return 0.0;
  const auto& p = integrand_poly(h);
  return route_ == Route::ClosedForm ? conv_closed(sf, p, s, x, order, side)
                                     : conv_quad(sf, p, s, x, order, side);
}

double CostSpec::conv_closed(const ScaleFunction& sf, const PiecewisePolynomial& h, double s,
                             double x, int order, Side side) const {
  // Repeated integration by parts on each polynomial piece against W's antiderivatives.
  const auto& br = h.breaks();
  const auto& pc = h.pieces();
  const std::size_t first = h.piece_index(s, Side::Right);
  const std::size_t last = std::max(first, h.piece_index(x, side));
  double total = 0.0;
  for (std::size_t j = first; j <= last; ++j) {
    const double lo = std::max(j == 0 ? -kInf : br[j - 1], s);
    const double hi = j + 1 == pc.size() ? kInf : std::min(br[j], x);
    const int deg = static_cast<int>(pc[j].size()) - 1;
    for (int m = 0; m <= deg; ++m) {
      const int n = m + 1 - order;
      total += sf.iterated(n, x - lo) * poly_derivative_eval(pc[j], m, lo);
      if (j != last) total -= sf.iterated(n, x - hi) * poly_derivative_eval(pc[j], m, hi);
    }
  }
  return total;
}

double CostSpec::conv_quad(const ScaleFunction& sf, const PiecewisePolynomial& h, double s,
                           double x, int order, Side side) const {
  std::vector<double> splits = h.breaks();
  for (double d : {1e-3, 1e-2, 1e-1, 1.0}) splits.push_back(x - d);
  if (order == 0) {
    auto g = [&](double y) { return sf.W(x - y) * h(y, Side::Right); };
    return integrate(g, s, x, splits, quad_tol.rel, quad_tol.abs).value;
  }
  auto g = [&](double y) { return sf.W_prime(x - y, Side::Right) * h(y, Side::Right); };
  return sf.W_at_zero() * h(x, side) + integrate(g, s, x, splits, quad_tol.rel, quad_tol.abs).value;
}

}  // namespace levyctl
