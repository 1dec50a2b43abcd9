#pragma once

#include <string>

#include "levyctl/numerics.hpp"
#include "levyctl/piecewise_poly.hpp"
#include "levyctl/scale_function.hpp"

namespace levyctl {

enum class CostKind { Quadratic, Linear, Generic };
std::string to_string(CostKind k);

// How the integrals against W and exp(-Phi y) are computed.
enum class Route { ClosedForm, Quadrature };

// Which function of the cost is integrated.
enum class Integrand { F, FTilde, FTildePrime };

struct QuadratureTolerances {
  double rel = 1e-10;
  double abs = 1e-12;
};

class CostSpec {
 public:
  // f(x) = alpha_minus x^2 for x < 0, alpha_plus x^2 for x >= 0
  static CostSpec quadratic(double alpha_minus, double alpha_plus, double C_U, double C_D,
                            double q);
  // f(x) = -alpha_minus x for x < 0, alpha_plus x for x >= 0
  static CostSpec linear(double alpha_minus, double alpha_plus, double C_U, double C_D, double q);
  // Continuous piecewise polynomial f given explicitly.
  static CostSpec generic(PiecewisePolynomial f, double C_U, double C_D, double q);

  CostKind kind() const { return kind_; }
  Route route() const { return route_; }
  CostSpec with_route(Route r) const;
  // f, C_U and C_D multiplied by k > 0.
  CostSpec scaled(double k) const;

  double alpha_minus() const { return am_; }
  double alpha_plus() const { return ap_; }
  double C_U() const { return cu_; }
  double C_D() const { return cd_; }
  double q() const { return q_; }

  double f(double x) const { return f_(x); }
  double f_tilde(double x) const { return ft_(x); }
  // Throws DomainError at a point where f' jumps.
  double f_tilde_prime(double x) const;
  double f_tilde_prime(double x, Side side) const { return ftp_(x, side); }
  const PiecewisePolynomial& f_poly() const { return f_; }
  const PiecewisePolynomial& integrand_poly(Integrand h) const;
  bool convex() const;

  // Zero crossing of f~'.
  double a_bar() const { return a_bar_; }
  // lim f~'(y) as y -> inf; +inf when f~' is unbounded.
  double f_tilde_prime_at_infinity() const;

  // Psi(s; f~') = int_0^inf exp(-Phi y) f~'(y + s) dy
  double Psi(const ScaleFunction& sf, double s) const;
  // Unique zero of Psi(.; f~') below a_bar.
  double a_underline(const ScaleFunction& sf) const;

  // phi_s(x; h) = int_s^x W(x - y) h(y) dy (order 0) or its x-derivative (order 1,
  // one-sided at breakpoints of h and at x = s).
  double phi_conv(const ScaleFunction& sf, double s, double x, Integrand h, int order = 0,
                  Side side = Side::Left) const;

  QuadratureTolerances quad_tol;

 private:
  CostSpec() = default;
  void finish();
  double Psi_closed(const ScaleFunction& sf, double s) const;
  double Psi_quad(const ScaleFunction& sf, double s) const;
  double conv_closed(const ScaleFunction& sf, const PiecewisePolynomial& h, double s, double x,
                     int order, Side side) const;
  double conv_quad(const ScaleFunction& sf, const PiecewisePolynomial& h, double s, double x,
                   int order, Side side) const;
  double solve_a_bar() const;

  CostKind kind_ = CostKind::Quadratic;
  Route route_ = Route::ClosedForm;
  double am_ = 0, ap_ = 0, cu_ = 0, cd_ = 0, q_ = 0;
  PiecewisePolynomial f_, ft_, ftp_;
  double a_bar_ = 0;
};

}  // namespace levyctl
