#pragma once

#include <vector>

#include "levyctl/numerics.hpp"

namespace levyctl {

// Piecewise polynomial on the real line. Piece i covers [breaks[i-1], breaks[i]) with
// breaks[-1] = -inf and breaks[n-1] = +inf; coefficients are in ascending powers of x.
class PiecewisePolynomial {
 public:
  PiecewisePolynomial() = default;
  PiecewisePolynomial(std::vector<double> breaks, std::vector<std::vector<double>> coeffs);
  static PiecewisePolynomial polynomial(std::vector<double> coeffs);

  const std::vector<double>& breaks() const { return breaks_; }
  const std::vector<std::vector<double>>& pieces() const { return coeffs_; }
  std::size_t num_pieces() const { return coeffs_.size(); }
  int degree() const;

  // Piece used at x; at a breakpoint Side::Left picks the piece ending there.
  std::size_t piece_index(double x, Side side = Side::Right) const;
  bool is_breakpoint(double x) const;
  double operator()(double x, Side side = Side::Right) const;
  // m-th derivative of the piece active at x.
  double derivative(int m, double x, Side side = Side::Right) const;

  PiecewisePolynomial derivative() const;
  PiecewisePolynomial plus_linear(double c0, double c1) const;
  PiecewisePolynomial scaled(double k) const;
  // max over breakpoints of the jump in the value
  double max_jump() const;

 private:
  std::vector<double> breaks_;
  std::vector<std::vector<double>> coeffs_;
};

double poly_eval(const std::vector<double>& c, double x);
double poly_derivative_eval(const std::vector<double>& c, int m, double x);

}  // namespace levyctl
