#include "levyctl/piecewise_poly.hpp"

#include <algorithm>
#include <cmath>

#include "levyctl/errors.hpp"

namespace levyctl {

double poly_eval(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) v = v * x + c[i];
  return v;
}

double poly_derivative_eval(const std::vector<double>& c, int m, double x) {
  double v = 0.0;
  for (std::size_t i = c.size(); i-- > static_cast<std::size_t>(m);) {
    double f = 1.0;
    for (int k = 0; k < m; ++k) f *= static_cast<double>(i - k);
    v = v * x + f * c[i];
  }
  return v;
}

PiecewisePolynomial::PiecewisePolynomial(std::vector<double> breaks,
                                         std::vector<std::vector<double>> coeffs)
    : breaks_(std::move(breaks)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != breaks_.size() + 1)
    throw ConfigError("piecewise polynomial needs one more piece than breakpoints");
  for (std::size_t i = 0; i < breaks_.size(); ++i) {
    if (!std::isfinite(breaks_[i])) throw ConfigError("breakpoints must be finite");
    if (i > 0 && !(breaks_[i] > breaks_[i - 1]))
      throw ConfigError("breakpoints must be strictly increasing");
  }
  for (auto& c : coeffs_) {
    if (c.empty()) c.push_back(0.0);
    for (double v : c)
      if (!std::isfinite(v)) throw ConfigError("polynomial coefficients must be finite");
  }
}

PiecewisePolynomial PiecewisePolynomial::polynomial(std::vector<double> coeffs) {
  return PiecewisePolynomial({}, {std::move(coeffs)});
}

int PiecewisePolynomial::degree() const {
  int d = 0;
  for (const auto& c : coeffs_) d = std::max(d, static_cast<int>(c.size()) - 1);
  return d;
}

std::size_t PiecewisePolynomial::piece_index(double x, Side side) const {
  if (side == Side::Right)
    return std::upper_bound(breaks_.begin(), breaks_.end(), x) - breaks_.begin();
  return std::lower_bound(breaks_.begin(), breaks_.end(), x) - breaks_.begin();
}

bool PiecewisePolynomial::is_breakpoint(double x) const {
  return std::binary_search(breaks_.begin(), breaks_.end(), x);
}

double PiecewisePolynomial::operator()(double x, Side side) const {
  return poly_eval(coeffs_[piece_index(x, side)], x);
}

double PiecewisePolynomial::derivative(int m, double x, Side side) const {
  return poly_derivative_eval(coeffs_[piece_index(x, side)], m, x);
}

PiecewisePolynomial PiecewisePolynomial::derivative() const {
  std::vector<std::vector<double>> d;
  for (const auto& c : coeffs_) {
    std::vector<double> e;
    for (std::size_t i = 1; i < c.size(); ++i) e.push_back(c[i] * static_cast<double>(i));
    if (e.empty()) e.push_back(0.0);
    d.push_back(std::move(e));
  }
  return PiecewisePolynomial(breaks_, std::move(d));
}

PiecewisePolynomial PiecewisePolynomial::plus_linear(double c0, double c1) const {
  auto c = coeffs_;
  for (auto& p : c) {
    if (p.size() < 2) p.resize(2, 0.0);
    p[0] += c0;
    p[1] += c1;
  }
  return PiecewisePolynomial(breaks_, std::move(c));
}

PiecewisePolynomial PiecewisePolynomial::scaled(double k) const {
  auto c = coeffs_;
  for (auto& p : c)
    for (double& v : p) v *= k;
  return PiecewisePolynomial(breaks_, std::move(c));
}

double PiecewisePolynomial::max_jump() const {
  double j = 0.0;
  for (std::size_t i = 0; i < breaks_.size(); ++i)
    j = std::max(j, std::abs(poly_eval(coeffs_[i + 1], breaks_[i]) -
                             poly_eval(coeffs_[i], breaks_[i])));
  return j;
}

}  // namespace levyctl
