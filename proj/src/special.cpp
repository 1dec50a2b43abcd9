#include "levyctl/special.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <limits>
#include <string>

#include "levyctl/errors.hpp"

namespace levyctl {

double digamma(double x) { return boost::math::digamma(x); }

double distance_to_gamma_pole(double x) {
  if (x > 0.5) return std::numeric_limits<double>::infinity();
  return std::abs(x - std::round(x));
}

namespace {

// log|Gamma(x)| and sign of Gamma(x), x not a pole.
double log_gamma_signed(double x, int& sign) {
  sign = 1;
  if (x < 0.0 && static_cast<long long>(std::floor(x)) % 2 != 0) sign = -1;
  return std::lgamma(x);
}

}  // namespace

double beta_fn(double x, double y, double pole_tol) {
  if (distance_to_gamma_pole(x) < pole_tol || distance_to_gamma_pole(y) < pole_tol)
    throw DomainError("beta function evaluated at a pole: B(" + std::to_string(x) + ", " +
                      std::to_string(y) + ")");
  int sx, sy, sxy;
  const double lx = log_gamma_signed(x, sx);
  const double ly = log_gamma_signed(y, sy);
  if (distance_to_gamma_pole(x + y) == 0.0) return 0.0;
  const double lxy = log_gamma_signed(x + y, sxy);
  return sx * sy * sxy * std::exp(lx + ly - lxy);
}

}  // namespace levyctl

#include <boost/math/special_functions/trigamma.hpp>

namespace levyctl {
double trigamma(double x) { return boost::math::trigamma(x); }
}  // namespace levyctl
