#pragma once

#include <functional>
#include <vector>

namespace levyctl {

enum class Side { Left, Right };

struct RootResult {
  double x;
  double fx;
  int iterations;
  bool converged;
};

// Brent's method on a bracket with f(lo), f(hi) of opposite sign (or one zero).
// Stops when the bracket is narrower than xtol or |f| <= ftol.
RootResult brent(const std::function<double(double)>& f, double lo, double hi, double flo,
                 double fhi, double xtol, double ftol = 0.0, int max_iter = 300);

// Plain bisection; robust against functions with poles at the bracket ends.
RootResult bisect(const std::function<double(double)>& f, double lo, double hi, double flo,
                  double xtol, int max_iter = 400);

struct QuadResult {
  double value;
  double error;
};

// Adaptive 15-point Gauss-Kronrod on [a, b] (b may be +infinity, a may be -infinity),
// split at the given interior points.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     const std::vector<double>& splits = {}, double rel_tol = 1e-10,
                     double abs_tol = 1e-13, int max_depth = 12);

std::vector<double> linspace(double lo, double hi, int n);

// Fixed-order pairwise summation, so the result does not depend on how the
// values were produced.
double pairwise_sum(const double* v, std::size_t n);

}  // namespace levyctl
