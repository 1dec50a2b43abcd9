#pragma once

namespace levyctl {

double digamma(double x);

// Beta function B(x, y) for real arguments, including negative non-integers.
// Throws DomainError within pole_tol of a pole of Gamma(x) or Gamma(y).
double beta_fn(double x, double y, double pole_tol = 1e-8);

// Distance from x to the nearest non-positive integer (infinity if x > 0.5).
double distance_to_gamma_pole(double x);

}  // namespace levyctl

namespace levyctl {
double trigamma(double x);
}
