#pragma once

#include <vector>

#include "levyctl/barrier_solver.hpp"
#include "levyctl/cost_model.hpp"
#include "levyctl/levy_model.hpp"
#include "levyctl/scale_function.hpp"

namespace levyctl {

enum class ValueMode { General, Optimal };

struct ExpectedControls {
  double EU;
  double ED;
};

struct ResolventValue {
  double density;
  double atom_at_b;
};

struct VerifyOptions {
  int points_per_region = 500;
  // Width of the regions below a* and above b*.
  double span = 5.0;
  // Width of the region above a* when b* is infinite.
  double span_no_upper = 10.0;
  double tol_slope = 1e-8;
  double tol_gen = 1e-4;
  double tol_convex = 1e-8;
  double eps_gen = 1e-6;
  double quad_rel = 1e-10;
  double quad_abs = 1e-10;
  int threads = 1;
};

enum class Region { Below, Inside, Above };

struct VerificationPoint {
  double x;
  Region region;
  double v, v1, v2;
  double residual;  // (L - q)v + f
};

struct VerificationReport {
  double max_slope_violation = 0.0;
  double max_inside_residual = 0.0;    // max |res| / (1 + |f|) on (a*, b*)
  double min_outside_residual = 0.0;   // min res / (1 + |f|) outside
  double min_second_derivative = 0.0;
  bool slope_ok = true, inside_ok = true, outside_ok = true, convex_ok = true;
  bool convexity_checked = false;
  std::vector<VerificationPoint> points;
  bool all_ok() const { return slope_ok && inside_ok && outside_ok && convex_ok; }
};

class ValueFunction {
 public:
  // Value of the barrier strategy (a, b); b may be +inf (single lower barrier).
  static ValueFunction general(ScaleFunction sf, CostSpec cost, double a, double b);
  // Candidate optimal value for a solved pair (a*, b*).
  static ValueFunction optimal(ScaleFunction sf, CostSpec cost, const BarrierSolution& sol);

  ValueMode mode() const { return mode_; }
  double a() const { return a_; }
  double b() const { return b_; }
  const ScaleFunction& scale() const { return sf_; }
  const CostSpec& cost() const { return cost_; }

  double value(double x) const;
  double derivative(double x, Side side = Side::Right) const;
  double second_derivative(double x, Side side = Side::Right) const;

  // Discounted expected pushes at a (EU) and b (ED); needs finite b.
  ExpectedControls expected_discounted_controls(double x) const;
  // q-resolvent density of the reflected process at y in [a, b] plus its atom at b.
  ResolventValue resolvent_density(double x, double y) const;

  // (L - q)v(x) + f(x) by quadrature against the Levy density.
  double hjb_residual(const LevyModel& model, double x, const VerifyOptions& opt = {}) const;
  std::vector<double> verification_grid(const VerifyOptions& opt) const;
  VerificationReport verify(const LevyModel& model, const VerifyOptions& opt = {}) const;

 private:
  ValueFunction(ScaleFunction sf, CostSpec cost) : sf_(std::move(sf)), cost_(std::move(cost)) {}
  double inner_value(double x) const;
  double inner_d1(double x) const;
  double inner_d2(double x, Side side) const;
  void require_finite_b() const;

  ScaleFunction sf_;
  CostSpec cost_;
  ValueMode mode_ = ValueMode::General;
  double a_ = 0, b_ = 0;
  double Gamma_ = 0, W_ba_ = 1;  // Gamma(a, b) and W(b - a) in general mode
  double va_ = 0, vb_ = 0;
};

}  // namespace levyctl
