#pragma once

#include <string>

#include "levyctl/cost_model.hpp"
#include "levyctl/scale_function.hpp"

namespace levyctl {

struct SolverOptions {
  double tol_fit = 1e-8;
  // b is searched up to a + b_cap_factor / Phi(q), with one doubling retry.
  double b_cap_factor = 200.0;
  // Case 2 is tested at a_underline + case2_eps * (a_bar - a_underline).
  double case2_eps = 1e-6;
  int prescan_points = 200;
};

enum class CaseTag { Case1, Case2 };
std::string to_string(CaseTag c);

struct SolverDiagnostics {
  int outer_iterations = 0;
  int b_tilde_calls = 0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double a_eps = 0.0;
  double Gamma_underline_at_eps = 0.0;
  // lim Gamma(a_underline, b) as b -> inf, the infimum of Gamma_underline.
  double Gamma_limit = 0.0;
  double b_cap = 0.0;
  // Length of the interval right of b* on which |gamma(a*, .)| <= tol_fit.
  double b_star_zero_width = 0.0;
};

struct BarrierSolution {
  CaseTag case_tag = CaseTag::Case1;
  double a_star = 0.0;
  double b_star = 0.0;  // +inf in Case 2
  double a_bar = 0.0;
  double a_underline = 0.0;
  double gamma_residual = 0.0;  // NaN in Case 2
  double Gamma_residual = 0.0;
  SolverDiagnostics diag;
};

class BarrierProblem {
 public:
  BarrierProblem(ScaleFunction sf, CostSpec cost, SolverOptions opt = {});

  const ScaleFunction& scale() const { return sf_; }
  const CostSpec& cost() const { return cost_; }
  const SolverOptions& options() const { return opt_; }
  double a_bar() const { return a_bar_; }
  double a_underline() const { return a_under_; }

  // C_D + C_U + phi_a(b; f~')
  double Gamma(double a, double b) const;
  // one-sided derivative of Gamma in b
  double gamma(double a, double b, Side side = Side::Left) const;
  // Point where gamma(a, .) turns positive; +inf if it stays negative up to the cap.
  double b_tilde(double a) const;
  double Gamma_underline(double a) const;
  // lim_{a -> a_underline+} Gamma_underline(a) = C_U + C_D - f~'(inf)/q
  double Gamma_underline_limit() const;
  // Throws AssumptionViolation when gamma(a, .) changes sign more than once on the scan grid.
  void check_sign_structure(double a) const;

  BarrierSolution solve() const;

 private:
  double b_tilde_impl(double a, double* cap_used) const;

  ScaleFunction sf_;
  CostSpec cost_;
  SolverOptions opt_;
  double a_bar_, a_under_;
  mutable int b_tilde_calls_ = 0;
};

BarrierSolution solve(const LevyModel& model, const CostSpec& cost, const ScaleOptions& sopt = {},
                      const SolverOptions& opt = {});

}  // namespace levyctl
