#pragma once

#include <optional>
#include <string>
#include <vector>

#include "levyctl/barrier_solver.hpp"
#include "levyctl/cost_model.hpp"
#include "levyctl/levy_model.hpp"
#include "levyctl/scale_function.hpp"
#include "levyctl/simulator.hpp"
#include "levyctl/value_function.hpp"

namespace levyctl {

struct ModelConfig {
  LevyKind kind = LevyKind::BetaFamily;
  double c = 0.0;
  double sigma = 0.0;
  std::vector<ExpJump> jumps;
  BetaParams beta{};

  LevyModel build() const;
};

struct CostConfig {
  CostKind kind = CostKind::Quadratic;
  double alpha_minus = 1.0;
  double alpha_plus = 1.0;
  double C_U = 0.0;
  double C_D = 0.0;
  std::vector<double> breaks;
  std::vector<std::vector<double>> coeffs;
  Route route = Route::ClosedForm;

  CostSpec build(double q, const QuadratureTolerances& tol) const;
};

// Starting point of a simulation: a number, or one of a_star, b_star, mid.
struct StartPoint {
  std::string name;
  double value = 0.0;
};

struct CurvesConfig {
  int b_points = 401;
  int x_points = 401;
  std::optional<double> x_min, x_max, b_max;
};

struct RunConfig {
  ModelConfig model;
  CostConfig cost;
  double q = 0.0;
  ScaleOptions scale;
  SolverOptions solver;
  QuadratureTolerances quad;
  SimConfig sim;
  std::vector<StartPoint> sim_x0;
  VerifyOptions verify;
  CurvesConfig curves;
  std::vector<double> value_x;
  std::string output_dir = "out";
};

// Errors carry "<source>:<line>: <json pointer>: <message>" and keep their type
// (ConfigError for malformed input, AssumptionViolation for inadmissible models).
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

}  // namespace levyctl
