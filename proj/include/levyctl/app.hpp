#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "levyctl/config.hpp"

namespace levyctl {

enum class CurveKind { GammaBig, GammaSmall, Value, Scale, All };

struct CheckResult {
  std::string name;
  double value;
  double tolerance;
  bool pass;
};

// Model, scale function and cost built once from a config; the solution is cached.
class Session {
 public:
  explicit Session(RunConfig cfg);

  const RunConfig& config() const { return cfg_; }
  const LevyModel& model() const { return *model_; }
  const ScaleFunction& scale() const { return *sf_; }
  const CostSpec& cost() const { return *cost_; }
  const BarrierProblem& problem() const { return *problem_; }
  const BarrierSolution& solution();
  ValueFunction value_function();

 private:
  RunConfig cfg_;
  std::optional<LevyModel> model_;
  std::optional<ScaleFunction> sf_;
  std::optional<CostSpec> cost_;
  std::optional<BarrierProblem> problem_;
  std::optional<BarrierSolution> sol_;
};

// Each command writes its files into out_dir (created if needed) and returns the paths.
std::vector<std::string> cmd_solve(Session& s, const std::string& out_dir);
std::vector<std::string> cmd_curves(Session& s, CurveKind what, const std::string& out_dir);
std::vector<std::string> cmd_value(Session& s, const std::vector<double>& xs,
                                   const std::string& out_dir);
std::vector<std::string> cmd_simulate(Session& s, const std::string& out_dir);
// Returns whether every check passed.
bool cmd_verify(Session& s, const std::string& out_dir, std::vector<std::string>* files = nullptr);
bool cmd_selfcheck(Session& s, const std::string& out_dir,
                   std::vector<std::string>* files = nullptr);

std::vector<CheckResult> selfcheck(Session& s);
std::string format_double(double v);

// Full command line front end; returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace levyctl
