#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "levyctl/cost_model.hpp"
#include "levyctl/levy_model.hpp"
#include "levyctl/philox.hpp"

namespace levyctl {

enum class SmallJumpMode { DriftCompensate, GaussianApprox };
// Endpoint applies the reflection map to the step end only. BrownianBridge also
// pushes by the sampled extremum of the Gaussian part within the step, which
// removes the O(sqrt(dt)) bias of endpoint reflection for diffusive paths.
enum class ReflectionScheme { Endpoint, BrownianBridge };

struct SimConfig {
  std::int64_t n_paths = 10000;
  double dt = 1e-2;
  double horizon = 400.0;
  std::uint64_t rng_seed = 1;
  double small_jump_cutoff = 1e-3;
  SmallJumpMode small_jump_mode = SmallJumpMode::DriftCompensate;
  ReflectionScheme reflection = ReflectionScheme::Endpoint;
  int histogram_bins = 20;
  int threads = 1;

  // Throws ConfigError.
  void validate(double q) const;
};

struct Estimate {
  double mean = 0.0;
  double se = 0.0;
};

struct HistogramBin {
  double left;
  double right;
  double mass;
  double se;
};

struct SimResult {
  double a = 0.0;
  double b = 0.0;
  double x0 = 0.0;
  Estimate cost;
  Estimate EU;
  Estimate ED;
  std::vector<HistogramBin> occupation;
  bool surrogate_upper = false;
  double surrogate_hit_probability = 0.0;
  std::int64_t n_paths = 0;
  std::int64_t steps = 0;
  // Path-wise invariant checks.
  double min_state = 0.0;
  double max_state = 0.0;
  std::int64_t both_controls_steps = 0;

  bool counts() const { return !surrogate_upper || surrogate_hit_probability < 1e-3; }
};

struct ExitEstimate {
  Estimate up;
  Estimate down;
};

// Increments of X over a fixed step: drift, Gaussian part, compound Poisson jumps
// of size beyond the cutoff, and the chosen small-jump treatment. Finite-activity
// jump parts are simulated exactly with no cutoff.
class IncrementSampler {
 public:
  IncrementSampler(const LevyModel& model, double dt, double cutoff, SmallJumpMode mode);
  ~IncrementSampler();
  IncrementSampler(IncrementSampler&&) noexcept;

  double dt() const { return dt_; }
  double drift() const { return drift_; }
  double diffusion() const { return diffusion_; }
  double jump_rate() const { return jump_rate_; }
  double cutoff() const { return cutoff_; }

  // Sum of the jumps over one step (non-positive).
  double jumps(Philox& rng) const;
  double continuous(Philox& rng) const {
    return drift_ * dt_ + (diffusion_ > 0.0 ? diffusion_ * sqrt_dt_ * rng.normal() : 0.0);
  }
  double sample(Philox& rng) const { return continuous(rng) + jumps(rng); }

 private:
  double draw_jump(Philox& rng) const;

  const LevyModel* model_;
  double dt_;
  double sqrt_dt_;
  double cutoff_ = 0.0;
  double drift_ = 0.0;
  double diffusion_ = 0.0;
  double jump_rate_ = 0.0;
  std::vector<double> hyper_cdf_;
  struct Table;
  std::unique_ptr<Table> table_;
};

double sample_increment(const LevyModel& model, double dt, Philox& rng,
                        double cutoff = 1e-3,
                        SmallJumpMode mode = SmallJumpMode::DriftCompensate);

// Y = X + U - D on [a, b]; b = +infinity is replaced by a + 50/Phi(q) and flagged.
SimResult simulate_reflected(const LevyModel& model, double a, double b, double x0,
                             const SimConfig& cfg, const CostSpec& cost);

// E[e^{-q tau_b^+}; tau_b^+ < tau_0^-] and E[e^{-q tau_0^-}; tau_0^- < tau_b^+]
// for the uncontrolled process started at x0 in (0, b].
ExitEstimate estimate_exit_functionals(const LevyModel& model, double x0, double b, double q,
                                       const SimConfig& cfg);

}  // namespace levyctl
