#pragma once

#include <string>
#include <vector>

namespace levyctl {

enum class LevyKind { BrownianDrift, HyperExponential, BetaFamily };
enum class Variation { Bounded, Unbounded };

std::string to_string(LevyKind k);
std::string to_string(Variation v);

// Jump density rate * eta * exp(eta * z) on z < 0.
struct ExpJump {
  double rate;
  double eta;
};

// Levy density varpi * exp(alpha*beta*z) * (1 - exp(beta*z))^(-lambda) on z < 0.
struct BetaParams {
  double delta_hat;
  double alpha;
  double beta;
  double varpi;
  double lambda;
};

class LevyModel {
 public:
  // Laplace exponent c*s + sigma^2 s^2 / 2.
  static LevyModel brownian_drift(double c, double sigma);
  // Deterministic path c*t with no admissibility check; only the simulator accepts it.
  static LevyModel drift_only(double c);
  // c is the linear coefficient with the small-jump compensator on (-1, 0).
  static LevyModel hyper_exponential(double c, double sigma, std::vector<ExpJump> jumps);
  static LevyModel beta_family(const BetaParams& p, double sigma);

  LevyKind kind() const { return kind_; }
  double sigma() const { return sigma_; }
  double c() const { return c_; }
  const std::vector<ExpJump>& hyper_jumps() const { return jumps_; }
  const BetaParams& beta_params() const { return bp_; }

  // psi and psi' are defined for every s away from the poles, including s < 0,
  // which the scale-function root search needs.
  double psi(double s) const;
  double psi_prime(double s) const;
  double psi_second(double s) const;
  double phi(double q) const;
  double mean() const { return psi_prime(0.0); }

  Variation variation() const;
  bool infinite_activity() const;
  bool has_jumps() const;
  // Drift of the bounded-variation representation X_t = delta*t - (pure jump subordinator).
  double bv_drift() const;
  // Linear coefficient of the generator with compensator on (-1, 0).
  double generator_drift() const { return gen_drift_; }

  double levy_density(double z) const;
  // nu((-inf, -eps)) for eps > 0; infinite for infinite activity at eps = 0.
  double tail_mass(double eps) const;
  // int_{-eps}^{0} z^2 nu(dz)
  double small_jump_second_moment(double eps) const;
  // int_{-1}^{-eps} |z| nu(dz)
  double mid_jump_first_moment(double eps) const;

  // Poles of psi on the negative axis, as positive numbers, increasing.
  // Empty for Brownian drift; the given scales for hyperexponential; beta*(alpha+k-1) for beta.
  std::vector<double> pole_scales(std::size_t count) const;
  bool has_infinitely_many_poles() const { return kind_ == LevyKind::BetaFamily; }

 private:
  LevyModel() = default;
  void finish();
  double beta_jump_part(double s) const;
  double weighted_beta_density(double y, int k) const;

  LevyKind kind_ = LevyKind::BrownianDrift;
  double c_ = 0.0;
  double sigma_ = 0.0;
  std::vector<ExpJump> jumps_;
  BetaParams bp_{};
  double gen_drift_ = 0.0;
  double beta_b0_ = 0.0;  // B(alpha, 1 - lambda)
};

}  // namespace levyctl
