#pragma once

#include <vector>

#include "levyctl/levy_model.hpp"
#include "levyctl/numerics.hpp"

namespace levyctl {

enum class CoefficientMethod { Product, Residue };

struct ScaleOptions {
  // Number of roots kept for models with infinitely many poles.
  int K = 1000;
  CoefficientMethod method = CoefficientMethod::Residue;
  // Replace the discarded roots by up to two exponentials that restore W(0), W'(0+)
  // and the transform of W at s = 0 with its slope.
  bool tail_correction = true;
  double x_min = 1e-2;
  double tail_tol = 1e-10;
  // Throw when |B_K exp(-xi_K x_min)| > tail_tol instead of only flagging.
  bool strict_truncation = true;
  double root_tol = 1e-13;
};

// W(x) = exp(Phi x)/psi'(Phi) - sum_i B_i exp(-xi_i x) - T exp(-xi_T x) for x >= 0, 0 below.
class ScaleFunction {
 public:
  static ScaleFunction build(const LevyModel& model, double q, const ScaleOptions& opt = {});

  double q() const { return q_; }
  double phi() const { return phi_; }
  double psi_prime_phi() const { return psi_prime_phi_; }
  // psi'(0+) of the model, needed by R.
  double mean() const { return mean_; }
  const std::vector<double>& roots() const { return xi_; }
  const std::vector<double>& coeffs() const { return B_; }
  const std::vector<double>& poles() const { return eta_; }
  std::size_t terms() const { return xi_.size(); }
  // Exponentials standing in for the discarded roots.
  const std::vector<double>& tail_rates() const { return tail_rates_; }
  const std::vector<double>& tail_weights() const { return tail_weights_; }
  // |B_K exp(-xi_K x_min)|, zero when the series is exact.
  double truncation_indicator() const { return trunc_indicator_; }
  bool truncation_flagged() const { return trunc_flag_; }

  // Exact one-sided limits at 0.
  double W_at_zero() const { return W0_; }
  double W_prime_at_zero() const { return W0p_; }

  double W(double x) const;
  double W_prime(double x, Side side = Side::Right) const;
  double W_second(double x) const;
  double W_bar(double x) const;
  double Z(double x) const;
  double Z_bar(double x) const;
  double R(double x) const;
  double W_phi(double x) const;
  struct LogScaled {
    double log_scale;
    double mantissa;
  };
  // W(x) = exp(log_scale) * mantissa, usable beyond the overflow range of W itself.
  LogScaled W_log(double x) const;

  // n-fold antiderivative of W from 0 for n >= 1, W for n = 0, the (-n)-th derivative
  // for n in {-1, -2}; x > 0 from the series, 0 for x < 0.
  double iterated(int n, double x) const;

 private:
  double series_part(int n, double x) const;
  void finalize(double x_min, double tail_tol, bool strict);
  void fit_tail(double next_root);

  double q_ = 0, phi_ = 0, psi_prime_phi_ = 0, mean_ = 0, lead_ = 0;
  double W0_ = 0, W0p_ = 0;
  std::vector<double> xi_, B_, eta_;
  std::vector<double> tail_rates_, tail_weights_;
  double trunc_indicator_ = 0;
  bool trunc_flag_ = false;
  // suffix_[p][i] = sum_{j >= i} B_j / xi_j^p, p = 1..kMaxOrder
  static constexpr int kMaxOrder = 6;
  std::vector<double> suffix_[kMaxOrder + 1];
};

}  // namespace levyctl
