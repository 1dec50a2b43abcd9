#include "levyctl/scale_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "levyctl/errors.hpp"

namespace levyctl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// exp(-kDrop) is below double resolution relative to the retained terms.
constexpr double kDrop = 40.0;

double ipow(double r, int n) {
  double p = 1.0;
  for (int i = 0; i < n; ++i) p *= r;
  return p;
}

// n-fold antiderivative from 0 of exp(r y) at x for n >= 1; r^{-n} exp(r x) for n <= 0.
double kernel(int n, double r, double x) {
  if (n <= 0) return ipow(r, -n) * std::exp(r * x);
  const double rx = r * x;
  if (std::abs(rx) < 1.0) {
    double term = 1.0;
    for (int i = 2; i <= n; ++i) term /= i;
    double sum = term;
    for (int j = 1; j < 40; ++j) {
      term *= rx / (n + j);
      sum += term;
      if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return ipow(x, n) * sum;
  }
  double poly = 0.0, t = 1.0;
  for (int m = 0; m < n; ++m) {
    poly += t;
    t *= rx / (m + 1);
  }
  return (std::exp(rx) - poly) / ipow(r, n);
}

struct RootBracket {
  double lo, hi;
};

double find_root(const LevyModel& m, double q, double lo, double hi, double tol) {
  auto f = [&](double xi) { return m.psi(-xi) - q; };
  const double flo = (lo == 0.0) ? -q : f(lo);
  const double fhi = f(hi);
  if (!((flo < 0 && fhi > 0) || (flo > 0 && fhi < 0)))
    throw ConvergenceError("root bracketing failure: psi(-z) - q keeps its sign on (" +
                           std::to_string(lo) + ", " + std::to_string(hi) + ")");
  auto r = bisect(f, lo, hi, flo, tol * std::max(1.0, hi), 400);
  return r.x;
}

}  // namespace

ScaleFunction ScaleFunction::build(const LevyModel& model, double q, const ScaleOptions& opt) {
  if (!(q > 0.0) || !std::isfinite(q)) throw ConfigError("q must be > 0");
  if (opt.K < 1) throw ConfigError("K must be >= 1");
  ScaleFunction sf;
  sf.q_ = q;
  sf.phi_ = model.phi(q);
  sf.psi_prime_phi_ = model.psi_prime(sf.phi_);
  sf.mean_ = model.mean();
  sf.lead_ = 1.0 / sf.psi_prime_phi_;

  const bool bounded = model.variation() == Variation::Bounded;
  const double delta = bounded ? model.bv_drift() : kInf;
  sf.W0_ = bounded ? 1.0 / delta : 0.0;
  if (model.sigma() > 0.0)
    sf.W0p_ = 2.0 / (model.sigma() * model.sigma());
  else if (bounded && !model.infinite_activity())
    sf.W0p_ = (q + model.tail_mass(0.0)) / (delta * delta);
  else
    sf.W0p_ = kInf;

  if (model.kind() == LevyKind::BrownianDrift) {
    if (model.sigma() > 0.0) {
      const double s2 = model.sigma() * model.sigma();
      const double c = model.c();
      const double xi = (c + std::sqrt(c * c + 2.0 * q * s2)) / s2;
      sf.xi_ = {xi};
      sf.B_ = {1.0 / (s2 * xi - c)};
    }
    sf.finalize(opt.x_min, opt.tail_tol, false);
    return sf;
  }

  const bool infinite_poles = model.has_infinitely_many_poles();
  const std::size_t K = static_cast<std::size_t>(opt.K);
  const double shift = 4e-8 * (model.kind() == LevyKind::BetaFamily ? model.beta_params().beta
                                                                       : 1.0);
  std::vector<double> eta = model.pole_scales(infinite_poles ? K + 1 : 1u << 20);
  std::vector<double> xi;
  double prev = 0.0;
  for (std::size_t k = 0; k < eta.size(); ++k) {
    const double lo = (k == 0) ? 0.0 : prev + shift * std::max(1.0, prev * 1e-3);
    const double hi = eta[k] - shift * std::max(1.0, eta[k] * 1e-3);
    xi.push_back(find_root(model, q, lo, hi, opt.root_tol));
    prev = eta[k];
  }
  if (!infinite_poles && model.variation() == Variation::Unbounded) {
    // one more root beyond the last pole
    const double lo = eta.empty() ? 0.0 : eta.back() + shift * std::max(1.0, eta.back() * 1e-3);
    double hi = std::max(2.0 * lo, 1.0);
    int guard = 0;
    while (model.psi(-hi) - q < 0.0) {
      hi *= 2.0;
      if (++guard > 200) throw ConvergenceError("cannot bracket the largest root");
    }
    xi.push_back(find_root(model, q, lo, hi, opt.root_tol));
  }

  // Pairing for the truncated product: when the roots sit just above the lower pole,
  // K poles are balanced by K+1 roots, otherwise by K roots.
  std::size_t n_poles = eta.size(), n_roots = xi.size(), n_keep = xi.size();
  if (infinite_poles) {
    const double last = xi[K];
    const bool near_lower = (last - eta[K - 1]) < (eta[K] - last);
    n_poles = K;
    n_roots = near_lower ? K + 1 : K;
    n_keep = K;
  }

  std::vector<double> B(n_keep);
  for (std::size_t i = 0; i < n_keep; ++i) {
    if (opt.method == CoefficientMethod::Residue) {
      B[i] = -1.0 / model.psi_prime(-xi[i]);
      continue;
    }
    double log_a = 0.0;
    int sign = 1;
    auto mul = [&](double f) {
      if (f < 0) sign = -sign;
      log_a += std::log(std::abs(f));
    };
    for (std::size_t j = 0; j < n_poles; ++j) mul(1.0 - xi[i] / eta[j]);
    for (std::size_t j = 0; j < n_roots; ++j)
      if (j != i) mul(1.0 / (1.0 - xi[i] / xi[j]));
    const double A = sign * std::exp(log_a);
    B[i] = (sf.phi_ / q) * xi[i] * A / (sf.phi_ + xi[i]);
  }

  sf.eta_.assign(eta.begin(), eta.begin() + std::min(eta.size(), n_poles));
  sf.xi_.assign(xi.begin(), xi.begin() + n_keep);
  sf.B_ = B;

  if (infinite_poles) {
    sf.trunc_indicator_ = std::abs(B[K - 1] * std::exp(-xi[K - 1] * opt.x_min));
    if (opt.tail_correction) sf.fit_tail(xi[K]);
  }
  sf.finalize(opt.x_min, opt.tail_tol, opt.strict_truncation && infinite_poles);
  return sf;
}

// The discarded terms form the measure mu = sum_{i>K} B_i delta_{xi_i}. Four of its
// moments are known exactly: sum B and sum B xi from W(0) and W'(0+), sum B/xi and
// sum B/xi^2 from 1/(psi(s) - q) and its derivative at s = 0. A two-node Gauss rule
// for xi^{-2} mu reproduces all four; when W'(0+) is infinite, or the rule is not
// admissible, one exponential keeps the first two moments that are available.
void ScaleFunction::fit_tail(double next_root) {
  double m0 = lead_ - W0_, m1 = W0p_ - phi_ * lead_;
  double mm1 = 1.0 / q_ - lead_ / phi_;
  double mm2 = lead_ / (phi_ * phi_) - mean_ / (q_ * q_);
  for (std::size_t i = 0; i < xi_.size(); ++i) {
    m0 -= B_[i];
    m1 -= B_[i] * xi_[i];
    mm1 -= B_[i] / xi_[i];
    mm2 -= B_[i] / (xi_[i] * xi_[i]);
  }
  const double floor = xi_.back();
  if (std::isfinite(m1) && m0 > 0.0 && mm1 > 0.0 && mm2 > 0.0 && m1 > 0.0) {
    // Orthogonal polynomial x^2 + a x + b for the moments (mm2, mm1, m0, m1).
    const double det = mm1 * mm1 - mm2 * m0;
    const double a = (m1 * mm2 - m0 * mm1) / det;
    const double b = (m0 * m0 - m1 * mm1) / det;
    const double disc = a * a - 4.0 * b;
    if (det != 0.0 && disc > 0.0) {
      const double r1 = 0.5 * (-a - std::sqrt(disc)), r2 = 0.5 * (-a + std::sqrt(disc));
      // Weights of xi^{-2} mu at the nodes, then back to weights of mu.
      const double w2 = (mm1 - r1 * mm2) / (r2 - r1), w1 = mm2 - w2;
      if (r1 > floor && w1 > 0.0 && w2 > 0.0) {
        tail_rates_ = {r1, r2};
        tail_weights_ = {w1 * r1 * r1, w2 * r2 * r2};
        return;
      }
    }
  }
  if (!(m0 > 0.0)) return;
  double rate = next_root;
  if (std::isfinite(m1) && m1 / m0 > floor)
    rate = m1 / m0;
  else if (mm1 > 0.0 && m0 / mm1 > floor)
    rate = m0 / mm1;
  tail_rates_ = {rate};
  tail_weights_ = {m0};
}

void ScaleFunction::finalize(double x_min, double tail_tol, bool strict) {
  const std::size_t n = xi_.size();
  for (int p = 1; p <= kMaxOrder; ++p) {
    suffix_[p].assign(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) suffix_[p][i] = suffix_[p][i + 1] + B_[i] / ipow(xi_[i], p);
  }
  trunc_flag_ = trunc_indicator_ > tail_tol;
  if (strict && trunc_flag_)
    throw ConvergenceError("scale-function series truncated too early: |B_K exp(-xi_K x_min)| = " +
                           std::to_string(trunc_indicator_) + " > tail_tol at x_min = " +
                           std::to_string(x_min) + "; increase K");
}

double ScaleFunction::series_part(int n, double x) const {
  if (n > kMaxOrder) throw DomainError("antiderivative order too high");
  std::size_t i0 = xi_.size();
  if (x > 0.0) i0 = std::lower_bound(xi_.begin(), xi_.end(), kDrop / x) - xi_.begin();
  double s = 0.0;
  for (std::size_t i = 0; i < i0; ++i) s += B_[i] * kernel(n, -xi_[i], x);
  if (n >= 1 && i0 < xi_.size()) {
    double xm = 1.0;
    for (int m = 0; m < n; ++m) {
      const double sgn = ((n + m + 1) % 2 == 0) ? 1.0 : -1.0;
      s += sgn * xm * suffix_[n - m][i0];
      xm *= x / (m + 1);
    }
  }
  for (std::size_t j = 0; j < tail_rates_.size(); ++j)
    s += tail_weights_[j] * kernel(n, -tail_rates_[j], x);
  return s;
}

double ScaleFunction::iterated(int n, double x) const {
  if (x < 0.0) return 0.0;
  if (x == 0.0) {
    if (n >= 1) return 0.0;
    if (n == 0) return W0_;
    if (n == -1) return W0p_;
  }
  return lead_ * kernel(n, phi_, x) - series_part(n, x);
}

double ScaleFunction::W(double x) const {
  if (x < 0.0) return 0.0;
  if (phi_ * x > 700.0) return std::exp(phi_ * x) * W_phi(x);
  return iterated(0, x);
}

double ScaleFunction::W_prime(double x, Side side) const {
  if (x < 0.0) return 0.0;
  if (x == 0.0) return side == Side::Left ? 0.0 : W0p_;
  return iterated(-1, x);
}

double ScaleFunction::W_second(double x) const {
  if (x < 0.0) return 0.0;
  return iterated(-2, x);
}

double ScaleFunction::W_bar(double x) const { return x <= 0.0 ? 0.0 : iterated(1, x); }

double ScaleFunction::Z(double x) const { return x <= 0.0 ? 1.0 : 1.0 + q_ * iterated(1, x); }

double ScaleFunction::Z_bar(double x) const { return x <= 0.0 ? x : x + q_ * iterated(2, x); }

double ScaleFunction::R(double x) const { return Z_bar(x) + mean_ / q_; }

double ScaleFunction::W_phi(double x) const {
  if (x < 0.0) return 0.0;
  if (x == 0.0) return W0_;
  double s = 0.0;
  for (std::size_t i = 0; i < xi_.size(); ++i) {
    const double e = (phi_ + xi_[i]) * x;
    if (e > kDrop) break;
    s += B_[i] * std::exp(-e);
  }
  for (std::size_t j = 0; j < tail_rates_.size(); ++j)
    s += tail_weights_[j] * std::exp(-(phi_ + tail_rates_[j]) * x);
  return lead_ - s;
}

ScaleFunction::LogScaled ScaleFunction::W_log(double x) const {
  if (x < 0.0) return {0.0, 0.0};
  return {phi_ * x, W_phi(x)};
}

}  // namespace levyctl
