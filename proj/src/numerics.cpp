#include "levyctl/numerics.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <boost/math/quadrature/gauss.hpp>
#include <limits>
#include <queue>
#include <utility>

namespace levyctl {

RootResult brent(const std::function<double(double)>& f, double lo, double hi, double flo,
                 double fhi, double xtol, double ftol, int max_iter) {
  double a = lo, b = hi, fa = flo, fb = fhi;
  if (fa == 0.0) return {a, fa, 0, true};
  if (fb == 0.0) return {b, fb, 0, true};
  if ((fa > 0) == (fb > 0)) return {b, fb, 0, false};
  if (std::abs(fa) < std::abs(fb)) {
    std::swap(a, b);
    std::swap(fa, fb);
  }
  double c = a, fc = fa, d = b - a, e = d;
  for (int it = 1; it <= max_iter; ++it) {
    if ((fb > 0) == (fc > 0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * xtol;
    const double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || fb == 0.0 || std::abs(fb) <= ftol) return {b, fb, it, true};
    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      double p, qq, r;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * xm * s;
        qq = 1.0 - s;
      } else {
        qq = fa / fc;
        r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        qq = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0) qq = -qq;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * xm * qq - std::abs(tol1 * qq), std::abs(e * qq))) {
        e = d;
        d = p / qq;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += (std::abs(d) > tol1) ? d : (xm > 0 ? tol1 : -tol1);
    fb = f(b);
  }
  return {b, fb, max_iter, false};
}

RootResult bisect(const std::function<double(double)>& f, double lo, double hi, double flo,
                  double xtol, int max_iter) {
  const bool neg_lo = flo < 0;
  double fm = flo;
  for (int it = 1; it <= max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= xtol || mid == lo || mid == hi) return {mid, fm, it, true};
    fm = f(mid);
    if (fm == 0.0) return {mid, fm, it, true};
    if ((fm < 0) == neg_lo)
      lo = mid;
    else
      hi = mid;
  }
  return {0.5 * (lo + hi), fm, max_iter, false};
}

namespace {

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;

template <class F>
Segment gk15(const F& f, double a, double b) {
  static const auto& x = GK::abscissa();
  static const auto& wk = GK::weights();
  static const auto& wg = boost::math::quadrature::gauss<double, 7>::weights();
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double k = wk[0] * fc, g = wg[0] * fc;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double s = f(c - h * x[i]) + f(c + h * x[i]);
    k += wk[i] * s;
    if (i % 2 == 0) g += wg[i / 2] * s;
  }
  return {a, b, k * h, std::abs((k - g) * h)};
}

}  // namespace

QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     const std::vector<double>& splits, double rel_tol, double abs_tol,
                     int max_depth) {
  if (a == b) return {0.0, 0.0};
  if (a > b) {
    auto r = integrate(f, b, a, splits, rel_tol, abs_tol, max_depth);
    return {-r.value, r.error};
  }
  // Map infinite ends to a finite variable; the nodes never touch the endpoints.
  std::function<double(double)> g = f;
  std::vector<double> pts;
  double lo = a, hi = b;
  std::function<double(double)> to_t = [](double x) { return x; };
  if (std::isinf(a) && std::isinf(b)) {
    g = [&f](double t) {
      const double d = 1.0 - t * t;
      return f(t / d) * (1.0 + t * t) / (d * d);
    };
    to_t = [](double x) { return x == 0.0 ? 0.0 : (std::sqrt(1.0 + 4.0 * x * x) - 1.0) / (2.0 * x); };
    lo = -1.0;
    hi = 1.0;
  } else if (std::isinf(b)) {
    g = [&f, a](double t) {
      const double d = 1.0 - t;
      return f(a + t / d) / (d * d);
    };
    to_t = [a](double x) { return (x - a) / (1.0 + x - a); };
    lo = 0.0;
    hi = 1.0;
  } else if (std::isinf(a)) {
    g = [&f, b](double t) {
      const double d = 1.0 - t;
      return f(b - t / d) / (d * d);
    };
    to_t = [b](double x) { return (b - x) / (1.0 + b - x); };
    lo = 0.0;
    hi = 1.0;
  }
  pts.push_back(lo);
  for (double s : splits)
    if (s > a && s < b) pts.push_back(to_t(s));
  pts.push_back(hi);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  std::priority_queue<Segment> queue;
  double total = 0.0, err = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    auto s = gk15(g, pts[i], pts[i + 1]);
    total += s.value;
    err += s.error;
    queue.push(s);
  }
  const std::size_t max_segments = std::size_t{1} << std::min(max_depth, 24);
  while (err > std::max(abs_tol, rel_tol * std::abs(total)) && queue.size() < max_segments) {
    const Segment s = queue.top();
    const double mid = 0.5 * (s.a + s.b);
    if (!(mid > s.a && mid < s.b)) break;
    queue.pop();
    const auto l = gk15(g, s.a, mid), r = gk15(g, mid, s.b);
    total += l.value + r.value - s.value;
    err += l.error + r.error - s.error;
    queue.push(l);
    queue.push(r);
  }
  // recompute from the pieces to shed accumulated cancellation
  total = 0.0;
  err = 0.0;
  std::vector<double> vals;
  vals.reserve(queue.size());
  while (!queue.empty()) {
    vals.push_back(queue.top().value);
    err += queue.top().error;
    queue.pop();
  }
  std::sort(vals.begin(), vals.end(), [](double x, double y) { return std::abs(x) < std::abs(y); });
  for (double v : vals) total += v;
  return {total, err};
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  v[n - 1] = hi;
  return v;
}

double pairwise_sum(const double* v, std::size_t n) {
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

}  // namespace levyctl
