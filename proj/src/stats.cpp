#include "ns2d/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ns2d::stats {

namespace {

// Continued-fraction kernel for the regularized incomplete beta (modified
// Lentz iteration).
double betacf(double a, double b, double x) {
  constexpr int max_iter = 300;
  constexpr double eps = 3e-16;
  constexpr double fpmin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete_beta: a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

namespace {

// Quantile of Beta(a, b) by bisection (incomplete_beta is monotone in x).
double beta_quantile(double p, double a, double b) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (incomplete_beta(a, b, mid) < p)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-15) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

Interval clopper_pearson(int n, int hits, double confidence) {
  if (n < 0 || hits < 0 || hits > n)
    throw std::invalid_argument("clopper_pearson: need 0 <= hits <= n");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw std::invalid_argument("clopper_pearson: confidence in (0,1)");
  if (n == 0) return {0.0, 1.0};
  const double a = 1.0 - confidence;
  Interval ci;
  ci.lo = hits == 0 ? 0.0 : beta_quantile(a / 2.0, hits, n - hits + 1.0);
  ci.hi = hits == n ? 1.0 : beta_quantile(1.0 - a / 2.0, hits + 1.0, n - hits);
  return ci;
}

EnsembleResult make_ensemble_result(int n_traj, int n_hits, std::uint64_t seed,
                                    std::string config_digest) {
  if (n_traj <= 0) throw std::invalid_argument("EnsembleResult: n_traj must be > 0");
  if (n_hits < 0 || n_hits > n_traj)
    throw std::invalid_argument("EnsembleResult: hits out of range");
  EnsembleResult r;
  r.n_traj = n_traj;
  r.n_hits = n_hits;
  r.p_hat = static_cast<double>(n_hits) / n_traj;
  r.ci95 = clopper_pearson(n_traj, n_hits, 0.95);
  r.seed = seed;
  r.config_digest = std::move(config_digest);
  return r;
}

double log_sum_exp(std::span<const double> a) {
  if (a.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  const double m = *std::max_element(a.begin(), a.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : a) s += std::exp(v - m);
  return m + std::log(s);
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line: need >= 2 matched points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
  LinearFit f;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  f.n = static_cast<int>(x.size());
  return f;
}

MeanStderr mean_stderr(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean_stderr: empty input");
  double m = 0.0;
  for (double v : values) m += v;
  m /= static_cast<double>(values.size());
  if (values.size() == 1) return {m, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  const double var = ss / (static_cast<double>(values.size()) - 1.0);
  return {m, std::sqrt(var / static_cast<double>(values.size()))};
}

}  // namespace ns2d::stats
