#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace ns2d::stats {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Exact (Clopper-Pearson) binomial confidence interval.
Interval clopper_pearson(int n, int hits, double confidence = 0.95);

/// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// Empirical probability with exact binomial CI and RNG provenance.
struct EnsembleResult {
  int n_traj = 0;
  int n_hits = 0;
  double p_hat = 0.0;
  Interval ci95;
  std::uint64_t seed = 0;
  std::string config_digest;
};

EnsembleResult make_ensemble_result(int n_traj, int n_hits, std::uint64_t seed,
                                    std::string config_digest = {});

/// log(sum exp(a_i)), overflow-safe.
double log_sum_exp(std::span<const double> a);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  int n = 0;
};

/// Least-squares line through (x_i, y_i); requires n >= 2.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

MeanStderr mean_stderr(std::span<const double> values);

}  // namespace ns2d::stats
