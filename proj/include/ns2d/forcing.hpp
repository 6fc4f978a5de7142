#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "ns2d/field.hpp"
#include "ns2d/rng.hpp"
#include "ns2d/stats.hpp"
#include "ns2d/wave.hpp"

namespace ns2d {

/// Per-mode forcing intensities gamma_k >= 0, even under k -> -k, zero at
/// k = 0, and exponentially decaying: gamma_k <= c_gamma * R * exp(-|k|)
/// with R = (1/2) sum gamma_k. Validated at construction.
class NoiseSpec {
 public:
  NoiseSpec(Truncation trunc, std::vector<double> gamma_dense, double c_gamma = 10.0);

  /// Builds from (k, gamma) entries with hermitian completion: specifying
  /// gamma_k implies gamma_{-k}.
  static NoiseSpec from_modes(Truncation trunc,
                              std::span<const std::pair<WaveVector, double>> modes,
                              double c_gamma = 10.0);

  /// Band forcing gamma_k proportional to exp(-|k|) on 0 < |k| <= band_radius,
  /// normalized so that reynolds() == R.
  static NoiseSpec default_band(Truncation trunc, double R, double band_radius = 2.5,
                                double c_gamma = 10.0);

  double gamma(WaveVector k) const {
    return trunc_.in_square(k) ? gamma_[trunc_.index(k)] : 0.0;
  }
  double gamma_by_index(int dense_index) const { return gamma_[dense_index]; }
  const Truncation& truncation() const { return trunc_; }
  double c_gamma() const { return c_gamma_; }
  /// R = (1/2) sum over active k of gamma_k.
  double reynolds() const { return reynolds_; }

  void save(const std::filesystem::path& path) const;
  static NoiseSpec load(const std::filesystem::path& path);

 private:
  Truncation trunc_;
  std::vector<double> gamma_;
  double c_gamma_;
  double reynolds_;
};

/// R = (1/2) sum gamma_k.
double reynolds(const NoiseSpec& spec);

/// Physical-units forcing data; gamma_shape is the dimensionless covariance
/// shape, normalized to sum 1 over active modes.
struct PhysicalParams {
  double nu;
  double L;
  double Gamma0;
  Truncation trunc;
  std::vector<double> gamma_shape;  // dense, hermitian, zero at k = 0

  PhysicalParams(double nu_, double L_, double Gamma0_, Truncation trunc_,
                 std::vector<double> shape_dense);
};

/// gamma_k = (L^2 / nu^3) * Gamma0 * shape_k, so R = (1/2)(L^2/nu^3) Gamma0.
NoiseSpec nondimensionalize(const PhysicalParams& p, double c_gamma = 10.0);

/// Ornstein-Uhlenbeck mode values z_k(t) driving the integral equation;
/// hermitian, z(0) = 0.
class OUState {
 public:
  explicit OUState(Truncation trunc);

  const Truncation& truncation() const { return trunc_; }
  double t() const { return t_; }
  Complex z(WaveVector k) const {
    return trunc_.in_square(k) ? z_[trunc_.index(k)] : Complex{};
  }
  Complex z_by_index(int dense_index) const { return z_[dense_index]; }
  std::span<const Complex> data() const { return z_; }

  friend class OUStepper;

 private:
  Truncation trunc_;
  std::vector<Complex> z_;
  double t_;
};

/// Precomputed per-half-mode decay factors and increment standard deviations
/// for a fixed (spec, h); performs the exact distributional update
///   z_k(t+h) = exp(-|k|^2 h) z_k(t) + xi_k,  E|xi_k|^2 = gamma_k (1 - e^{-2|k|^2 h}) / (2|k|^2),
/// sampling only the half lattice and mirroring conjugates.
class OUStepper {
 public:
  OUStepper(const NoiseSpec& spec, double h);

  double h() const { return h_; }

  /// Advances state by h. If xi_out is given it receives the dense array of
  /// increments xi_k (= z(t+h) - decay * z(t)).
  void step(OUState& state, rng::StreamKey key, std::uint32_t step_index,
            std::vector<Complex>* xi_out = nullptr) const;

  /// Decay factor exp(-|k|^2 h) at a dense index (0 off-disk).
  double decay_by_index(int dense_index) const { return decay_dense_[dense_index]; }

 private:
  struct HalfMode {
    WaveVector k;
    int idx;
    int idx_neg;
    std::uint32_t mode_id;
    double decay;
    double xi_std;  // sqrt(E|xi|^2)
  };
  Truncation trunc_;
  double h_;
  std::vector<HalfMode> half_;
  std::vector<double> decay_dense_;
};

/// Exact single-mode OU second moment from z(0) = 0:
/// E|z_k(t)|^2 = gamma (1 - e^{-2|k|^2 t}) / (2|k|^2).
double ou_variance(double gamma, WaveVector k, double t);

/// Empirical Prob{ sup_{grid of [0,tau]} |z_k(t)| >= B sqrt(tau) } with exact
/// binomial CI; the grid sup underestimates the continuous sup, so p_hat is
/// a lower bound on the continuous-time probability.
stats::EnsembleResult ou_sup_tail_estimate(const NoiseSpec& spec, WaveVector k,
                                           double tau, double B, int n_traj,
                                           int n_substeps, std::uint64_t seed,
                                           int n_threads = 1);

/// Event A_D on a sampled path: every mode's grid sup satisfies
/// sup |z_k| <= sqrt(tau) D exp(-|k|/4).
bool event_A_D_indicator(const std::vector<OUState>& path, double D, double tau);

/// Same event from precomputed per-mode grid sups (dense array).
bool event_A_D_indicator(const Truncation& trunc, std::span<const double> mode_sups,
                         double D, double tau);

}  // namespace ns2d
