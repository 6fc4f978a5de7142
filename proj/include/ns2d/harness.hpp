#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ns2d/field.hpp"
#include "ns2d/forcing.hpp"
#include "ns2d/integrator.hpp"
#include "ns2d/stats.hpp"

namespace ns2d::harness {

enum class EventKind {
  enstrophy_tail,
  region_escape,
  region_membership,
  ou_sup,
  time_avg_mode,
  a_d,
};

std::string to_string(EventKind k);

/// Shared Monte Carlo run parameters.
struct RunParams {
  NormParams norm{1.5, 3.5, 1.0};
  StepParams step;
  int n_traj = 1000;
  int n_threads = 1;
  std::uint64_t seed = 1;
  std::string config_digest;
};

/// Geometric level ladder D_n^2 = 2 a_hat^{-1} R (e/2)^n.
struct LadderSpec {
  double a_hat = 1.0;
  double R = 1.0;
  int levels = 8;

  double d2(int n) const;
  double d(int n) const;
  /// pi_n = exp(-(e/2)^n), the shape the transition bounds are reported against.
  static double pi(int n);
};

// Deterministic initial profiles ---------------------------------------------

/// Shape |k|^{-r-1} exp(-decay |k|) rescaled to enstrophy exactly phi0.
VorticityField profile_fixed_enstrophy(const Truncation& trunc, double phi0,
                                       double r, double decay = 1.0);

/// Shape |k|^{-r-1} exp(-D^{-alpha}|k|) rescaled so the binding U_D
/// constraint (enstrophy or norm) is saturated.
VorticityField profile_saturating_U(const Truncation& trunc, const NormParams& p);

/// Boundary-saturating profile with enstrophy = D^2 and d_norm = D^alpha
/// (both within 1%): low-k bulk carries the enstrophy, one high-|k| pair at
/// (k_star, 0) carries the norm sup. Throws if k_star cannot accommodate the
/// norm target within the enstrophy budget.
VorticityField profile_dual_saturating(const Truncation& trunc, const NormParams& p,
                                       int k_star);

// Monte Carlo operations ------------------------------------------------------

struct TailRow {
  double d2 = 0.0;
  stats::EnsembleResult result;
};

struct TailTable {
  double phi0 = 0.0;
  double t = 0.0;
  std::vector<TailRow> rows;
  stats::LinearFit logp_fit;  // log p_hat vs D^2 over rows with p_hat > 0
  std::vector<double> phi_samples;  // terminal enstrophies (one per trajectory)
};

/// Empirical tails Prob{Phi(t) >= D^2} from initial fields of enstrophy phi0.
TailTable lemma1_tail(double phi0, double t, std::span<const double> d2_grid,
                      const NoiseSpec& spec, const RunParams& params);

/// Joint-event bookkeeping for the Corollary: D(t) = e^{-t/2} D, D^2 = Phi(0);
/// the joint failure rate never exceeds the sum of per-time failure rates on
/// the same samples.
struct CorollaryCheck {
  std::vector<double> times;
  std::vector<double> per_time_fail;
  double joint_pass = 0.0;
  bool union_bound_consistent = false;
};

CorollaryCheck lemma1_corollary_check(double phi0, std::span<const double> times,
                                      const NoiseSpec& spec, const RunParams& params);

struct ExpMomentResult {
  double lhs = 0.0;        // empirical E exp((c/R) Phi(t) e^t), c = e^{-1}/4
  double lhs_upper = 0.0;  // mean + 1.96 SE
  double rhs = 0.0;        // 3 exp((c/R) Phi(0))
  bool pass = false;
};

ExpMomentResult exp_moment_check(double phi0, double t, const NoiseSpec& spec,
                                 const RunParams& params);

/// Escape probability from {U_{sqrt(2 e^{-t}) D}} over [0,1], checked at
/// n_checks uniform times, starting from the saturating profile in U_D.
stats::EnsembleResult proposition_escape(double D, const NoiseSpec& spec,
                                         const RunParams& params, int n_checks);

struct TransitionResult {
  int m = 0;
  int n = 0;
  double pi_n = 0.0;
  stats::EnsembleResult worst;  // max p_hat over the profile family
  std::vector<stats::EnsembleResult> per_profile;
};

/// Empirical p(w, U_n^c) over unit time from boundary-saturating profiles in
/// U_m; the profile family is a documented lower bound on the sup over U_m.
TransitionResult transition_estimate(const LadderSpec& ladder, int m, int n,
                                     const NoiseSpec& spec, const RunParams& params,
                                     std::span<const int> k_star_family);

/// Prob{(1/T) int_t^{t+T} |w_k(s)|^2 ds > D^{2 alpha} k^{-2r} e^{-2 D^{-alpha} k}}
/// with trapezoid quadrature on the step grid, started from rest.
stats::EnsembleResult time_average_mode(WaveVector k, double t, double T, double D,
                                        const NoiseSpec& spec, const RunParams& params);

struct SpectrumBoundReport {
  stats::LinearFit fit;   // log e(k) vs log k
  double c_hat = 0.0;     // smallest C with e(k) <= C R^{alpha_tilde} k^{-(2r+1)}
  int shells_used = 0;
  double slope_bound = 0.0;  // -(2r+1) + slack
  bool pass = false;
};

/// Log-log tail fit of the shell spectrum against the k^{-(2r+1)} envelope.
/// Requires >= 3 nonzero shells in [k_lo, k_hi]; throws otherwise.
SpectrumBoundReport spectrum_bound_report(std::span<const VorticityField> ensemble,
                                          double r, double alpha_tilde, double R,
                                          double k_lo, double k_hi, double slack = 0.5);

/// Snapshot ensemble for spectrum estimates: n_chains trajectories, each
/// burned in for t_burn then sampled every spacing until n_snapshots total.
std::vector<VorticityField> burned_in_ensemble(const NoiseSpec& spec,
                                               const RunParams& params, double t_burn,
                                               int n_snapshots, double spacing,
                                               int n_chains);

}  // namespace ns2d::harness
