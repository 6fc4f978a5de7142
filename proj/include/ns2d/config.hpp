#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace ns2d::config {

/// Thrown for malformed files, unknown keys, or constraint violations.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Experiment {
  simulate,
  ensemble,
  verify_conservation,
  lemma1,
  lemma2,
  proposition,
  theorem_ladder,
  time_average,
  spectrum,
  picard_certify,
};

std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& s);

/// Full experiment configuration. File format is `key = value` lines grouped
/// in [physics] / [numerics] / [experiment] / [mc] / [io] sections, with the
/// experiment selector at top level. Unknown keys are rejected; CLI flags
/// override file keys.
struct RunConfig {
  Experiment experiment = Experiment::simulate;

  // [physics]
  int k_max = 16;
  double r = 1.5;
  double alpha = 3.5;
  double delta = 0.05;
  double R = -1.0;                  // direct Reynolds number (band forcing)
  std::string noise_file;          // overrides R when set
  double nu = -1.0, L = -1.0, Gamma0 = -1.0;  // physical route
  double c_gamma = 10.0;
  double band_radius = 2.5;

  // [numerics]
  double h = 1e-2;
  double T = 1.0;
  int n_substeps = 128;
  int picard_max_iter = 64;
  double picard_tol = 1e-10;
  int picard_grid = 64;
  bool heun = true;
  bool nonlinear = true;

  // [experiment]
  double phi0 = 0.0;
  double t_check = 1.0;
  std::vector<double> d_grid;       // D values
  std::vector<double> d2_grid;      // D^2 values (lemma1)
  std::vector<double> b_grid;       // B values (lemma2)
  int n_checks = 32;
  double tau = 1e-2;
  int mode_kx = 1, mode_ky = 0;
  double t_avg = 1.0;
  double ladder_a_hat = 1.0;
  int ladder_levels = 8;
  int ladder_m = -1, ladder_n = -1;  // both >= 0 selects one (m, n) pair
  std::vector<double> k_star_family;  // high-|k| saturation sites
  double burn_in = 5.0;
  int snapshots = 200;
  double snapshot_spacing = 0.25;
  int chains = 4;
  double alpha_tilde = 2.5;
  double fit_k_lo = 4.0, fit_k_hi = 20.0;
  double fit_slack = 0.5;
  int intervals = 4;
  std::string init = "zero";        // zero | single_pair | profile
  int init_kx = 1, init_ky = 0;
  double amplitude = 1.0;
  int n_fields = 100;

  // [mc]
  int n_traj = 1000;
  std::uint64_t seed = 1;

  // [io]
  std::string out_dir = "out";
  int checkpoint_interval = 0;
  int threads = 1;

  /// Re-validates every module constraint; throws config_error.
  void validate() const;

  /// Canonical text form; parse(serialize(c)) == c.
  std::string serialize() const;

  std::string digest() const;
};

RunConfig parse(const std::string& text);
RunConfig parse_file(const std::filesystem::path& path);

}  // namespace ns2d::config
