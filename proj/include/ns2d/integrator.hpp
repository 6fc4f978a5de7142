#pragma once

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ns2d/field.hpp"
#include "ns2d/forcing.hpp"
#include "ns2d/nonlinear.hpp"

namespace ns2d {

/// Thrown when a trajectory produces NaN/Inf.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when the certified (Picard) path cannot certify a step.
struct certification_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class TauMode { production, certified };

struct StepParams {
  double h = 1e-2;          // production step
  double delta = 0.05;      // certified tau = delta * D^{-4 alpha}
  TauMode tau_mode = TauMode::production;
  int picard_max_iter = 64;
  double picard_tol = 1e-10;
  int picard_grid = 64;     // uniform intervals per [0, tau]
  bool heun = true;         // two-stage correction (order 2); false = order 1
  bool nonlinear = true;    // disable to run the pure OU system

  void validate() const;
};

/// tau = delta * D^{-4 alpha}.
double certified_timestep(double D, double alpha, double delta);

struct TrajectorySample {
  double t = 0.0;
  double phi = 0.0;
  double minimal_d = std::numeric_limits<double>::quiet_NaN();
  double flux_residual = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> d_norms;   // per configured D
  std::vector<std::uint8_t> in_u;  // membership in U_{sqrt(2 e^{-t}) D} per D
};

struct Trajectory {
  std::vector<double> times;
  std::vector<VorticityField> fields;  // filled when keep_fields is set
  std::vector<TrajectorySample> samples;
};

struct ObservableRequest {
  std::vector<double> d_grid;
  bool minimal_d = false;
  double minimal_d_tol = 1e-6;
  bool flux_residual = false;
  int sample_stride = 1;
  bool keep_fields = false;
};

struct PicardReport {
  bool converged = false;
  int iterations = 0;
  double last_distance = std::numeric_limits<double>::quiet_NaN();
  double max_ratio = 0.0;       // worst observed contraction ratio
  bool stayed_in_ball = true;   // ||v - omega0||_X <= 1 throughout
  bool lemma3_holds = false;    // ||w(t)||_{sqrt2 D(t)} <= (sqrt2 D(t))^alpha and Phi(t) <= 2 D(t)^2
  bool lemma4_improved = false; // ||w(tau)||_{D(tau)} <= D(tau)^alpha
  bool a_d_held = false;        // noise path within the A_D envelope
  std::string failure;
};

/// Fixed point of F(v) = w0 + Duhamel(bilinear(v)) on the picard_grid of
/// [0, tau], started at v = w0 (free decay + noise). tau is taken from the
/// supplied OU path. Preconditions (Lemma 3 hypotheses) are checked:
/// d_norm(w(0), D) <= D^alpha and Phi(0) <= (3/2) D^2.
Trajectory picard_solve(const VorticityField& omega0, const std::vector<OUState>& ou_path,
                        const NormParams& p, const StepParams& sp,
                        SpectralWorkspace& ws, PicardReport& report);

/// Time stepper for the stochastic vorticity equation. Production path is an
/// exponential integrator with the exact OU increment; certified path chains
/// picard_solve over intervals of length tau.
class Integrator {
 public:
  Integrator(const NoiseSpec& spec, NormParams p, StepParams sp);

  /// One production step at time-step index `step_index`:
  ///   w_k <- e^{-|k|^2 h} w_k + h phi1(-|k|^2 h) N_k + dz_k
  /// with the two-stage correction when sp.heun. Advances `noise` alongside.
  void step_exponential(VorticityField& field, OUState& noise, rng::StreamKey key,
                        std::uint32_t step_index);

  /// Same update with an externally supplied OU increment (dense array).
  void step_exponential_with_increment(VorticityField& field,
                                       std::span<const Complex> dz, double h);

  Trajectory evolve(const VorticityField& omega0, double T, rng::StreamKey key,
                    const ObservableRequest& req = {});

  /// Reports from the certified path, one per interval (empty in production).
  const std::vector<PicardReport>& picard_reports() const { return reports_; }

  const StepParams& params() const { return sp_; }
  const NormParams& norm_params() const { return p_; }

 private:
  void record_sample(Trajectory& out, const VorticityField& f, double t,
                     const ObservableRequest& req);
  Trajectory evolve_production(const VorticityField& omega0, double T,
                               rng::StreamKey key, const ObservableRequest& req);
  Trajectory evolve_certified(const VorticityField& omega0, double T,
                              rng::StreamKey key, const ObservableRequest& req);

  NoiseSpec spec_;
  NormParams p_;
  StepParams sp_;
  OUStepper ou_;
  SpectralWorkspace ws_;
  std::vector<double> decay_;   // e^{-k^2 h} per dense index
  std::vector<double> hphi1_;   // h * phi1(-k^2 h)
  std::vector<double> hphi2_;   // h * phi2(-k^2 h)
  std::vector<Complex> xi_;     // scratch OU increments
  std::vector<PicardReport> reports_;
};

/// phi1(x) = (e^x - 1)/x and phi2(x) = (e^x - 1 - x)/x^2, series near 0.
double phi1(double x);
double phi2(double x);

}  // namespace ns2d
