#include "ns2d/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <tuple>

#include "json.hpp"
#include "ns2d/checkpoint.hpp"
#include "ns2d/ensemble.hpp"
#include "ns2d/harness.hpp"
#include "ns2d/integrator.hpp"
#include "ns2d/rng.hpp"

namespace ns2d::runner {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct OutputSink {
  fs::path dir;
  std::vector<std::tuple<std::string, std::string, bool>> outputs;  // name, digest, primary

  fs::path reserve(const std::string& name) const { return dir / name; }

  void note(const std::string& name, bool primary) {
    outputs.emplace_back(name, rng::hex64(rng::fnv1a64_file(dir / name)), primary);
  }
};

class CsvWriter {
 public:
  CsvWriter(const fs::path& path) : f_(std::fopen(path.string().c_str(), "w")) {
    if (!f_) throw std::runtime_error("cannot write " + path.string());
  }
  ~CsvWriter() {
    if (f_) std::fclose(f_);
  }
  void raw(const std::string& line) { std::fprintf(f_, "%s\n", line.c_str()); }
  void field(double v) {
    std::fprintf(f_, "%s%.17g", first_ ? "" : ",", v);
    first_ = false;
  }
  void field(int v) {
    std::fprintf(f_, "%s%d", first_ ? "" : ",", v);
    first_ = false;
  }
  void endrow() {
    std::fprintf(f_, "\n");
    first_ = true;
  }

 private:
  std::FILE* f_;
  bool first_ = true;
};

NoiseSpec build_noise(const config::RunConfig& cfg) {
  const Truncation trunc(cfg.k_max);
  if (!cfg.noise_file.empty()) {
    NoiseSpec spec = NoiseSpec::load(cfg.noise_file);
    if (!(spec.truncation() == trunc))
      throw config::config_error("config: noise_file k_max differs from [physics] k_max");
    return spec;
  }
  if (cfg.nu > 0.0 && cfg.L > 0.0 && cfg.Gamma0 >= 0.0) {
    std::vector<double> shape(static_cast<std::size_t>(trunc.array_size()), 0.0);
    for (const WaveVector k : trunc.active_modes())
      if (norm(k) <= cfg.band_radius)
        shape[static_cast<std::size_t>(trunc.index(k))] = std::exp(-norm(k));
    return nondimensionalize(PhysicalParams(cfg.nu, cfg.L, cfg.Gamma0, trunc, shape),
                             cfg.c_gamma);
  }
  return NoiseSpec::default_band(trunc, cfg.R, cfg.band_radius, cfg.c_gamma);
}

StepParams build_step(const config::RunConfig& cfg) {
  StepParams sp;
  sp.h = cfg.h;
  sp.delta = cfg.delta;
  sp.picard_max_iter = cfg.picard_max_iter;
  sp.picard_tol = cfg.picard_tol;
  sp.picard_grid = cfg.picard_grid;
  sp.heun = cfg.heun;
  sp.nonlinear = cfg.nonlinear;
  return sp;
}

harness::RunParams build_params(const config::RunConfig& cfg, double D = 1.0) {
  harness::RunParams p;
  p.norm = NormParams(cfg.r, cfg.alpha, D);
  p.step = build_step(cfg);
  p.n_traj = cfg.n_traj;
  p.n_threads = cfg.threads;
  p.seed = cfg.seed;
  p.config_digest = cfg.digest();
  return p;
}

VorticityField initial_field(const config::RunConfig& cfg, const Truncation& trunc) {
  if (cfg.init == "zero") return VorticityField{trunc};
  if (cfg.init == "single_pair") {
    VorticityField f{trunc};
    f.set_pair({cfg.init_kx, cfg.init_ky}, Complex(cfg.amplitude, 0.0));
    return f;
  }
  return harness::profile_fixed_enstrophy(trunc, cfg.phi0, cfg.r);
}

/// Reproducible hermitian test field: per-mode complex Gaussians damped as
/// |k|^{-2} e^{-|k|/4}, scaled by `amplitude`.
VorticityField random_field(const Truncation& trunc, std::uint64_t seed,
                            std::uint32_t index, double amplitude) {
  VorticityField f{trunc};
  for (const WaveVector k : trunc.half_modes()) {
    const Complex g = rng::complex_gauss(seed, index, 0, trunc.mode_id(k),
                                         rng::draw_init, 2.0);
    const double kk = norm(k);
    f.set_pair(k, amplitude * std::exp(-kk / 4.0) / (kk * kk) * g);
  }
  return f;
}

json ensemble_json(const stats::EnsembleResult& r) {
  return json{{"n_traj", r.n_traj},
              {"n_hits", r.n_hits},
              {"p_hat", r.p_hat},
              {"ci95", {r.ci95.lo, r.ci95.hi}},
              {"seed", r.seed},
              {"config_digest", r.config_digest}};
}

std::vector<double> default_d2_grid(double R) {
  return {0.75 * R, 1.0 * R, 1.25 * R, 1.5 * R, 1.75 * R, 2.0 * R};
}

std::vector<double> default_d_grid(double R) {
  return {std::sqrt(1.6 * R), std::sqrt(2.4 * R), std::sqrt(3.2 * R), std::sqrt(4.0 * R)};
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

json run_simulate(const config::RunConfig& cfg, const NoiseSpec& spec, OutputSink& sink) {
  const Truncation& trunc = spec.truncation();
  Integrator integ(spec, NormParams(cfg.r, cfg.alpha, 1.0), build_step(cfg));
  ObservableRequest req;
  req.d_grid = cfg.d_grid;
  req.minimal_d = true;
  req.flux_residual = true;
  req.keep_fields = cfg.checkpoint_interval > 0;
  const Trajectory traj =
      integ.evolve(initial_field(cfg, trunc), cfg.T, {cfg.seed, 0}, req);

  {
    CsvWriter csv(sink.reserve("trajectory.csv"));
    std::string head = "t,Phi,minimal_D";
    for (const double d : cfg.d_grid) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), ",d_norm_D%g,in_U_D%g", d, d);
      head += buf;
    }
    head += ",enstrophy_flux_residual";
    csv.raw(head);
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
      const TrajectorySample& s = traj.samples[i];
      csv.field(s.t);
      csv.field(s.phi);
      csv.field(s.minimal_d);
      for (std::size_t d = 0; d < cfg.d_grid.size(); ++d) {
        csv.field(s.d_norms[d]);
        csv.field(static_cast<int>(s.in_u[d]));
      }
      csv.field(s.flux_residual);
      csv.endrow();
    }
  }
  sink.note("trajectory.csv", true);

  if (cfg.checkpoint_interval > 0) {
    for (std::size_t i = 0; i < traj.fields.size(); i += cfg.checkpoint_interval) {
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint_%06zu.bin", i);
      checkpoint::write_binary(traj.fields[i], sink.reserve(name));
      sink.note(name, true);
    }
  }
  return json{{"event_kind", "trajectory"},
              {"samples", traj.samples.size()},
              {"final_phi", traj.samples.back().phi}};
}

json run_ensemble(const config::RunConfig& cfg, const NoiseSpec& spec, OutputSink& sink) {
  const harness::RunParams params = build_params(cfg);
  const VorticityField init = initial_field(cfg, spec.truncation());
  std::vector<double> phis(static_cast<std::size_t>(cfg.n_traj));
  {
    // One worker-local integrator per thread, one stream per trajectory.
    const auto results = parallel_map<double>(
        cfg.n_traj, cfg.threads, [&](int i) {
          Integrator integ(spec, params.norm, params.step);
          const Trajectory t = integ.evolve(
              init, cfg.T, {cfg.seed, static_cast<std::uint32_t>(i)},
              ObservableRequest{.sample_stride = 1 << 30});
          return t.samples.back().phi;
        });
    phis = results;
  }
  CsvWriter csv(sink.reserve("ensemble.csv"));
  csv.raw("traj,phi_T");
  for (std::size_t i = 0; i < phis.size(); ++i) {
    csv.field(static_cast<int>(i));
    csv.field(phis[i]);
    csv.endrow();
  }
  sink.note("ensemble.csv", true);
  const auto ms = stats::mean_stderr(phis);
  return json{{"event_kind", "ensemble_phi"},
              {"n_traj", cfg.n_traj},
              {"phi_mean", ms.mean},
              {"phi_stderr", ms.stderr_}};
}

json run_verify_conservation(const config::RunConfig& cfg, const NoiseSpec& spec,
                             OutputSink& sink) {
  const Truncation& trunc = spec.truncation();
  struct Row {
    double rel_dev, enst_flux, energy_flux, phi;
  };
  const auto rows = parallel_map<Row>(cfg.n_fields, cfg.threads, [&](int i) {
    SpectralWorkspace ws(trunc);
    const VorticityField f =
        random_field(trunc, cfg.seed, static_cast<std::uint32_t>(i), cfg.amplitude);
    const BilinearResult direct = convolution_direct(f);
    const BilinearResult fast = ws.convolution_fft(f);
    double max_abs = 0.0, max_dev = 0.0;
    for (const WaveVector k : trunc.active_modes()) {
      const int idx = trunc.index(k);
      max_abs = std::max(max_abs, std::abs(direct.field[idx]));
      max_dev = std::max(max_dev, std::abs(direct.field[idx] - fast.field[idx]));
    }
    const auto [enst, ener] = quadratic_invariants(f, fast);
    return Row{max_abs > 0 ? max_dev / max_abs : max_dev, enst, ener, enstrophy(f)};
  });

  CsvWriter csv(sink.reserve("conservation.csv"));
  csv.raw("field,rel_deviation,enstrophy_flux,energy_flux,phi");
  double worst_dev = 0.0, worst_flux = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    csv.field(static_cast<int>(i));
    csv.field(r.rel_dev);
    csv.field(r.enst_flux);
    csv.field(r.energy_flux);
    csv.field(r.phi);
    csv.endrow();
    worst_dev = std::max(worst_dev, r.rel_dev);
    const double scale = std::pow(std::max(r.phi, 1e-300), 1.5);
    worst_flux = std::max(worst_flux,
                          std::max(std::fabs(r.enst_flux), std::fabs(r.energy_flux)) / scale);
  }
  sink.note("conservation.csv", true);
  return json{{"event_kind", "conservation"},
              {"n_fields", cfg.n_fields},
              {"max_rel_deviation", worst_dev},
              {"max_flux_over_phi15", worst_flux}};
}

json run_lemma1(const config::RunConfig& cfg, const NoiseSpec& spec, OutputSink& sink) {
  const harness::RunParams params = build_params(cfg);
  const std::vector<double> grid =
      cfg.d2_grid.empty() ? default_d2_grid(spec.reynolds()) : cfg.d2_grid;
  const harness::TailTable table =
      harness::lemma1_tail(cfg.phi0, cfg.t_check, grid, spec, params);

  CsvWriter csv(sink.reserve("lemma1_tail.csv"));
  csv.raw("d2,p_hat,ci_lo,ci_hi");
  for (const auto& row : table.rows) {
    csv.field(row.d2);
    csv.field(row.result.p_hat);
    csv.field(row.result.ci95.lo);
    csv.field(row.result.ci95.hi);
    csv.endrow();
  }
  sink.note("lemma1_tail.csv", true);

  const harness::ExpMomentResult moment =
      harness::exp_moment_check(cfg.phi0, cfg.t_check, spec, params);
  json j{{"event_kind", harness::to_string(harness::EventKind::enstrophy_tail)},
         {"parameters", {{"phi0", cfg.phi0}, {"t", cfg.t_check}, {"R", spec.reynolds()}}},
         {"n_traj", cfg.n_traj},
         {"seed", cfg.seed},
         {"fit_slope", table.logp_fit.slope},
         {"fit_points", table.logp_fit.n},
         {"exp_moment",
          {{"lhs", moment.lhs},
           {"lhs_upper", moment.lhs_upper},
           {"rhs", moment.rhs},
           {"pass", moment.pass}}}};
  if (cfg.phi0 > 0.0) {
    const std::vector<double> times{0.25, 0.5, 0.75, 1.0};
    const auto cor = harness::lemma1_corollary_check(cfg.phi0, times, spec, params);
    j["corollary"] = {{"joint_pass", cor.joint_pass},
                      {"per_time_fail", cor.per_time_fail},
                      {"union_bound_consistent", cor.union_bound_consistent}};
  }
  std::vector<json> rows;
  for (const auto& row : table.rows) {
    json rj = ensemble_json(row.result);
    rj["d2"] = row.d2;
    rows.push_back(rj);
  }
  j["results"] = rows;
  return j;
}

json run_lemma2(const config::RunConfig& cfg, const NoiseSpec& spec, OutputSink& sink) {
  const std::vector<double> b_grid = cfg.b_grid.empty()
                                         ? std::vector<double>{1.0, 2.0, 3.0}
                                         : cfg.b_grid;
  const WaveVector mode{cfg.mode_kx, cfg.mode_ky};
  json rows = json::array();
  {
    CsvWriter csv(sink.reserve("lemma2_tail.csv"));
    csv.raw("B,p_hat,ci_lo,ci_hi");
    for (const double B : b_grid) {
      const auto r = ou_sup_tail_estimate(spec, mode, cfg.tau, B, cfg.n_traj,
                                          cfg.n_substeps, cfg.seed, cfg.threads);
      csv.field(B);
      csv.field(r.p_hat);
      csv.field(r.ci95.lo);
      csv.field(r.ci95.hi);
      csv.endrow();
      json rj = ensemble_json(r);
      rj["B"] = B;
      rows.push_back(rj);
    }
  }
  sink.note("lemma2_tail.csv", true);

  // Event A_D across the D grid (paths regenerated identically per D).
  const std::vector<double> d_grid =
      cfg.d_grid.empty() ? default_d_grid(std::max(spec.reynolds(), 1.0)) : cfg.d_grid;
  const OUStepper stepper(spec, cfg.tau / cfg.n_substeps);
  json ad_rows = json::array();
  {
    CsvWriter csv(sink.reserve("lemma2_ad.csv"));
    csv.raw("D,p_hat,ci_lo,ci_hi");
    const auto sups = parallel_map<std::vector<double>>(
        cfg.n_traj, cfg.threads, [&](int i) {
          OUState state{spec.truncation()};
          std::vector<double> sup(static_cast<std::size_t>(spec.truncation().array_size()),
                                  0.0);
          for (int s = 0; s < cfg.n_substeps; ++s) {
            stepper.step(state, {cfg.seed, static_cast<std::uint32_t>(i)},
                         static_cast<std::uint32_t>(s));
            for (const WaveVector k : spec.truncation().half_modes()) {
              const std::size_t idx = static_cast<std::size_t>(spec.truncation().index(k));
              sup[idx] = std::max(sup[idx], std::abs(state.z_by_index(static_cast<int>(idx))));
            }
          }
          return sup;
        });
    for (const double D : d_grid) {
      int hits = 0;
      for (const auto& sup : sups)
        if (event_A_D_indicator(spec.truncation(), sup, D, cfg.tau)) ++hits;
      const auto r = stats::make_ensemble_result(cfg.n_traj, hits, cfg.seed, cfg.digest());
      csv.field(D);
      csv.field(r.p_hat);
      csv.field(r.ci95.lo);
      csv.field(r.ci95.hi);
      csv.endrow();
      json rj = ensemble_json(r);
      rj["D"] = D;
      ad_rows.push_back(rj);
    }
  }
  sink.note("lemma2_ad.csv", true);
  return json{{"event_kind", harness::to_string(harness::EventKind::ou_sup)},
              {"parameters",
               {{"kx", mode.kx}, {"ky", mode.ky}, {"tau", cfg.tau},
                {"n_substeps", cfg.n_substeps}}},
              {"n_traj", cfg.n_traj},
              {"seed", cfg.seed},
              {"results", rows},
              {"a_d", ad_rows}};
}

json run_proposition(const config::RunConfig& cfg, const NoiseSpec& spec,
                     OutputSink& sink) {
  const harness::RunParams params = build_params(cfg);
  const std::vector<double> d_grid =
      cfg.d_grid.empty() ? default_d_grid(spec.reynolds()) : cfg.d_grid;
  json rows = json::array();
  CsvWriter csv(sink.reserve("proposition.csv"));
  csv.raw("D,p_hat,ci_lo,ci_hi");
  for (const double D : d_grid) {
    const auto r = harness::proposition_escape(D, spec, params, cfg.n_checks);
    csv.field(D);
    csv.field(r.p_hat);
    csv.field(r.ci95.lo);
    csv.field(r.ci95.hi);
    csv.endrow();
    json rj = ensemble_json(r);
    rj["D"] = D;
    rows.push_back(rj);
  }
  sink.note("proposition.csv", true);
  return json{{"event_kind", harness::to_string(harness::EventKind::region_escape)},
              {"parameters", {{"n_checks", cfg.n_checks}, {"R", spec.reynolds()}}},
              {"n_traj", cfg.n_traj},
              {"seed", cfg.seed},
              {"results", rows}};
}

json run_theorem_ladder(const config::RunConfig& cfg, const NoiseSpec& spec,
                        OutputSink& sink) {
  const harness::RunParams params = build_params(cfg);
  harness::LadderSpec ladder;
  ladder.a_hat = cfg.ladder_a_hat;
  ladder.R = spec.reynolds();
  ladder.levels = cfg.ladder_levels;
  std::vector<int> family;
  for (const double k : cfg.k_star_family) family.push_back(static_cast<int>(k));
  if (family.empty())
    family = {cfg.k_max / 2, 3 * cfg.k_max / 4, cfg.k_max};

  std::vector<std::pair<int, int>> pairs;
  if (cfg.ladder_m >= 0 && cfg.ladder_n >= 0) {
    if (cfg.ladder_m > cfg.ladder_n + 1)
      throw config::config_error("config: ladder requires m <= n + 1");
    pairs.emplace_back(cfg.ladder_m, cfg.ladder_n);
  } else {
    // Default sweep along the fixed offset m = n + 1.
    for (int n = 1; n < cfg.ladder_levels; ++n) pairs.emplace_back(n + 1, n);
  }

  json rows = json::array();
  CsvWriter csv(sink.reserve("transition.csv"));
  csv.raw("m,n,D_m,D_n,p_hat,ci_lo,ci_hi,pi_n");
  for (const auto& [m, n] : pairs) {
    const auto r = harness::transition_estimate(ladder, m, n, spec, params, family);
    csv.field(m);
    csv.field(n);
    csv.field(ladder.d(m));
    csv.field(ladder.d(n));
    csv.field(r.worst.p_hat);
    csv.field(r.worst.ci95.lo);
    csv.field(r.worst.ci95.hi);
    csv.field(r.pi_n);
    csv.endrow();
    json rj = ensemble_json(r.worst);
    rj["m"] = m;
    rj["n"] = n;
    rj["pi_n"] = r.pi_n;
    rj["profiles"] = r.per_profile.size();
    rows.push_back(rj);
  }
  sink.note("transition.csv", true);
  return json{{"event_kind", harness::to_string(harness::EventKind::region_membership)},
              {"parameters",
               {{"a_hat", cfg.ladder_a_hat}, {"levels", cfg.ladder_levels},
                {"R", spec.reynolds()}}},
              {"n_traj", cfg.n_traj},
              {"seed", cfg.seed},
              {"results", rows}};
}

json run_time_average(const config::RunConfig& cfg, const NoiseSpec& spec,
                      OutputSink& sink) {
  const harness::RunParams params = build_params(cfg);
  const std::vector<double> d_grid =
      cfg.d_grid.empty() ? default_d_grid(spec.reynolds()) : cfg.d_grid;
  const WaveVector mode{cfg.mode_kx, cfg.mode_ky};
  json rows = json::array();
  CsvWriter csv(sink.reserve("time_average.csv"));
  csv.raw("D,p_hat,ci_lo,ci_hi");
  for (const double D : d_grid) {
    const auto r =
        harness::time_average_mode(mode, cfg.t_check, cfg.t_avg, D, spec, params);
    csv.field(D);
    csv.field(r.p_hat);
    csv.field(r.ci95.lo);
    csv.field(r.ci95.hi);
    csv.endrow();
    json rj = ensemble_json(r);
    rj["D"] = D;
    rows.push_back(rj);
  }
  sink.note("time_average.csv", true);
  return json{{"event_kind", harness::to_string(harness::EventKind::time_avg_mode)},
              {"parameters",
               {{"kx", mode.kx}, {"ky", mode.ky}, {"t", cfg.t_check}, {"T", cfg.t_avg}}},
              {"n_traj", cfg.n_traj},
              {"seed", cfg.seed},
              {"results", rows}};
}

json run_spectrum(const config::RunConfig& cfg, const NoiseSpec& spec, OutputSink& sink) {
  harness::RunParams params = build_params(cfg);
  const auto ensemble = harness::burned_in_ensemble(
      spec, params, cfg.burn_in, cfg.snapshots, cfg.snapshot_spacing, cfg.chains);
  const SpectrumEstimate est = energy_spectrum(ensemble);
  {
    CsvWriter csv(sink.reserve("spectrum.csv"));
    csv.raw("k,e,mode_count");
    for (const auto& s : est.shells) {
      csv.field(s.k);
      csv.field(s.e);
      csv.field(s.mode_count);
      csv.endrow();
    }
  }
  sink.note("spectrum.csv", true);
  const auto report = harness::spectrum_bound_report(
      ensemble, cfg.r, cfg.alpha_tilde, spec.reynolds(), cfg.fit_k_lo, cfg.fit_k_hi,
      cfg.fit_slack);
  return json{{"event_kind", "spectrum_bound"},
              {"parameters",
               {{"r", cfg.r}, {"alpha_tilde", cfg.alpha_tilde},
                {"snapshots", cfg.snapshots}, {"burn_in", cfg.burn_in}}},
              {"seed", cfg.seed},
              {"fit_slope", report.fit.slope},
              {"slope_bound", report.slope_bound},
              {"c_hat", report.c_hat},
              {"shells_used", report.shells_used},
              {"pass", report.pass}};
}

json run_picard_certify(const config::RunConfig& cfg, const NoiseSpec& spec,
                        OutputSink& sink, bool& certified) {
  const double D = cfg.d_grid.empty() ? 2.0 : cfg.d_grid.front();
  const NormParams p(cfg.r, cfg.alpha, D);
  StepParams sp = build_step(cfg);
  const double tau = certified_timestep(D, cfg.alpha, cfg.delta);
  const int grid = sp.picard_grid;
  const double h_sub = tau / grid;
  const Truncation& trunc = spec.truncation();
  SpectralWorkspace ws(trunc);
  const OUStepper sub(spec, h_sub);

  VorticityField field = harness::profile_saturating_U(trunc, p);
  certified = true;
  json rows = json::array();
  CsvWriter csv(sink.reserve("picard_certify.csv"));
  csv.raw("interval,converged,iterations,max_ratio,in_ball,lemma3,lemma4,a_d,exp_sup_diff");
  for (int interval = 0; interval < cfg.intervals; ++interval) {
    const double t0 = interval * tau;
    const NormParams local = p.with_D(std::exp(-0.5 * t0) * D);
    std::vector<OUState> path;
    path.emplace_back(trunc);
    for (int j = 0; j < grid; ++j) {
      OUState next = path.back();
      sub.step(next, {cfg.seed, 0}, static_cast<std::uint32_t>(interval * grid + j));
      path.push_back(std::move(next));
    }
    PicardReport report;
    Trajectory piece = picard_solve(field, path, local, sp, ws, report);

    // Cross-check: drive the exponential integrator with the same OU
    // increments on the same grid and compare at tau.
    double sup_diff = std::numeric_limits<double>::quiet_NaN();
    if (report.converged) {
      Integrator integ(spec, local, sp);
      VorticityField expfield = field;
      std::vector<Complex> dz(static_cast<std::size_t>(trunc.array_size()));
      for (int j = 0; j < grid; ++j) {
        for (const WaveVector k : trunc.active_modes()) {
          const int idx = trunc.index(k);
          dz[static_cast<std::size_t>(idx)] =
              path[static_cast<std::size_t>(j) + 1].z_by_index(idx) -
              sub.decay_by_index(idx) * path[static_cast<std::size_t>(j)].z_by_index(idx);
        }
        integ.step_exponential_with_increment(expfield, dz, h_sub);
      }
      sup_diff = 0.0;
      for (const WaveVector k : trunc.active_modes())
        sup_diff = std::max(sup_diff, std::abs(expfield[trunc.index(k)] -
                                               piece.fields.back()[trunc.index(k)]));
    }

    csv.field(interval);
    csv.field(static_cast<int>(report.converged));
    csv.field(report.iterations);
    csv.field(report.max_ratio);
    csv.field(static_cast<int>(report.stayed_in_ball));
    csv.field(static_cast<int>(report.lemma3_holds));
    csv.field(static_cast<int>(report.lemma4_improved));
    csv.field(static_cast<int>(report.a_d_held));
    csv.field(sup_diff);
    csv.endrow();
    rows.push_back(json{{"interval", interval},
                        {"converged", report.converged},
                        {"iterations", report.iterations},
                        {"max_ratio", report.max_ratio},
                        {"stayed_in_ball", report.stayed_in_ball},
                        {"lemma3_holds", report.lemma3_holds},
                        {"lemma4_improved", report.lemma4_improved},
                        {"a_d_held", report.a_d_held},
                        {"exp_sup_diff", sup_diff},
                        {"failure", report.failure}});
    if (!report.converged || !report.lemma3_holds) {
      certified = false;
      break;
    }
    field = piece.fields.back();
  }
  sink.note("picard_certify.csv", true);
  return json{{"event_kind", "picard_certification"},
              {"parameters",
               {{"D", D}, {"delta", cfg.delta}, {"tau", tau}, {"grid", grid},
                {"intervals", cfg.intervals}}},
              {"seed", cfg.seed},
              {"certified", certified},
              {"results", rows}};
}

void write_error(const fs::path& dir, int code, const std::string& message) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(dir / "error.json");
  if (out) out << json{{"code", code}, {"message", message}}.dump(2) << "\n";
}

}  // namespace

int run(const config::RunConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    write_error(cfg.out_dir, exit_config, e.what());
    std::cerr << "config error: " << e.what() << "\n";
    return exit_config;
  }
  try {
    const NoiseSpec spec = build_noise(cfg);
    OutputSink sink;
    sink.dir = cfg.out_dir;
    fs::create_directories(sink.dir);

    json results;
    bool certified = true;
    switch (cfg.experiment) {
      case config::Experiment::simulate: results = run_simulate(cfg, spec, sink); break;
      case config::Experiment::ensemble: results = run_ensemble(cfg, spec, sink); break;
      case config::Experiment::verify_conservation:
        results = run_verify_conservation(cfg, spec, sink);
        break;
      case config::Experiment::lemma1: results = run_lemma1(cfg, spec, sink); break;
      case config::Experiment::lemma2: results = run_lemma2(cfg, spec, sink); break;
      case config::Experiment::proposition:
        results = run_proposition(cfg, spec, sink);
        break;
      case config::Experiment::theorem_ladder:
        results = run_theorem_ladder(cfg, spec, sink);
        break;
      case config::Experiment::time_average:
        results = run_time_average(cfg, spec, sink);
        break;
      case config::Experiment::spectrum: results = run_spectrum(cfg, spec, sink); break;
      case config::Experiment::picard_certify:
        results = run_picard_certify(cfg, spec, sink, certified);
        break;
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    results["experiment"] = config::to_string(cfg.experiment);
    results["config_digest"] = cfg.digest();
    results["wall_time"] = wall;
    {
      std::ofstream out(sink.dir / "results.json");
      out << results.dump(2) << "\n";
    }
    sink.note("results.json", false);  // contains wall time; not replay-compared

    json manifest{{"tool", "stoch-ns2d"},
                  {"version", kToolVersion},
                  {"experiment", config::to_string(cfg.experiment)},
                  {"seed", cfg.seed},
                  {"threads", cfg.threads},
                  {"config", cfg.serialize()},
                  {"config_digest", cfg.digest()},
                  {"wall_time_s", wall}};
    json outs = json::array();
    for (const auto& [name, digest, primary] : sink.outputs)
      outs.push_back(json{{"name", name}, {"digest", digest}, {"primary", primary}});
    manifest["outputs"] = outs;
    {
      std::ofstream out(sink.dir / "manifest.json");
      out << manifest.dump(2) << "\n";
    }
    if (!certified) return exit_certification;
    return exit_ok;
  } catch (const config::config_error& e) {
    write_error(cfg.out_dir, exit_config, e.what());
    std::cerr << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const certification_error& e) {
    write_error(cfg.out_dir, exit_certification, e.what());
    std::cerr << "certification failure: " << e.what() << "\n";
    return exit_certification;
  } catch (const numerical_error& e) {
    write_error(cfg.out_dir, exit_numerical, e.what());
    std::cerr << "numerical abort: " << e.what() << "\n";
    return exit_numerical;
  } catch (const std::exception& e) {
    write_error(cfg.out_dir, exit_numerical, e.what());
    std::cerr << "error: " << e.what() << "\n";
    return exit_numerical;
  }
}

int replay(const std::filesystem::path& manifest_path, int thread_override) {
  json manifest;
  try {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot open manifest " + manifest_path.string());
    in >> manifest;
  } catch (const std::exception& e) {
    std::cerr << "replay: " << e.what() << "\n";
    return exit_config;
  }
  try {
    config::RunConfig cfg = config::parse(manifest.at("config").get<std::string>());
    const fs::path replay_dir =
        manifest_path.parent_path() / ("replay_" + cfg.digest().substr(0, 8));
    cfg.out_dir = replay_dir.string();
    if (thread_override > 0) cfg.threads = thread_override;
    const int code = run(cfg);
    if (code != exit_ok && code != exit_certification) return code;

    for (const auto& entry : manifest.at("outputs")) {
      if (!entry.at("primary").get<bool>()) continue;
      const std::string name = entry.at("name").get<std::string>();
      const fs::path replayed = replay_dir / name;
      if (!fs::exists(replayed)) {
        std::cerr << "replay: missing output " << name << "\n";
        return exit_replay_mismatch;
      }
      const std::string digest = rng::hex64(rng::fnv1a64_file(replayed));
      if (digest != entry.at("digest").get<std::string>()) {
        std::cerr << "replay: first divergence at " << name << " (got " << digest
                  << ", manifest " << entry.at("digest").get<std::string>() << ")\n";
        return exit_replay_mismatch;
      }
    }
    std::cout << "replay: all primary outputs bit-identical\n";
    return exit_ok;
  } catch (const std::exception& e) {
    std::cerr << "replay: " << e.what() << "\n";
    return exit_config;
  }
}

}  // namespace ns2d::runner
