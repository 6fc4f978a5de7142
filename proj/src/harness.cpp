#include "ns2d/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace ns2d::harness {

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::enstrophy_tail: return "enstrophy_tail";
    case EventKind::region_escape: return "region_escape";
    case EventKind::region_membership: return "region_membership";
    case EventKind::ou_sup: return "ou_sup";
    case EventKind::time_avg_mode: return "time_avg_mode";
    case EventKind::a_d: return "A_D";
  }
  return "unknown";
}

double LadderSpec::d2(int n) const {
  if (n < 0 || n > levels) throw std::invalid_argument("LadderSpec: level out of range");
  if (!(a_hat > 0.0) || !(R > 0.0))
    throw std::invalid_argument("LadderSpec: a_hat and R must be > 0");
  return 2.0 / a_hat * R * std::pow(std::numbers::e / 2.0, n);
}

double LadderSpec::d(int n) const { return std::sqrt(d2(n)); }

double LadderSpec::pi(int n) { return std::exp(-std::pow(std::numbers::e / 2.0, n)); }

namespace {

// Runs fn(integrator, i) for i in [0, n) with one Integrator per worker
// thread; out[i] depends only on i, so scheduling cannot change results.
template <class R, class Fn>
std::vector<R> trajectory_map(const NoiseSpec& spec, const NormParams& p,
                              const StepParams& sp, int n, int n_threads, Fn&& fn) {
  std::vector<R> out(static_cast<std::size_t>(n));
  if (n == 0) return out;
  n_threads = std::max(1, std::min(n_threads, n));
  if (n_threads == 1) {
    Integrator integ(spec, p, sp);
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = fn(integ, i);
    return out;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_threads));
  for (int w = 0; w < n_threads; ++w) {
    workers.emplace_back([&, w] {
      try {
        Integrator integ(spec, p, sp);
        for (;;) {
          const int i = next.fetch_add(1);
          if (i >= n) break;
          out[static_cast<std::size_t>(i)] = fn(integ, i);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
        next.store(n);
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

VorticityField scaled_shape(const Truncation& trunc, double r, double decay,
                            double scale) {
  VorticityField f{trunc};
  for (const WaveVector k : trunc.half_modes()) {
    const double kk = norm(k);
    f.set_pair(k, Complex(scale * std::pow(kk, -r - 1.0) * std::exp(-decay * kk), 0.0));
  }
  return f;
}

}  // namespace

VorticityField profile_fixed_enstrophy(const Truncation& trunc, double phi0, double r,
                                       double decay) {
  if (!(phi0 >= 0.0)) throw std::invalid_argument("profile_fixed_enstrophy: phi0 >= 0");
  if (phi0 == 0.0) return VorticityField{trunc};
  VorticityField shape = scaled_shape(trunc, r, decay, 1.0);
  const double lambda = std::sqrt(phi0 / enstrophy(shape));
  return scaled_shape(trunc, r, decay, lambda);
}

VorticityField profile_saturating_U(const Truncation& trunc, const NormParams& p) {
  const double dma = std::pow(p.D, -p.alpha);
  VorticityField shape = scaled_shape(trunc, p.r, dma, 1.0);
  const double lam_norm = std::pow(p.D, p.alpha) / d_norm(shape, p);
  const double lam_phi = p.D / std::sqrt(enstrophy(shape));
  // Backed off by 1e-12 so rounding cannot push the profile past the boundary.
  const double lambda = std::min(lam_norm, lam_phi) * (1.0 - 1e-12);
  return scaled_shape(trunc, p.r, dma, lambda);
}

VorticityField profile_dual_saturating(const Truncation& trunc, const NormParams& p,
                                       int k_star) {
  if (k_star < 1 || k_star > trunc.k_max())
    throw std::invalid_argument("profile_dual_saturating: k_star outside truncation");
  const double dma = std::pow(p.D, -p.alpha);
  const double d_alpha = std::pow(p.D, p.alpha);
  // High pair at (k_star, 0): amplitude chosen so its norm term equals
  // D^alpha (backed off by 1e-12 against rounding past the boundary).
  const double A = d_alpha * std::pow(static_cast<double>(k_star), -p.r) *
                   std::exp(-dma * k_star) * (1.0 - 1e-12);
  const double d2 = p.D * p.D;
  if (A * A > 0.99 * d2)
    throw std::invalid_argument(
        "profile_dual_saturating: norm saturation exceeds the enstrophy budget");
  VorticityField base = scaled_shape(trunc, p.r, dma, 1.0);
  base.set_pair({k_star, 0}, Complex{});
  const double lambda =
      std::sqrt((d2 - A * A) / enstrophy(base)) * (1.0 - 1e-12);
  if (lambda > d_alpha)
    throw std::invalid_argument("profile_dual_saturating: bulk violates the norm bound");
  VorticityField f = scaled_shape(trunc, p.r, dma, lambda);
  f.set_pair({k_star, 0}, Complex(A, 0.0));
  return f;
}

TailTable lemma1_tail(double phi0, double t, std::span<const double> d2_grid,
                      const NoiseSpec& spec, const RunParams& params) {
  if (d2_grid.empty()) throw std::invalid_argument("lemma1_tail: empty D^2 grid");
  if (params.n_traj <= 0) throw std::invalid_argument("lemma1_tail: n_traj must be > 0");
  const VorticityField init =
      profile_fixed_enstrophy(spec.truncation(), phi0, params.norm.r);

  TailTable table;
  table.phi0 = phi0;
  table.t = t;
  table.phi_samples = trajectory_map<double>(
      spec, params.norm, params.step, params.n_traj, params.n_threads,
      [&](Integrator& integ, int i) {
        const auto traj = integ.evolve(init, t, {params.seed, static_cast<std::uint32_t>(i)},
                                       ObservableRequest{.sample_stride = 1 << 30});
        return traj.samples.back().phi;
      });

  std::vector<double> xs, ys;
  for (const double d2 : d2_grid) {
    int hits = 0;
    for (const double phi : table.phi_samples)
      if (phi >= d2) ++hits;
    TailRow row;
    row.d2 = d2;
    row.result = stats::make_ensemble_result(params.n_traj, hits, params.seed,
                                             params.config_digest);
    if (row.result.p_hat > 0.0) {
      xs.push_back(d2);
      ys.push_back(std::log(row.result.p_hat));
    }
    table.rows.push_back(std::move(row));
  }
  if (xs.size() >= 2) table.logp_fit = stats::fit_line(xs, ys);
  return table;
}

CorollaryCheck lemma1_corollary_check(double phi0, std::span<const double> times,
                                      const NoiseSpec& spec, const RunParams& params) {
  if (times.empty()) throw std::invalid_argument("corollary check: no times");
  if (!(phi0 > 0.0)) throw std::invalid_argument("corollary check: needs Phi(0) > 0");
  const double h = params.step.h;
  const VorticityField init =
      profile_fixed_enstrophy(spec.truncation(), phi0, params.norm.r);
  const double t_end = *std::max_element(times.begin(), times.end());

  // Per-trajectory bitmask: bit n set when Phi(t_n) > (3/2) D(t_n)^2.
  const auto fails = trajectory_map<std::uint64_t>(
      spec, params.norm, params.step, params.n_traj, params.n_threads,
      [&](Integrator& integ, int i) {
        const auto traj = integ.evolve(init, t_end, {params.seed, static_cast<std::uint32_t>(i)},
                                       ObservableRequest{});
        std::uint64_t mask = 0;
        for (std::size_t n = 0; n < times.size(); ++n) {
          const std::size_t step = static_cast<std::size_t>(std::llround(times[n] / h));
          const double phi = traj.samples.at(step).phi;
          const double dt2 = std::exp(-times[n]) * phi0;  // D(t)^2 with D^2 = Phi(0)
          if (phi > 1.5 * dt2) mask |= (1ull << n);
        }
        return mask;
      });

  CorollaryCheck out;
  out.times.assign(times.begin(), times.end());
  out.per_time_fail.assign(times.size(), 0.0);
  int joint = 0;
  for (const std::uint64_t mask : fails) {
    if (mask == 0) ++joint;
    for (std::size_t n = 0; n < times.size(); ++n)
      if (mask & (1ull << n)) out.per_time_fail[n] += 1.0;
  }
  for (double& f : out.per_time_fail) f /= params.n_traj;
  out.joint_pass = static_cast<double>(joint) / params.n_traj;
  double sum_fail = 0.0;
  for (const double f : out.per_time_fail) sum_fail += f;
  out.union_bound_consistent = out.joint_pass >= 1.0 - sum_fail - 1e-12;
  return out;
}

ExpMomentResult exp_moment_check(double phi0, double t, const NoiseSpec& spec,
                                 const RunParams& params) {
  const double R = spec.reynolds();
  if (!(R > 0.0)) throw std::invalid_argument("exp_moment_check: needs R > 0");
  const double c = std::exp(-1.0) / 4.0;
  const VorticityField init =
      profile_fixed_enstrophy(spec.truncation(), phi0, params.norm.r);
  const auto phis = trajectory_map<double>(
      spec, params.norm, params.step, params.n_traj, params.n_threads,
      [&](Integrator& integ, int i) {
        const auto traj = integ.evolve(init, t, {params.seed, static_cast<std::uint32_t>(i)},
                                       ObservableRequest{.sample_stride = 1 << 30});
        return traj.samples.back().phi;
      });
  // Exponents a_i = (c/R) Phi_i e^t; the mean of exp(a_i) is computed against
  // the common max so large samples cannot overflow.
  std::vector<double> a(phis.size());
  for (std::size_t i = 0; i < phis.size(); ++i) a[i] = c / R * phis[i] * std::exp(t);
  const double m = *std::max_element(a.begin(), a.end());
  std::vector<double> shifted(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) shifted[i] = std::exp(a[i] - m);
  const auto ms = stats::mean_stderr(shifted);
  ExpMomentResult out;
  out.lhs = std::exp(m) * ms.mean;
  out.lhs_upper = std::exp(m) * (ms.mean + 1.96 * ms.stderr_);
  out.rhs = 3.0 * std::exp(c / R * phi0);
  out.pass = out.lhs_upper <= out.rhs;
  return out;
}

stats::EnsembleResult proposition_escape(double D, const NoiseSpec& spec,
                                         const RunParams& params, int n_checks) {
  if (params.n_traj <= 0) throw std::invalid_argument("proposition_escape: n_traj > 0");
  if (n_checks < 1) throw std::invalid_argument("proposition_escape: n_checks >= 1");
  const NormParams pD = params.norm.with_D(D);
  const VorticityField init = profile_saturating_U(spec.truncation(), pD);
  if (!in_region_U(init, pD))
    throw std::invalid_argument("proposition_escape: failed to construct data in U_D");

  ObservableRequest req;
  req.d_grid = {D};
  const int per = std::max(1, static_cast<int>(std::llround(1.0 / (n_checks * params.step.h))));
  req.sample_stride = per;

  const auto escapes = trajectory_map<std::uint8_t>(
      spec, params.norm, params.step, params.n_traj, params.n_threads,
      [&](Integrator& integ, int i) {
        const auto traj =
            integ.evolve(init, 1.0, {params.seed, static_cast<std::uint32_t>(i)}, req);
        for (std::size_t s = 1; s < traj.samples.size(); ++s)
          if (!traj.samples[s].in_u[0]) return std::uint8_t{1};
        return std::uint8_t{0};
      });
  int hits = 0;
  for (const auto e : escapes) hits += e;
  return stats::make_ensemble_result(params.n_traj, hits, params.seed,
                                     params.config_digest);
}

TransitionResult transition_estimate(const LadderSpec& ladder, int m, int n,
                                     const NoiseSpec& spec, const RunParams& params,
                                     std::span<const int> k_star_family) {
  if (m > n + 1)
    throw std::invalid_argument("transition_estimate: bound regime requires m <= n + 1");
  const double Dm = ladder.d(m);
  const double Dn = ladder.d(n);
  const NormParams pm = params.norm.with_D(Dm);
  const NormParams pn = params.norm.with_D(Dn);

  std::vector<VorticityField> family;
  for (const int k_star : k_star_family) {
    try {
      family.push_back(profile_dual_saturating(spec.truncation(), pm, k_star));
    } catch (const std::invalid_argument&) {
      // High pair does not fit at this level; skip this family member.
    }
  }
  if (family.empty()) family.push_back(profile_saturating_U(spec.truncation(), pm));

  TransitionResult out;
  out.m = m;
  out.n = n;
  out.pi_n = LadderSpec::pi(n);
  for (std::size_t f = 0; f < family.size(); ++f) {
    const VorticityField& init = family[f];
    const auto hits_v = trajectory_map<std::uint8_t>(
        spec, params.norm, params.step, params.n_traj, params.n_threads,
        [&](Integrator& integ, int i) {
          // Distinct stream block per profile.
          const std::uint32_t traj =
              static_cast<std::uint32_t>(i) + (static_cast<std::uint32_t>(f) << 24);
          const auto traj_out = integ.evolve(init, 1.0, {params.seed, traj},
                                             ObservableRequest{.sample_stride = 1 << 30});
          return static_cast<std::uint8_t>(
              in_region_U(traj_out.fields.back(), pn) ? 0 : 1);
        });
    int hits = 0;
    for (const auto h8 : hits_v) hits += h8;
    out.per_profile.push_back(stats::make_ensemble_result(params.n_traj, hits, params.seed,
                                                          params.config_digest));
  }
  out.worst = out.per_profile.front();
  for (const auto& r : out.per_profile)
    if (r.p_hat > out.worst.p_hat) out.worst = r;
  return out;
}

stats::EnsembleResult time_average_mode(WaveVector k, double t, double T, double D,
                                        const NoiseSpec& spec, const RunParams& params) {
  if (!(T > 0.0)) throw std::invalid_argument("time_average_mode: T must be > 0");
  if (!spec.truncation().active(k))
    throw std::invalid_argument("time_average_mode: mode outside truncation");
  const double kk = norm(k);
  const double threshold = std::pow(D, 2.0 * params.norm.alpha) *
                           std::pow(kk, -2.0 * params.norm.r) *
                           std::exp(-2.0 * std::pow(D, -params.norm.alpha) * kk);
  const double h = params.step.h;
  const int j0 = static_cast<int>(std::llround(t / h));
  const int j1 = static_cast<int>(std::llround((t + T) / h));
  if (j1 <= j0) throw std::invalid_argument("time_average_mode: window shorter than h");
  const int idx = spec.truncation().index(k);

  const auto hits_v = trajectory_map<std::uint8_t>(
      spec, params.norm, params.step, params.n_traj, params.n_threads,
      [&](Integrator& integ, int i) {
        VorticityField field{spec.truncation()};
        OUState noise{spec.truncation()};
        const rng::StreamKey key{params.seed, static_cast<std::uint32_t>(i)};
        double integral = 0.0;
        double prev = 0.0;
        for (int step = 0; step < j1; ++step) {
          integ.step_exponential(field, noise, key, static_cast<std::uint32_t>(step));
          const double cur = std::norm(field[idx]);
          if (step + 1 > j0) integral += 0.5 * h * (prev + cur);  // trapezoid
          if (step + 1 >= j0) prev = cur;
        }
        return static_cast<std::uint8_t>(integral / T > threshold ? 1 : 0);
      });
  int hits = 0;
  for (const auto h8 : hits_v) hits += h8;
  return stats::make_ensemble_result(params.n_traj, hits, params.seed,
                                     params.config_digest);
}

SpectrumBoundReport spectrum_bound_report(std::span<const VorticityField> ensemble,
                                          double r, double alpha_tilde, double R,
                                          double k_lo, double k_hi, double slack) {
  const SpectrumEstimate spectrum = energy_spectrum(ensemble);
  std::vector<double> lx, ly;
  double c_hat = 0.0;
  for (const auto& shell : spectrum.shells) {
    if (shell.k < k_lo || shell.k > k_hi || shell.e <= 0.0) continue;
    lx.push_back(std::log(shell.k));
    ly.push_back(std::log(shell.e));
    c_hat = std::max(c_hat, shell.e * std::pow(shell.k, 2.0 * r + 1.0) /
                                std::pow(R, alpha_tilde));
  }
  if (lx.size() < 3)
    throw std::invalid_argument("spectrum_bound_report: needs >= 3 nonzero shells");
  SpectrumBoundReport out;
  out.fit = stats::fit_line(lx, ly);
  out.c_hat = c_hat;
  out.shells_used = static_cast<int>(lx.size());
  out.slope_bound = -(2.0 * r + 1.0) + slack;
  out.pass = out.fit.slope <= out.slope_bound;
  return out;
}

std::vector<VorticityField> burned_in_ensemble(const NoiseSpec& spec,
                                               const RunParams& params, double t_burn,
                                               int n_snapshots, double spacing,
                                               int n_chains) {
  if (n_snapshots < 1 || n_chains < 1)
    throw std::invalid_argument("burned_in_ensemble: need snapshots and chains >= 1");
  const double h = params.step.h;
  const int per_chain = (n_snapshots + n_chains - 1) / n_chains;

  const auto chains = trajectory_map<std::vector<VorticityField>>(
      spec, params.norm, params.step, n_chains, params.n_threads,
      [&](Integrator& integ, int c) {
        std::vector<VorticityField> snaps;
        VorticityField field{spec.truncation()};
        OUState noise{spec.truncation()};
        const rng::StreamKey key{params.seed, static_cast<std::uint32_t>(c)};
        const int last_step =
            static_cast<int>(std::llround((t_burn + per_chain * spacing) / h));
        int next_snap = static_cast<int>(std::llround((t_burn + spacing) / h));
        const int snap_every = std::max(1, static_cast<int>(std::llround(spacing / h)));
        for (int step = 0; step < last_step && static_cast<int>(snaps.size()) < per_chain;
             ++step) {
          integ.step_exponential(field, noise, key, static_cast<std::uint32_t>(step));
          if (step + 1 == next_snap) {
            snaps.push_back(field);
            next_snap += snap_every;
          }
        }
        return snaps;
      });

  std::vector<VorticityField> out;
  for (const auto& chain : chains)
    for (const auto& f : chain) {
      if (static_cast<int>(out.size()) >= n_snapshots) break;
      out.push_back(f);
    }
  return out;
}

}  // namespace ns2d::harness
