#include "ns2d/integrator.hpp"

#include <algorithm>
#include <cmath>

namespace ns2d {

void StepParams::validate() const {
  if (!(h > 0.0)) throw std::invalid_argument("StepParams: h must be > 0");
  if (!(delta > 0.0)) throw std::invalid_argument("StepParams: delta must be > 0");
  if (!(picard_tol > 0.0)) throw std::invalid_argument("StepParams: picard_tol must be > 0");
  if (picard_max_iter < 1)
    throw std::invalid_argument("StepParams: picard_max_iter must be >= 1");
  if (picard_grid < 1) throw std::invalid_argument("StepParams: picard_grid must be >= 1");
}

double certified_timestep(double D, double alpha, double delta) {
  if (!(D > 0.0)) throw std::invalid_argument("certified_timestep: D must be > 0");
  return delta * std::pow(D, -4.0 * alpha);
}

double phi1(double x) {
  if (std::fabs(x) < 1e-4) return 1.0 + x * (0.5 + x * (1.0 / 6.0 + x / 24.0));
  return std::expm1(x) / x;
}

double phi2(double x) {
  if (std::fabs(x) < 1e-4) return 0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0 + x / 120.0));
  return (std::expm1(x) - x) / (x * x);
}

namespace {

struct StepCoefs {
  std::vector<double> decay;
  std::vector<double> hphi1;
  std::vector<double> hphi2;
};

StepCoefs make_coefs(const Truncation& trunc, double h) {
  StepCoefs c;
  const std::size_t n = static_cast<std::size_t>(trunc.array_size());
  c.decay.assign(n, 0.0);
  c.hphi1.assign(n, 0.0);
  c.hphi2.assign(n, 0.0);
  for (const WaveVector k : trunc.active_modes()) {
    const std::size_t i = static_cast<std::size_t>(trunc.index(k));
    const double x = -static_cast<double>(norm2(k)) * h;
    c.decay[i] = std::exp(x);
    c.hphi1[i] = h * phi1(x);
    c.hphi2[i] = h * phi2(x);
  }
  return c;
}

void check_finite(const VorticityField& f, const char* where) {
  if (!f.finite())
    throw numerical_error(std::string("non-finite amplitude detected in ") + where);
}

// sup_k |a_k - b_k| |k|^r exp(D^{-alpha}|k|) without materializing a field.
double d_norm_diff(const VorticityField& a, const VorticityField& b, const NormParams& p) {
  const Truncation& trunc = a.truncation();
  const double dma = std::pow(p.D, -p.alpha);
  double sup = 0.0;
  for (const WaveVector k : trunc.active_modes()) {
    const int idx = trunc.index(k);
    const double mag = std::abs(a[idx] - b[idx]);
    if (mag == 0.0) continue;
    const double kk = norm(k);
    sup = std::max(sup, mag * std::pow(kk, p.r) * std::exp(dma * kk));
  }
  return sup;
}

}  // namespace

Integrator::Integrator(const NoiseSpec& spec, NormParams p, StepParams sp)
    : spec_(spec), p_(p), sp_(sp), ou_(spec, sp.h), ws_(spec.truncation()) {
  sp_.validate();
  StepCoefs c = make_coefs(spec_.truncation(), sp_.h);
  decay_ = std::move(c.decay);
  hphi1_ = std::move(c.hphi1);
  hphi2_ = std::move(c.hphi2);
}

void Integrator::step_exponential_with_increment(VorticityField& field,
                                                 std::span<const Complex> dz, double h) {
  const Truncation& trunc = spec_.truncation();
  const bool cached = h == sp_.h;
  StepCoefs local;
  if (!cached) local = make_coefs(trunc, h);
  const std::vector<double>& decay = cached ? decay_ : local.decay;
  const std::vector<double>& hphi1v = cached ? hphi1_ : local.hphi1;
  const std::vector<double>& hphi2v = cached ? hphi2_ : local.hphi2;

  if (!sp_.nonlinear) {
    for (const WaveVector k : trunc.active_modes()) {
      const std::size_t i = static_cast<std::size_t>(trunc.index(k));
      field.raw(static_cast<int>(i)) = decay[i] * field[static_cast<int>(i)] + dz[i];
    }
    field.enforce_hermitian();
    check_finite(field, "linear step");
    return;
  }

  const BilinearResult n1 = ws_.convolution_fft(field);
  VorticityField stage{trunc};
  for (const WaveVector k : trunc.active_modes()) {
    const std::size_t i = static_cast<std::size_t>(trunc.index(k));
    stage.raw(static_cast<int>(i)) =
        decay[i] * field[static_cast<int>(i)] + hphi1v[i] * n1.field[static_cast<int>(i)] + dz[i];
  }
  if (sp_.heun) {
    const BilinearResult n2 = ws_.convolution_fft(stage);
    for (const WaveVector k : trunc.active_modes()) {
      const std::size_t i = static_cast<std::size_t>(trunc.index(k));
      stage.raw(static_cast<int>(i)) +=
          hphi2v[i] * (n2.field[static_cast<int>(i)] - n1.field[static_cast<int>(i)]);
    }
  }
  field = std::move(stage);
  field.enforce_hermitian();
  check_finite(field, "exponential step");
}

void Integrator::step_exponential(VorticityField& field, OUState& noise,
                                  rng::StreamKey key, std::uint32_t step_index) {
  ou_.step(noise, key, step_index, &xi_);
  step_exponential_with_increment(field, xi_, sp_.h);
}

void Integrator::record_sample(Trajectory& out, const VorticityField& f, double t,
                               const ObservableRequest& req) {
  TrajectorySample s;
  s.t = t;
  s.phi = enstrophy(f);
  if (req.minimal_d) s.minimal_d = minimal_D(f, p_.r, p_.alpha, req.minimal_d_tol);
  if (req.flux_residual) {
    const BilinearResult b = ws_.convolution_fft(f);
    s.flux_residual = quadratic_invariants(f, b).first;
  }
  s.d_norms.reserve(req.d_grid.size());
  s.in_u.reserve(req.d_grid.size());
  for (const double D : req.d_grid) {
    s.d_norms.push_back(d_norm(f, p_.with_D(D)));
    // Proposition event: membership in U_{sqrt(2 e^{-t}) D}.
    const double Dt = std::sqrt(2.0 * std::exp(-t)) * D;
    s.in_u.push_back(in_region_U(f, p_.with_D(Dt)) ? 1 : 0);
  }
  out.times.push_back(t);
  out.samples.push_back(std::move(s));
  if (req.keep_fields) out.fields.push_back(f);
}

Trajectory Integrator::evolve(const VorticityField& omega0, double T, rng::StreamKey key,
                              const ObservableRequest& req) {
  if (!(T > 0.0)) throw std::invalid_argument("evolve: T must be > 0");
  reports_.clear();
  return sp_.tau_mode == TauMode::production ? evolve_production(omega0, T, key, req)
                                             : evolve_certified(omega0, T, key, req);
}

Trajectory Integrator::evolve_production(const VorticityField& omega0, double T,
                                         rng::StreamKey key, const ObservableRequest& req) {
  const Truncation& trunc = spec_.truncation();
  VorticityField field = omega0;
  OUState noise{trunc};
  Trajectory out;
  record_sample(out, field, 0.0, req);

  const int n_full = static_cast<int>(std::floor(T / sp_.h + 1e-9));
  const double t_tail = T - n_full * sp_.h;
  int step = 0;
  for (; step < n_full; ++step) {
    step_exponential(field, noise, key, static_cast<std::uint32_t>(step));
    const double t = (step + 1) * sp_.h;
    if ((step + 1) % req.sample_stride == 0 || (step + 1 == n_full && t_tail <= 1e-12))
      record_sample(out, field, t, req);
  }
  if (t_tail > 1e-12) {
    // Fractional closing step with its own exact-variance stepper.
    const OUStepper tail(spec_, t_tail);
    std::vector<Complex> xi;
    tail.step(noise, key, static_cast<std::uint32_t>(step), &xi);
    step_exponential_with_increment(field, xi, t_tail);
    record_sample(out, field, T, req);
  }
  if (!req.keep_fields) out.fields.push_back(field);  // terminal state always kept
  return out;
}

Trajectory Integrator::evolve_certified(const VorticityField& omega0, double T,
                                        rng::StreamKey key, const ObservableRequest& req) {
  const Truncation& trunc = spec_.truncation();
  const double tau = certified_timestep(p_.D, p_.alpha, sp_.delta);
  const int grid = sp_.picard_grid;
  const double h_sub = tau / grid;
  const OUStepper sub(spec_, h_sub);
  const int n_intervals = std::max(1, static_cast<int>(std::ceil(T / tau - 1e-9)));

  VorticityField field = omega0;
  Trajectory out;
  record_sample(out, field, 0.0, req);
  for (int interval = 0; interval < n_intervals; ++interval) {
    const double t0 = interval * tau;
    // Lemma 3/4 are chained with the decayed parameter D(t0) = e^{-t0/2} D.
    const NormParams local = p_.with_D(std::exp(-0.5 * t0) * p_.D);
    std::vector<OUState> path;
    path.reserve(static_cast<std::size_t>(grid) + 1);
    path.emplace_back(trunc);
    for (int j = 0; j < grid; ++j) {
      OUState next = path.back();
      sub.step(next, key, static_cast<std::uint32_t>(interval * grid + j));
      path.push_back(std::move(next));
    }
    PicardReport report;
    Trajectory piece = picard_solve(field, path, local, sp_, ws_, report);
    reports_.push_back(report);
    if (!report.converged)
      throw certification_error("picard certification failed on interval " +
                                std::to_string(interval) + ": " + report.failure);
    field = piece.fields.back();
    for (std::size_t i = 1; i < piece.times.size(); ++i)
      record_sample(out, piece.fields[i], t0 + piece.times[i], req);
  }
  if (!req.keep_fields) out.fields.push_back(field);
  return out;
}

Trajectory picard_solve(const VorticityField& omega0, const std::vector<OUState>& ou_path,
                        const NormParams& p, const StepParams& sp,
                        SpectralWorkspace& ws, PicardReport& report) {
  sp.validate();
  if (ou_path.size() < 2) throw std::invalid_argument("picard_solve: path too short");
  const Truncation& trunc = omega0.truncation();
  const int n = static_cast<int>(ou_path.size()) - 1;
  const double tau = ou_path.back().t() - ou_path.front().t();
  if (!(tau > 0.0)) throw std::invalid_argument("picard_solve: path must span (0, tau]");
  const double h = tau / n;

  // Lemma 3 hypotheses.
  const double d_alpha = std::pow(p.D, p.alpha);
  if (d_norm(omega0, p) > d_alpha * (1.0 + 1e-12))
    throw std::invalid_argument("picard_solve: requires d_norm(omega0, D) <= D^alpha");
  if (enstrophy(omega0) > 1.5 * p.D * p.D * (1.0 + 1e-12))
    throw std::invalid_argument("picard_solve: requires Phi(0) <= (3/2) D^2");

  report = PicardReport{};
  report.a_d_held = event_A_D_indicator(ou_path, p.D, tau);

  const auto& active = trunc.active_modes();
  std::vector<double> decay_h(static_cast<std::size_t>(trunc.array_size()), 0.0);
  for (const WaveVector k : active)
    decay_h[static_cast<std::size_t>(trunc.index(k))] =
        std::exp(-static_cast<double>(norm2(k)) * h);

  // Free evolution w0(t_i) = e^{-t_i k^2} w(0) + z(t_i).
  std::vector<VorticityField> w0(static_cast<std::size_t>(n) + 1, VorticityField{trunc});
  {
    VorticityField cur = omega0;
    for (int i = 0; i <= n; ++i) {
      w0[static_cast<std::size_t>(i)] = cur;
      for (const WaveVector k : active) {
        const int idx = trunc.index(k);
        w0[static_cast<std::size_t>(i)].raw(idx) += ou_path[static_cast<std::size_t>(i)].z_by_index(idx);
      }
      if (i < n)
        for (const WaveVector k : active) {
          const int idx = trunc.index(k);
          cur.raw(idx) *= decay_h[static_cast<std::size_t>(idx)];
        }
    }
  }

  const auto x_distance = [&](const std::vector<VorticityField>& a,
                              const std::vector<VorticityField>& b) {
    double sup = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double Dt = std::exp(-0.5 * i * h) * p.D;
      sup = std::max(sup, d_norm_diff(a[static_cast<std::size_t>(i)],
                                      b[static_cast<std::size_t>(i)], p.with_D(Dt)));
    }
    return sup;
  };

  std::vector<VorticityField> v = w0;
  std::vector<VorticityField> next = w0;
  std::vector<VorticityField> bilinear(static_cast<std::size_t>(n) + 1, VorticityField{trunc});
  double prev_dist = std::numeric_limits<double>::quiet_NaN();

  for (int iter = 1; iter <= sp.picard_max_iter; ++iter) {
    report.iterations = iter;
    if (sp.nonlinear) {
      for (int i = 0; i <= n; ++i)
        bilinear[static_cast<std::size_t>(i)] =
            ws.convolution_fft(v[static_cast<std::size_t>(i)]).field;
    } else {
      for (auto& b : bilinear)
        b = VorticityField{trunc};
    }
    // Duhamel integral by exponentially weighted trapezoid:
    // I(t_{i+1}) = e^{-h k^2} I(t_i) + (h/2)(e^{-h k^2} N_i + N_{i+1}).
    VorticityField integral{trunc};
    next[0] = w0[0];
    for (int i = 0; i < n; ++i) {
      VorticityField upd{trunc};
      for (const WaveVector k : active) {
        const int idx = trunc.index(k);
        const double e = decay_h[static_cast<std::size_t>(idx)];
        upd.raw(idx) = e * integral[idx] +
                       0.5 * h * (e * bilinear[static_cast<std::size_t>(i)][idx] +
                                  bilinear[static_cast<std::size_t>(i) + 1][idx]);
      }
      integral = std::move(upd);
      next[static_cast<std::size_t>(i) + 1] = w0[static_cast<std::size_t>(i) + 1];
      for (const WaveVector k : active) {
        const int idx = trunc.index(k);
        next[static_cast<std::size_t>(i) + 1].raw(idx) += integral[idx];
      }
      check_finite(next[static_cast<std::size_t>(i) + 1], "picard iterate");
    }

    const double dist = x_distance(next, v);
    const double ball = x_distance(next, w0);
    report.last_distance = dist;
    if (ball > 1.0) {
      report.stayed_in_ball = false;
      report.failure = "iterate left the ball ||v - omega0|| <= 1 (distance " +
                       std::to_string(ball) + ")";
      v.swap(next);
      return Trajectory{};
    }
    if (std::isfinite(prev_dist) && prev_dist > 10.0 * sp.picard_tol) {
      const double ratio = dist / prev_dist;
      report.max_ratio = std::max(report.max_ratio, ratio);
      if (ratio >= 1.0) {
        report.failure = "no contraction: distance ratio " + std::to_string(ratio);
        return Trajectory{};
      }
    }
    v.swap(next);
    if (dist <= sp.picard_tol) {
      report.converged = true;
      break;
    }
    prev_dist = dist;
  }
  if (!report.converged) {
    report.failure = "picard_max_iter exhausted (last distance " +
                     std::to_string(report.last_distance) + ")";
    return Trajectory{};
  }

  // Lemma 3 conclusions on the grid, and Lemma 4's improvement at tau.
  report.lemma3_holds = true;
  Trajectory out;
  for (int i = 0; i <= n; ++i) {
    const double t = i * h;
    const double Dt = std::exp(-0.5 * t) * p.D;
    const VorticityField& f = v[static_cast<std::size_t>(i)];
    const double phi = enstrophy(f);
    const double sqrt2_norm = d_norm(f, p.with_D(std::sqrt(2.0) * Dt));
    const bool ok = sqrt2_norm <= std::pow(std::sqrt(2.0) * Dt, p.alpha) * (1.0 + 1e-12) &&
                    phi <= 2.0 * Dt * Dt * (1.0 + 1e-12);
    if (!ok) report.lemma3_holds = false;
    TrajectorySample s;
    s.t = t;
    s.phi = phi;
    s.d_norms = {d_norm(f, p.with_D(Dt)), sqrt2_norm};
    s.in_u = {static_cast<std::uint8_t>(ok ? 1 : 0)};
    out.times.push_back(t);
    out.samples.push_back(std::move(s));
    out.fields.push_back(f);
  }
  {
    const double Dtau = std::exp(-0.5 * tau) * p.D;
    report.lemma4_improved =
        d_norm(v.back(), p.with_D(Dtau)) <= std::pow(Dtau, p.alpha) * (1.0 + 1e-12);
  }
  if (!report.lemma3_holds) {
    report.converged = false;
    report.failure = "fixed point violates the certified bounds";
  }
  return out;
}

}  // namespace ns2d
