#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "ns2d/integrator.hpp"
#include "ns2d/rng.hpp"

using namespace ns2d;

namespace {

NoiseSpec quiet_spec(int k_max) {
  const Truncation trunc(k_max);
  return NoiseSpec(trunc, std::vector<double>(trunc.array_size(), 0.0));
}

NoiseSpec band_spec(int k_max, double R) {
  return NoiseSpec::default_band(Truncation(k_max), R);
}

VorticityField random_field(const Truncation& trunc, std::uint64_t seed, double amp) {
  VorticityField f{trunc};
  for (const WaveVector k : trunc.half_modes()) {
    const Complex g = rng::complex_gauss(seed, 0, 0, trunc.mode_id(k), rng::draw_init, 2.0);
    f.set_pair(k, amp * std::exp(-norm(k) / 4.0) / norm2(k) * g);
  }
  return f;
}

double max_mode_diff(const VorticityField& a, const VorticityField& b) {
  double m = 0.0;
  for (const WaveVector k : a.truncation().active_modes())
    m = std::max(m, std::abs(a[a.truncation().index(k)] - b[b.truncation().index(k)]));
  return m;
}

}  // namespace

TEST_CASE("certified timestep") {
  CHECK(certified_timestep(1.0, 3.5, 0.07) == doctest::Approx(0.07).epsilon(1e-15));
  CHECK(certified_timestep(2.0, 3.5, 0.1) ==
        doctest::Approx(6.103515625e-06).epsilon(1e-15));
  CHECK(certified_timestep(3.0, 3.5, 0.1) < certified_timestep(2.0, 3.5, 0.1));
  CHECK_THROWS_AS(certified_timestep(0.0, 3.5, 0.1), std::invalid_argument);
}

TEST_CASE("phi functions") {
  CHECK(phi1(0.0) == 1.0);
  CHECK(phi2(0.0) == 0.5);
  CHECK(phi1(-1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-14));
  // Series and direct formulas agree at the switch point.
  CHECK(phi1(-1e-4) == doctest::Approx(std::expm1(-1e-4) / -1e-4).epsilon(1e-12));
  CHECK(phi2(2e-4) ==
        doctest::Approx((std::expm1(2e-4) - 2e-4) / (2e-4 * 2e-4)).epsilon(1e-10));
}

TEST_CASE("zero noise single pair follows exact exponential decay") {
  const NoiseSpec spec = quiet_spec(4);
  StepParams sp;
  sp.h = 1e-3;
  Integrator integ(spec, NormParams(1.5, 3.5, 1.0), sp);
  VorticityField f{spec.truncation()};
  const Complex a0{0.8, -0.6};
  f.set_pair({1, 0}, a0);
  OUState noise{spec.truncation()};
  for (int step = 0; step < 1000; ++step) {
    integ.step_exponential(f, noise, {1, 0}, static_cast<std::uint32_t>(step));
    const double t = (step + 1) * sp.h;
    const Complex expect = std::exp(-t) * a0;
    CHECK(std::abs(f.at({1, 0}) - expect) <= 1e-12);
  }
}

TEST_CASE("zero noise zero field stays zero") {
  const NoiseSpec spec = quiet_spec(4);
  Integrator integ(spec, NormParams(1.5, 3.5, 1.0), StepParams{});
  const Trajectory t = integ.evolve(VorticityField{spec.truncation()}, 1.0, {3, 0},
                                    ObservableRequest{});
  for (const auto& s : t.samples) CHECK(s.phi == 0.0);
}

TEST_CASE("heun correction is second order in h") {
  const NoiseSpec spec = quiet_spec(8);
  const Truncation& trunc = spec.truncation();
  VorticityField f0{trunc};
  f0.set_pair({1, 0}, Complex(0.9, 0.1));
  f0.set_pair({2, 1}, Complex(-0.4, 0.55));

  const auto terminal = [&](double h) {
    StepParams sp;
    sp.h = h;
    Integrator integ(spec, NormParams(1.5, 3.5, 1.0), sp);
    return integ.evolve(f0, 0.5, {1, 0}, ObservableRequest{.sample_stride = 1 << 30})
        .fields.back();
  };
  const VorticityField ref = terminal(0.5 / 512);
  const double e1 = max_mode_diff(terminal(0.5 / 32), ref);
  const double e2 = max_mode_diff(terminal(0.5 / 64), ref);
  const double ratio = e1 / e2;
  CHECK(ratio > 2.5);
  CHECK(ratio < 6.5);
}

TEST_CASE("zero noise enstrophy decays at least like e^{-2t} with explicit slack") {
  const NoiseSpec spec = quiet_spec(8);
  StepParams sp;
  sp.h = 0.01;
  Integrator integ(spec, NormParams(1.5, 3.5, 1.0), sp);
  for (int trial = 0; trial < 5; ++trial) {
    const VorticityField f0 =
        random_field(spec.truncation(), 100 + static_cast<std::uint64_t>(trial), 1.0);
    const Trajectory t = integ.evolve(f0, 1.0, {1, 0}, ObservableRequest{});
    for (std::size_t i = 1; i < t.samples.size(); ++i) {
      const double bound =
          std::exp(-2.0 * sp.h) * t.samples[i - 1].phi * (1.0 + 10.0 * sp.h);
      CHECK(t.samples[i].phi <= bound);
    }
  }
}

TEST_CASE("linear mode second moments match the OU closed form") {
  const NoiseSpec spec = band_spec(4, 2.0);
  const Truncation& trunc = spec.truncation();
  StepParams sp;
  sp.h = 0.05;
  sp.nonlinear = false;  // pure Fourier-mode OU system
  Integrator integ(spec, NormParams(1.5, 3.5, 1.0), sp);

  VorticityField f0{trunc};
  f0.set_pair({1, 0}, Complex(0.7, 0.2));

  const int n = 4000;
  const WaveVector probe{1, 0};
  const double t_end = 0.5;
  std::vector<double> sq(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    OUState noise{trunc};
    VorticityField f = f0;
    for (int step = 0; step < 10; ++step)
      integ.step_exponential(f, noise, {999, static_cast<std::uint32_t>(i)},
                             static_cast<std::uint32_t>(step));
    sq[static_cast<std::size_t>(i)] = std::norm(f.at(probe));
  }
  double mean = 0.0;
  for (const double v : sq) mean += v;
  mean /= n;
  double var = 0.0;
  for (const double v : sq) var += (v - mean) * (v - mean);
  const double se = std::sqrt(var / (n - 1.0) / n);
  const double expect = std::exp(-2.0 * t_end) * std::norm(f0.at(probe)) +
                        ou_variance(spec.gamma(probe), probe, t_end);
  CHECK(std::fabs(mean - expect) < 4.0 * se);
}

TEST_CASE("nan detection aborts the trajectory") {
  const NoiseSpec spec = quiet_spec(8);
  StepParams sp;
  sp.h = 0.5;  // way past the stability limit for a huge field
  Integrator integ(spec, NormParams(1.5, 3.5, 1.0), sp);
  const VorticityField f0 = random_field(spec.truncation(), 1, 1e8);
  CHECK_THROWS_AS(integ.evolve(f0, 50.0, {1, 0}, ObservableRequest{}), numerical_error);
}

TEST_CASE("picard fixed point: trivial cases") {
  const NoiseSpec spec = quiet_spec(4);
  const Truncation& trunc = spec.truncation();
  SpectralWorkspace ws(trunc);
  StepParams sp;
  const NormParams p(1.5, 3.5, 2.0);
  const double tau = certified_timestep(p.D, p.alpha, sp.delta);
  const OUStepper sub(spec, tau / sp.picard_grid);

  std::vector<OUState> path;
  path.emplace_back(trunc);
  for (int j = 0; j < sp.picard_grid; ++j) {
    OUState next = path.back();
    sub.step(next, {1, 0}, static_cast<std::uint32_t>(j));
    path.push_back(std::move(next));
  }

  // Zero field, zero noise: fixed point identically zero after one iteration.
  PicardReport rep;
  const Trajectory zero = picard_solve(VorticityField{trunc}, path, p, sp, ws, rep);
  CHECK(rep.converged);
  CHECK(rep.iterations == 1);
  CHECK(rep.a_d_held);
  CHECK(rep.lemma3_holds);
  for (const auto& s : zero.samples) CHECK(s.phi == 0.0);

  // Single pair: free decay is already the fixed point.
  VorticityField pair{trunc};
  pair.set_pair({1, 0}, 1.0);
  PicardReport rep2;
  const Trajectory decay = picard_solve(pair, path, p, sp, ws, rep2);
  CHECK(rep2.converged);
  CHECK(rep2.iterations == 1);
  const double t_end = decay.times.back();
  CHECK(std::abs(decay.fields.back().at({1, 0}) - std::exp(-t_end) * 1.0) < 1e-14);

  // Hypothesis violations are caller errors.
  VorticityField fat{trunc};
  fat.set_pair({1, 0}, 10.0 * p.D);
  CHECK_THROWS_AS(picard_solve(fat, path, p, sp, ws, rep), std::invalid_argument);
}

TEST_CASE("picard agrees with the exponential integrator over one certified step") {
  const NoiseSpec spec = band_spec(8, 2.0);
  const Truncation& trunc = spec.truncation();
  SpectralWorkspace ws(trunc);
  StepParams sp;
  const NormParams p(1.5, 3.5, 2.0);
  const double tau = certified_timestep(p.D, p.alpha, sp.delta);
  const int grid = sp.picard_grid;
  const double h_sub = tau / grid;
  const OUStepper sub(spec, h_sub);

  std::vector<OUState> path;
  path.emplace_back(trunc);
  for (int j = 0; j < grid; ++j) {
    OUState next = path.back();
    sub.step(next, {42, 7}, static_cast<std::uint32_t>(j));
    path.push_back(std::move(next));
  }

  const VorticityField f0 = random_field(trunc, 5, 0.5);
  REQUIRE(d_norm(f0, p) <= std::pow(p.D, p.alpha));
  REQUIRE(enstrophy(f0) <= 1.5 * p.D * p.D);

  PicardReport rep;
  const Trajectory fixed = picard_solve(f0, path, p, sp, ws, rep);
  REQUIRE(rep.converged);
  CHECK(rep.max_ratio < 0.5);
  CHECK(rep.stayed_in_ball);
  CHECK(rep.lemma3_holds);

  Integrator integ(spec, p, sp);
  VorticityField g = f0;
  std::vector<Complex> dz(static_cast<std::size_t>(trunc.array_size()));
  for (int j = 0; j < grid; ++j) {
    for (const WaveVector k : trunc.active_modes()) {
      const int idx = trunc.index(k);
      dz[static_cast<std::size_t>(idx)] =
          path[static_cast<std::size_t>(j) + 1].z_by_index(idx) -
          sub.decay_by_index(idx) * path[static_cast<std::size_t>(j)].z_by_index(idx);
    }
    integ.step_exponential_with_increment(g, dz, h_sub);
  }
  CHECK(max_mode_diff(g, fixed.fields.back()) < 1e-8);
}

TEST_CASE("evolve replays bit-identically for a fixed seed") {
  const NoiseSpec spec = band_spec(4, 1.0);
  StepParams sp;
  sp.h = 0.02;
  Integrator a(spec, NormParams(1.5, 3.5, 1.0), sp);
  Integrator b(spec, NormParams(1.5, 3.5, 1.0), sp);
  const VorticityField f0 = random_field(spec.truncation(), 8, 0.3);
  const Trajectory ta = a.evolve(f0, 0.5, {2024, 5}, ObservableRequest{});
  const Trajectory tb = b.evolve(f0, 0.5, {2024, 5}, ObservableRequest{});
  REQUIRE(ta.samples.size() == tb.samples.size());
  for (std::size_t i = 0; i < ta.samples.size(); ++i)
    CHECK(ta.samples[i].phi == tb.samples[i].phi);
  CHECK(max_mode_diff(ta.fields.back(), tb.fields.back()) == 0.0);
}

TEST_CASE("certified evolve chains picard intervals") {
  const NoiseSpec spec = band_spec(4, 0.5);
  StepParams sp;
  sp.tau_mode = TauMode::certified;
  const NormParams p(1.5, 3.5, 1.5);
  Integrator integ(spec, p, sp);
  const VorticityField f0{spec.truncation()};  // rest: hypotheses trivially hold
  const double tau = certified_timestep(p.D, p.alpha, sp.delta);
  const Trajectory t = integ.evolve(f0, 3.0 * tau, {77, 0}, ObservableRequest{});
  CHECK(integ.picard_reports().size() == 3);
  for (const auto& rep : integ.picard_reports()) CHECK(rep.converged);
  CHECK(t.times.back() == doctest::Approx(3.0 * tau).epsilon(1e-9));
}
