#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>

#include "ns2d/harness.hpp"
#include "ns2d/rng.hpp"

using namespace ns2d;
using namespace ns2d::harness;

namespace {

NoiseSpec quiet_spec(int k_max) {
  const Truncation trunc(k_max);
  return NoiseSpec(trunc, std::vector<double>(trunc.array_size(), 0.0));
}

RunParams small_params(int n_traj, double h = 0.02) {
  RunParams p;
  p.norm = NormParams(1.5, 3.5, 1.0);
  p.step.h = h;
  p.n_traj = n_traj;
  p.n_threads = 2;
  p.seed = 31337;
  return p;
}

}  // namespace

TEST_CASE("ladder levels") {
  LadderSpec ladder;
  ladder.a_hat = 1.0;
  ladder.R = 4.0;
  ladder.levels = 6;
  CHECK(ladder.d2(0) == doctest::Approx(8.0).epsilon(1e-15));
  CHECK(ladder.d2(1) == doctest::Approx(8.0 * std::exp(1.0) / 2.0).epsilon(1e-15));
  CHECK(ladder.d2(3) > ladder.d2(2));
  CHECK(LadderSpec::pi(2) ==
        doctest::Approx(std::exp(-std::pow(std::exp(1.0) / 2.0, 2))).epsilon(1e-15));
  CHECK_THROWS_AS(ladder.d2(7), std::invalid_argument);
}

TEST_CASE("deterministic initial profiles") {
  const Truncation trunc(8);

  const VorticityField f = profile_fixed_enstrophy(trunc, 3.7, 1.5);
  CHECK(enstrophy(f) == doctest::Approx(3.7).epsilon(1e-12));
  CHECK(enstrophy(profile_fixed_enstrophy(trunc, 0.0, 1.5)) == 0.0);

  const NormParams p(1.5, 3.5, 2.5);
  const VorticityField sat = profile_saturating_U(trunc, p);
  CHECK(in_region_U(sat, p));
  // The binding constraint sits on the boundary (1e-12 backoff inside).
  const double phi_ratio = enstrophy(sat) / (p.D * p.D);
  const double norm_ratio = d_norm(sat, p) / std::pow(p.D, p.alpha);
  CHECK(std::max(phi_ratio, norm_ratio) == doctest::Approx(1.0).epsilon(1e-9));

  const VorticityField dual = profile_dual_saturating(trunc, p, 6);
  CHECK(enstrophy(dual) == doctest::Approx(p.D * p.D).epsilon(1e-2));
  CHECK(d_norm(dual, p) == doctest::Approx(std::pow(p.D, p.alpha)).epsilon(1e-2));
  CHECK(in_region_U(dual, p));

  CHECK_THROWS_AS(profile_dual_saturating(trunc, p, 99), std::invalid_argument);
}

TEST_CASE("lemma1 tail: deterministic decay with zero noise") {
  const NoiseSpec spec = quiet_spec(6);
  RunParams params = small_params(50);
  const double phi0 = 4.0;
  const double t = 0.5;
  // Zero noise: Phi(t) <= e^{-2t} Phi(0), and every trajectory is identical.
  const std::vector<double> grid{std::exp(-2.0 * t) * phi0 * 1.0001, 0.25 * phi0, 4.0 * phi0};
  const TailTable table = lemma1_tail(phi0, t, grid, spec, params);
  CHECK(table.rows[0].result.p_hat == 0.0);   // just above the decay bound
  CHECK(table.rows[2].result.p_hat == 0.0);   // far above
  CHECK(table.rows[1].result.p_hat == 1.0);   // well below the actual value
  CHECK_THROWS_AS(lemma1_tail(phi0, t, {}, spec, params), std::invalid_argument);
}

TEST_CASE("lemma1 tail: forced run has sane direction and fit") {
  const NoiseSpec spec = NoiseSpec::default_band(Truncation(6), 3.0);
  RunParams params = small_params(400);
  const std::vector<double> grid{0.5, 2.0, 4.0, 6.0};
  const TailTable table = lemma1_tail(0.0, 1.0, grid, spec, params);
  // Tail is nonincreasing in the threshold by construction.
  for (std::size_t i = 1; i < table.rows.size(); ++i)
    CHECK(table.rows[i].result.p_hat <= table.rows[i - 1].result.p_hat);
  CHECK(table.rows[0].result.p_hat > 0.5);  // low threshold: almost always exceeded
  if (table.logp_fit.n >= 2) CHECK(table.logp_fit.slope < 0.0);
  // Determinism: same seed gives bit-identical results.
  const TailTable again = lemma1_tail(0.0, 1.0, grid, spec, params);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    CHECK(std::memcmp(&table.rows[i].result.p_hat, &again.rows[i].result.p_hat,
                      sizeof(double)) == 0);
    CHECK(table.rows[i].result.ci95.lo == again.rows[i].result.ci95.lo);
  }
}

TEST_CASE("corollary union bound consistency") {
  const NoiseSpec spec = NoiseSpec::default_band(Truncation(6), 2.0);
  RunParams params = small_params(200);
  const std::vector<double> times{0.25, 0.5, 1.0};
  const CorollaryCheck check = lemma1_corollary_check(4.0, times, spec, params);
  CHECK(check.union_bound_consistent);
  double sum = 0.0;
  for (const double f : check.per_time_fail) sum += f;
  CHECK(check.joint_pass >= 1.0 - sum - 1e-12);
}

TEST_CASE("exp moment check: trivial and forced") {
  const NoiseSpec spec = NoiseSpec::default_band(Truncation(6), 2.0);
  RunParams params = small_params(300);
  // Phi(0) = 0: rhs is exactly 3 and the empirical lhs starts at 1.
  const ExpMomentResult from_rest = exp_moment_check(0.0, 0.25, spec, params);
  CHECK(from_rest.rhs == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(from_rest.lhs >= 1.0);
  CHECK(from_rest.pass);

  const ExpMomentResult forced = exp_moment_check(2.0, 1.0, spec, params);
  CHECK(forced.rhs > 3.0);
  CHECK(forced.pass);  // proven bound should hold with wide margin at R = 2

  CHECK_THROWS_AS(exp_moment_check(0.0, 0.25, quiet_spec(6), params),
                  std::invalid_argument);  // needs R > 0
}

TEST_CASE("proposition escape: deterministic decay keeps the region") {
  // Deep-inside initial data with zero noise never escapes.
  const NoiseSpec spec = quiet_spec(6);
  RunParams params = small_params(20);
  params.norm = NormParams(1.5, 3.5, 1.0);
  const auto r = proposition_escape(2.0, spec, params, 8);
  CHECK(r.p_hat == 0.0);
  CHECK_THROWS_AS(proposition_escape(2.0, spec, RunParams{.n_traj = 0}, 8),
                  std::invalid_argument);
}

TEST_CASE("transition estimate: unreachable and deterministic-decay levels") {
  LadderSpec ladder;
  ladder.a_hat = 1.0;
  ladder.R = 2.0;
  ladder.levels = 12;
  const std::vector<int> family{3, 4};

  // Zero noise from U_m with m = n+1 offset: deterministic decay inclusion.
  {
    const NoiseSpec spec = quiet_spec(6);
    RunParams params = small_params(10);
    const auto r = transition_estimate(ladder, 3, 2, spec, params, family);
    CHECK(r.worst.p_hat == 0.0);
  }
  // Very high level is unreachable under weak forcing.
  {
    const NoiseSpec spec = NoiseSpec::default_band(Truncation(6), 2.0);
    RunParams params = small_params(30);
    const auto r = transition_estimate(ladder, 11, 10, spec, params, family);
    CHECK(r.worst.p_hat == 0.0);
    CHECK_THROWS_AS(transition_estimate(ladder, 5, 2, spec, params, family),
                    std::invalid_argument);
  }
}

TEST_CASE("time averaged mode exceedance: trivial thresholds") {
  const NoiseSpec quiet = quiet_spec(6);
  RunParams params = small_params(10);
  // Zero noise, zero field: no exceedance of any positive threshold.
  CHECK(time_average_mode({1, 0}, 0.2, 0.4, 2.0, quiet, params).p_hat == 0.0);
  // Huge D makes the threshold astronomically large.
  const NoiseSpec forced = NoiseSpec::default_band(Truncation(6), 2.0);
  CHECK(time_average_mode({1, 0}, 0.2, 0.4, 50.0, forced, params).p_hat == 0.0);
}

TEST_CASE("region membership is nondecreasing in D across an ensemble") {
  const Truncation trunc(6);
  const NormParams base(1.5, 3.5, 1.0);
  int member_small = 0, member_large = 0;
  for (int i = 0; i < 50; ++i) {
    VorticityField f{trunc};
    for (const WaveVector k : trunc.half_modes())
      f.set_pair(k, rng::complex_gauss(50, static_cast<std::uint32_t>(i), 0,
                                       trunc.mode_id(k), rng::draw_init, 0.3));
    const bool small = in_region_U(f, base.with_D(1.5));
    const bool large = in_region_U(f, base.with_D(4.0));
    member_small += small;
    member_large += large;
    if (small) CHECK(large);  // pointwise nesting
  }
  CHECK(member_large >= member_small);
}

TEST_CASE("spectrum bound report") {
  const Truncation trunc(12);
  // Ensemble with a clean power law e(k) ~ k^{-5}: amplitudes |k|^{-3}
  // (e(k) = k^{-1} * count * k^{-6} with count ~ 2 pi k gives ~ k^{-5}ish).
  std::vector<VorticityField> ensemble;
  for (int i = 0; i < 4; ++i) {
    VorticityField f{trunc};
    for (const WaveVector k : trunc.half_modes())
      f.set_pair(k, Complex(std::pow(norm(k), -3.0), 0.0));
    ensemble.push_back(f);
  }
  const auto report = spectrum_bound_report(ensemble, 1.5, 2.5, 2.0, 2.0, 10.0);
  CHECK(report.shells_used >= 3);
  CHECK(report.fit.slope < -4.0);
  CHECK(report.slope_bound == doctest::Approx(-4.0 + 0.5));
  CHECK(report.pass);
  CHECK(report.c_hat > 0.0);

  // Degenerate input: single pair -> fewer than 3 nonzero shells.
  VorticityField lone{trunc};
  lone.set_pair({1, 0}, 1.0);
  std::vector<VorticityField> degenerate{lone};
  CHECK_THROWS_AS(spectrum_bound_report(degenerate, 1.5, 2.5, 2.0, 1.0, 10.0),
                  std::invalid_argument);
}

TEST_CASE("burned-in ensemble produces the requested snapshot count") {
  const NoiseSpec spec = NoiseSpec::default_band(Truncation(4), 1.0);
  RunParams params = small_params(1, 0.05);
  const auto snaps = burned_in_ensemble(spec, params, 0.5, 6, 0.25, 2);
  CHECK(snaps.size() == 6);
  for (const auto& f : snaps) CHECK(enstrophy(f) > 0.0);
}
