#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <unistd.h>
#include <vector>

#include "ns2d/forcing.hpp"

using namespace ns2d;
namespace fs = std::filesystem;

namespace {

NoiseSpec four_mode_spec(int k_max, double gamma) {
  const Truncation trunc(k_max);
  const std::vector<std::pair<WaveVector, double>> modes{
      {{1, 0}, gamma}, {{0, 1}, gamma}};  // mirrors implied
  return NoiseSpec::from_modes(trunc, modes);
}

}  // namespace

TEST_CASE("reynolds number") {
  const Truncation trunc(4);
  CHECK(NoiseSpec(trunc, std::vector<double>(trunc.array_size(), 0.0)).reynolds() == 0.0);
  // gamma = 1 on the four modes +-(1,0), +-(0,1): R = 2.
  const NoiseSpec spec = four_mode_spec(4, 1.0);
  CHECK(spec.gamma({-1, 0}) == 1.0);
  CHECK(spec.gamma({0, -1}) == 1.0);
  CHECK(reynolds(spec) == doctest::Approx(2.0).epsilon(1e-15));
  // Linearity in the intensities.
  CHECK(reynolds(four_mode_spec(4, 3.5)) == doctest::Approx(7.0).epsilon(1e-15));
}

TEST_CASE("noise spec validation") {
  const Truncation trunc(4);
  std::vector<double> g(trunc.array_size(), 0.0);
  g[static_cast<std::size_t>(trunc.index({1, 0}))] = 1.0;
  // Missing the mirror entry breaks evenness.
  CHECK_THROWS_AS(NoiseSpec(trunc, g), std::invalid_argument);
  g[static_cast<std::size_t>(trunc.index({-1, 0}))] = 1.0;
  CHECK_NOTHROW(NoiseSpec(trunc, g));

  // Decay bound: a spike at |k| = 4 with tiny R violates gamma <= c R e^{-|k|}.
  std::vector<double> bad(trunc.array_size(), 0.0);
  bad[static_cast<std::size_t>(trunc.index({4, 0}))] = 1.0;
  bad[static_cast<std::size_t>(trunc.index({-4, 0}))] = 1.0;
  CHECK_THROWS_AS(NoiseSpec(trunc, bad), std::invalid_argument);

  // Same spike passes with a large enough c_gamma.
  CHECK_NOTHROW(NoiseSpec(trunc, bad, 60.0));
}

TEST_CASE("nondimensionalization") {
  const Truncation trunc(2);
  std::vector<double> shape(trunc.array_size(), 0.0);
  shape[static_cast<std::size_t>(trunc.index({1, 0}))] = 0.5;
  shape[static_cast<std::size_t>(trunc.index({-1, 0}))] = 0.5;

  // Identity scaling at nu = L = 1.
  const NoiseSpec id = nondimensionalize(PhysicalParams(1.0, 1.0, 3.0, trunc, shape));
  CHECK(id.gamma({1, 0}) == doctest::Approx(1.5).epsilon(1e-15));

  // nu = 2, L = 1, Gamma0 = 16, shape split over +-(1,0): gamma = 1, R = 1.
  const NoiseSpec spec = nondimensionalize(PhysicalParams(2.0, 1.0, 16.0, trunc, shape));
  CHECK(spec.gamma({1, 0}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(spec.reynolds() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(spec.reynolds() ==
        doctest::Approx(0.5 * 1.0 / 8.0 * 16.0).epsilon(1e-15));

  // Doubling L quadruples every gamma_k.
  const NoiseSpec big = nondimensionalize(PhysicalParams(2.0, 2.0, 16.0, trunc, shape));
  CHECK(big.gamma({1, 0}) == doctest::Approx(4.0 * spec.gamma({1, 0})).epsilon(1e-15));

  CHECK_THROWS_AS(PhysicalParams(0.0, 1.0, 1.0, trunc, shape), std::invalid_argument);
}

TEST_CASE("noise spec file round trip with hermitian completion") {
  const fs::path p =
      fs::temp_directory_path() / ("ns2d_noise_" + std::to_string(::getpid()) + ".txt");
  const NoiseSpec spec = four_mode_spec(4, 0.75);
  spec.save(p);
  const NoiseSpec back = NoiseSpec::load(p);
  CHECK(back.truncation().k_max() == 4);
  CHECK(back.gamma({1, 0}) == spec.gamma({1, 0}));
  CHECK(back.gamma({-1, 0}) == spec.gamma({1, 0}));  // completion
  CHECK(back.reynolds() == spec.reynolds());
  fs::remove(p);
}

TEST_CASE("ou_step zero forcing stays zero, hermitian exactly") {
  const Truncation trunc(3);
  const NoiseSpec quiet(trunc, std::vector<double>(trunc.array_size(), 0.0));
  OUState z{trunc};
  const OUStepper stepper(quiet, 0.1);
  for (int s = 0; s < 10; ++s) stepper.step(z, {1, 0}, static_cast<std::uint32_t>(s));
  for (const WaveVector k : trunc.active_modes()) CHECK(z.z(k) == Complex{});
  CHECK(z.t() == doctest::Approx(1.0));

  const NoiseSpec noisy = four_mode_spec(3, 1.0);
  OUState w{trunc};
  const OUStepper st2(noisy, 0.05);
  for (int s = 0; s < 20; ++s) st2.step(w, {7, 3}, static_cast<std::uint32_t>(s));
  for (const WaveVector k : trunc.half_modes())
    CHECK(w.z(-k) == std::conj(w.z(k)));  // exact mirror by construction
}

TEST_CASE("ou_step variance matches the closed form") {
  // k = (1,0), gamma = 1, t = 0.5: E|z|^2 = (1 - e^{-1})/2 = 0.31606...
  const double expected = 0.31606027941427883;
  CHECK(ou_variance(1.0, {1, 0}, 0.5) == doctest::Approx(expected).epsilon(1e-15));

  const Truncation trunc(2);
  const NoiseSpec spec = four_mode_spec(2, 1.0);
  const OUStepper stepper(spec, 0.1);
  const int n = 100000;
  const int idx = trunc.index({1, 0});
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    OUState z{trunc};
    for (int s = 0; s < 5; ++s)
      stepper.step(z, {12345, static_cast<std::uint32_t>(i)}, static_cast<std::uint32_t>(s));
    sum += std::norm(z.z_by_index(idx));
  }
  const double mean = sum / n;
  // |z|^2 is exponentially distributed, so SE = E|z|^2 / sqrt(n).
  CHECK(std::fabs(mean - expected) < 3.0 * expected / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("ou moments: stationary limit and composition") {
  const Truncation trunc(2);
  const NoiseSpec spec = four_mode_spec(2, 1.0);
  const int idx = trunc.index({1, 0});
  const int n = 100000;

  // Stationary limit gamma/(2 k^2) = 0.5 after many steps.
  {
    const OUStepper stepper(spec, 0.5);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      OUState z{trunc};
      for (int s = 0; s < 20; ++s)
        stepper.step(z, {777, static_cast<std::uint32_t>(i)}, static_cast<std::uint32_t>(s));
      sum += std::norm(z.z_by_index(idx));
    }
    CHECK(std::fabs(sum / n - 0.5) < 4.0 * 0.5 / std::sqrt(static_cast<double>(n)));
  }
  // step(h) twice is distributionally step(2h): compare second moments.
  {
    const OUStepper half(spec, 0.1);
    const OUStepper full(spec, 0.2);
    double sum_half = 0.0, sum_full = 0.0;
    for (int i = 0; i < n; ++i) {
      OUState a{trunc};
      half.step(a, {5, static_cast<std::uint32_t>(i)}, 0);
      half.step(a, {5, static_cast<std::uint32_t>(i)}, 1);
      sum_half += std::norm(a.z_by_index(idx));
      OUState b{trunc};
      full.step(b, {6, static_cast<std::uint32_t>(i)}, 0);
      sum_full += std::norm(b.z_by_index(idx));
    }
    const double v = ou_variance(1.0, {1, 0}, 0.2);
    const double se = v / std::sqrt(static_cast<double>(n));
    CHECK(std::fabs(sum_half / n - v) < 4.0 * se);
    CHECK(std::fabs(sum_full / n - v) < 4.0 * se);
  }
}

TEST_CASE("ou sup tail estimate") {
  const Truncation trunc(2);
  const NoiseSpec spec = four_mode_spec(2, 1.0);

  // B = 0: |z| >= 0 always.
  const auto certain = ou_sup_tail_estimate(spec, {1, 0}, 0.01, 0.0, 500, 100, 2);
  CHECK(certain.p_hat == 1.0);

  // gamma = 0 mode: never exceeds a positive threshold.
  const auto never = ou_sup_tail_estimate(spec, {2, 0}, 0.01, 0.5, 500, 100, 2);
  CHECK(never.p_hat == 0.0);

  // Monotone decreasing tail in B.
  const auto p1 = ou_sup_tail_estimate(spec, {1, 0}, 0.01, 0.5, 4000, 120, 3, 2);
  const auto p2 = ou_sup_tail_estimate(spec, {1, 0}, 0.01, 1.0, 4000, 120, 3, 2);
  const auto p3 = ou_sup_tail_estimate(spec, {1, 0}, 0.01, 1.5, 4000, 120, 3, 2);
  CHECK(p1.p_hat > p2.p_hat);
  CHECK(p2.p_hat > p3.p_hat);

  CHECK_THROWS_AS(ou_sup_tail_estimate(spec, {1, 0}, 0.01, 1.0, 0, 100, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(ou_sup_tail_estimate(spec, {1, 0}, 0.01, 1.0, 10, 50, 1),
                  std::invalid_argument);
}

TEST_CASE("event A_D indicator") {
  const Truncation trunc(2);
  const NoiseSpec spec = four_mode_spec(2, 1.0);
  const double tau = 0.01;

  std::vector<OUState> zero_path(3, OUState{trunc});
  CHECK(event_A_D_indicator(zero_path, 0.5, tau));

  // One mode violating at one grid point flips the event.
  std::vector<double> sups(static_cast<std::size_t>(trunc.array_size()), 0.0);
  CHECK(event_A_D_indicator(trunc, sups, 1.0, tau));
  sups[static_cast<std::size_t>(trunc.index({1, 0}))] =
      2.0 * std::sqrt(tau) * 1.0 * std::exp(-0.25);
  CHECK(!event_A_D_indicator(trunc, sups, 1.0, tau));

  // Monte Carlo: P(A_D) increases toward 1 with D.
  const OUStepper stepper(spec, tau / 100);
  int hits_small = 0, hits_big = 0;
  const int n = 2000;
  for (int i = 0; i < n; ++i) {
    OUState z{trunc};
    std::vector<double> sup(static_cast<std::size_t>(trunc.array_size()), 0.0);
    for (int s = 0; s < 100; ++s) {
      stepper.step(z, {33, static_cast<std::uint32_t>(i)}, static_cast<std::uint32_t>(s));
      for (const WaveVector k : trunc.half_modes()) {
        const std::size_t idx = static_cast<std::size_t>(trunc.index(k));
        sup[idx] = std::max(sup[idx], std::abs(z.z_by_index(static_cast<int>(idx))));
      }
    }
    hits_small += event_A_D_indicator(trunc, sup, 0.8, tau) ? 1 : 0;
    hits_big += event_A_D_indicator(trunc, sup, 3.0, tau) ? 1 : 0;
  }
  CHECK(hits_big >= hits_small);
  CHECK(hits_big > n / 2);
}
