#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

namespace ns2d::rng {

/// Counter-based generator (Philox4x32-10). Every random number in the code
/// is a pure function of (master seed, trajectory, step, mode, draw), so
/// ensembles are reproducible bit-for-bit regardless of thread scheduling.
std::array<std::uint32_t, 4> philox4x32(std::uint64_t key,
                                        const std::array<std::uint32_t, 4>& counter);

/// Map 64 random bits to (0,1] (safe for log).
double to_unit_open(std::uint64_t bits);

/// Map 64 random bits to [0,1).
double to_unit_halfopen(std::uint64_t bits);

struct GaussPair {
  double g0;
  double g1;
};

/// Two independent standard normals from one counter block (Box-Muller,
/// branch-free so the draw count per counter is fixed).
GaussPair gauss_pair(std::uint64_t seed, std::uint32_t traj, std::uint32_t step,
                     std::uint32_t mode, std::uint32_t draw);

/// Complex Gaussian with E|xi|^2 = sigma2; real and imaginary parts are
/// independent N(0, sigma2/2).
std::complex<double> complex_gauss(std::uint64_t seed, std::uint32_t traj,
                                   std::uint32_t step, std::uint32_t mode,
                                   std::uint32_t draw, double sigma2);

/// Uniform in [0,1) keyed like gauss_pair.
double uniform(std::uint64_t seed, std::uint32_t traj, std::uint32_t step,
               std::uint32_t mode, std::uint32_t draw);

// Draw-purpose tags keep independent uses of the same (traj, step, mode)
// key from colliding.
inline constexpr std::uint32_t draw_ou = 0x0001'0000u;
inline constexpr std::uint32_t draw_init = 0x0002'0000u;
inline constexpr std::uint32_t draw_misc = 0x0003'0000u;

/// Identifies one trajectory's stream within a master-seeded ensemble.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint32_t traj = 0;
};

// FNV-1a 64-bit, used for output digests and config fingerprints.
std::uint64_t fnv1a64(std::span<const std::byte> bytes);
std::uint64_t fnv1a64(const std::string& s);
std::uint64_t fnv1a64_file(const std::filesystem::path& p);
std::string hex64(std::uint64_t v);

}  // namespace ns2d::rng
