#include "ns2d/rng.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace ns2d::rng {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::uint64_t key,
                                        const std::array<std::uint32_t, 4>& counter) {
  std::uint32_t k0 = static_cast<std::uint32_t>(key);
  std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
  std::array<std::uint32_t, 4> c = counter;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, c[0], hi0, lo0);
    mulhilo(kPhiloxM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
    k0 += kPhiloxW0;
    k1 += kPhiloxW1;
  }
  return c;
}

double to_unit_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

double to_unit_halfopen(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

GaussPair gauss_pair(std::uint64_t seed, std::uint32_t traj, std::uint32_t step,
                     std::uint32_t mode, std::uint32_t draw) {
  const auto w = philox4x32(seed, {traj, step, mode, draw});
  const std::uint64_t b0 = (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
  const std::uint64_t b1 = (static_cast<std::uint64_t>(w[2]) << 32) | w[3];
  const double u1 = to_unit_open(b0);
  const double u2 = to_unit_halfopen(b1);
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * std::numbers::pi * u2;
  return {rad * std::cos(ang), rad * std::sin(ang)};
}

std::complex<double> complex_gauss(std::uint64_t seed, std::uint32_t traj,
                                   std::uint32_t step, std::uint32_t mode,
                                   std::uint32_t draw, double sigma2) {
  const GaussPair g = gauss_pair(seed, traj, step, mode, draw);
  const double s = std::sqrt(0.5 * sigma2);
  return {s * g.g0, s * g.g1};
}

double uniform(std::uint64_t seed, std::uint32_t traj, std::uint32_t step,
               std::uint32_t mode, std::uint32_t draw) {
  const auto w = philox4x32(seed, {traj, step, mode, draw});
  const std::uint64_t b = (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
  return to_unit_halfopen(b);
}

std::uint64_t fnv1a64(std::span<const std::byte> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::byte b : bytes) {
    h ^= static_cast<std::uint64_t>(b);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fnv1a64(const std::string& s) {
  return fnv1a64(std::as_bytes(std::span<const char>(s.data(), s.size())));
}

std::uint64_t fnv1a64_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for hashing: " + p.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return s;
}

}  // namespace ns2d::rng
