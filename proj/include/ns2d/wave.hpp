#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <memory>
#include <vector>

namespace ns2d {

/// Integer wave vector on the dual lattice of the unit torus.
struct WaveVector {
  int kx = 0;
  int ky = 0;

  friend auto operator<=>(const WaveVector&, const WaveVector&) = default;
};

inline WaveVector operator-(WaveVector k) { return {-k.kx, -k.ky}; }
inline WaveVector operator-(WaveVector a, WaveVector b) { return {a.kx - b.kx, a.ky - b.ky}; }
inline WaveVector operator+(WaveVector a, WaveVector b) { return {a.kx + b.kx, a.ky + b.ky}; }

inline int norm2(WaveVector k) { return k.kx * k.kx + k.ky * k.ky; }
inline double norm(WaveVector k) { return std::sqrt(static_cast<double>(norm2(k))); }

/// 2D cross product k x l = k1*l2 - k2*l1.
inline int cross(WaveVector k, WaveVector l) { return k.kx * l.ky - k.ky * l.kx; }

/// Canonical half of the lattice: one representative per {k, -k} pair.
inline bool upper_half(WaveVector k) { return k.kx > 0 || (k.kx == 0 && k.ky > 0); }

/// Sharp spectral cutoff: active modes are 0 < |k| <= k_max. Storage is a
/// dense square [-k_max, k_max]^2 with the zero mode and the corners outside
/// the disk held at zero. Copies are cheap (the mode lists are shared).
class Truncation {
 public:
  explicit Truncation(int k_max);

  int k_max() const { return data_->k_max; }
  int side() const { return 2 * data_->k_max + 1; }
  int array_size() const { return side() * side(); }

  bool in_square(WaveVector k) const {
    const int m = data_->k_max;
    return k.kx >= -m && k.kx <= m && k.ky >= -m && k.ky <= m;
  }
  bool active(WaveVector k) const {
    return in_square(k) && norm2(k) > 0 && norm2(k) <= data_->k_max * data_->k_max;
  }
  int index(WaveVector k) const {
    return (k.kx + data_->k_max) * side() + (k.ky + data_->k_max);
  }
  WaveVector from_index(int idx) const {
    return {idx / side() - data_->k_max, idx % side() - data_->k_max};
  }
  /// Stable 32-bit mode id for RNG counters.
  std::uint32_t mode_id(WaveVector k) const { return static_cast<std::uint32_t>(index(k)); }

  /// All active modes, ordered by dense index.
  const std::vector<WaveVector>& active_modes() const { return data_->active; }
  /// One representative per conjugate pair, ordered by dense index.
  const std::vector<WaveVector>& half_modes() const { return data_->half; }

  friend bool operator==(const Truncation& a, const Truncation& b) {
    return a.k_max() == b.k_max();
  }

 private:
  struct Data {
    int k_max;
    std::vector<WaveVector> active;
    std::vector<WaveVector> half;
  };
  std::shared_ptr<const Data> data_;
};

}  // namespace ns2d
