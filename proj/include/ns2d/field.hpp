#pragma once

#include <complex>
#include <span>
#include <vector>

#include "ns2d/wave.hpp"

namespace ns2d {

using Complex = std::complex<double>;

/// Parameters (r, alpha, D) of the analyticity norm
/// sup_k |w_k| |k|^r exp(D^{-alpha}|k|) and of the region U_D.
struct NormParams {
  double r;
  double alpha;
  double D;

  NormParams(double r_, double alpha_, double D_);
  NormParams with_D(double D_) const { return NormParams(r, alpha, D_); }
};

/// Validates r > 1, alpha > max(2, 1 + r); throws std::invalid_argument.
void validate_norm_exponents(double r, double alpha);

/// Truncated vorticity field in Fourier space. Hermitian (w_{-k} = conj w_k),
/// zero-mean, dense storage over the square for O(1) indexing.
class VorticityField {
 public:
  explicit VorticityField(Truncation trunc);

  const Truncation& truncation() const { return trunc_; }

  Complex at(WaveVector k) const {
    return trunc_.in_square(k) ? data_[trunc_.index(k)] : Complex{0.0, 0.0};
  }
  /// Unchecked access for loops over active mode lists.
  Complex operator[](int dense_index) const { return data_[dense_index]; }
  Complex& raw(int dense_index) { return data_[dense_index]; }

  /// Sets w_k = v and w_{-k} = conj(v); k must be active.
  void set_pair(WaveVector k, Complex v);

  /// Averages each conjugate pair to kill floating-point symmetry drift.
  /// Returns the max absolute asymmetry removed.
  double enforce_hermitian();

  /// Max |w_k - conj(w_{-k})| over active modes, relative to the max
  /// amplitude (0 for the zero field).
  double hermitian_defect() const;

  bool finite() const;

  /// Throws std::invalid_argument if hermitian symmetry (1e-12 relative),
  /// zero-mean, or finiteness is violated.
  void validate() const;

  std::span<const Complex> data() const { return data_; }
  std::span<Complex> mutable_data() { return data_; }

 private:
  Truncation trunc_;
  std::vector<Complex> data_;
};

/// Phi = (1/2) sum over active k of |w_k|^2.
double enstrophy(const VorticityField& field);

/// sup over active k of |w_k| |k|^r exp(D^{-alpha} |k|).
double d_norm(const VorticityField& field, const NormParams& p);

/// Membership in U_D: d_norm <= D^alpha and enstrophy <= D^2 (boundary in).
bool in_region_U(const VorticityField& field, const NormParams& p);

inline constexpr double default_minimal_d_ceiling = 1e6;

/// Smallest D (within tol, by bisection over [0, ceiling]) whose region U_D
/// contains the field; 0 for the zero field. Returns +infinity when no
/// D <= ceiling works.
double minimal_D(const VorticityField& field, double r, double alpha, double tol,
                 double ceiling = default_minimal_d_ceiling);

struct SpectrumEstimate {
  struct Shell {
    double k;        // shell center (integer wavenumber)
    double e;        // e(k) = k^{-1} * ensemble mean of the shell sum of |w|^2
    int mode_count;  // lattice sites with |k'| in [k-1/2, k+1/2)
  };
  std::vector<Shell> shells;
};

/// Shell-averaged energy spectrum over an ensemble sharing one truncation.
/// Throws std::invalid_argument on an empty ensemble or mixed truncations.
SpectrumEstimate energy_spectrum(std::span<const VorticityField> ensemble);

/// Velocity modes u_k = i(-k2, k1)/|k|^2 w_k (Biot-Savart). k . u_k = 0.
struct VelocityModes {
  Truncation trunc;
  std::vector<Complex> ux;
  std::vector<Complex> uy;

  std::pair<Complex, Complex> at(WaveVector k) const {
    if (!trunc.in_square(k)) return {Complex{}, Complex{}};
    const int i = trunc.index(k);
    return {ux[i], uy[i]};
  }
};

VelocityModes velocity_from_vorticity(const VorticityField& field);

}  // namespace ns2d
