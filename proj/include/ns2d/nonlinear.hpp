#pragma once

#include <memory>

#include "ns2d/field.hpp"

namespace ns2d {

/// Galerkin-truncated bilinear term N_k = sum_l (k x l) |l|^{-2} w_{k-l} w_l,
/// restricted so that l, k - l, and k all lie in the truncation (quadratic
/// invariants are conserved exactly under this restriction).
struct BilinearResult {
  VorticityField field;
  double hermitian_defect = 0.0;  // asymmetry removed by re-symmetrization
};

/// Exact double-loop evaluation; the oracle for the FFT path.
BilinearResult convolution_direct(const VorticityField& field);

/// FFT evaluation of the same term in u.grad(w) form on a zero-padded grid
/// (2/3 rule, M >= 3 k_max + 1): aliasing-free, so it agrees with
/// convolution_direct to rounding. Owns per-instance FFTW plans and buffers;
/// use one workspace per thread.
class SpectralWorkspace {
 public:
  explicit SpectralWorkspace(Truncation trunc);
  ~SpectralWorkspace();
  SpectralWorkspace(SpectralWorkspace&&) noexcept;
  SpectralWorkspace& operator=(SpectralWorkspace&&) noexcept;
  SpectralWorkspace(const SpectralWorkspace&) = delete;
  SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

  BilinearResult convolution_fft(const VorticityField& field);

  const Truncation& truncation() const;
  int grid_size() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// (enstrophy_flux, energy_flux) = (Re sum conj(w_k) N_k,
/// Re sum |k|^{-2} conj(w_k) N_k); both vanish for the truncated term.
std::pair<double, double> quadratic_invariants(const VorticityField& field,
                                               const BilinearResult& b);

}  // namespace ns2d
