#include "ns2d/nonlinear.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace ns2d {

namespace {

// FFTW plan creation/destruction is not thread-safe; execution is.
std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

int next_fast_size(int n) {
  for (;; ++n) {
    int m = n;
    for (const int p : {2, 3, 5})
      while (m % p == 0) m /= p;
    if (m == 1) return n;
  }
}

}  // namespace

BilinearResult convolution_direct(const VorticityField& field) {
  const Truncation& trunc = field.truncation();
  BilinearResult out{VorticityField{trunc}, 0.0};
  const auto& active = trunc.active_modes();
  // B_k = sum over active l with k - l active of (k x l) |l|^{-2} w_{k-l} w_l.
  // Each B_k is accumulated independently, so the k and -k entries provide a
  // real hermitian-symmetry check before re-symmetrization.
  for (const WaveVector k : active) {
    Complex sum{};
    for (const WaveVector l : active) {
      const WaveVector m = k - l;
      if (!trunc.active(m)) continue;
      const int c = cross(k, l);
      if (c == 0) continue;
      sum += (static_cast<double>(c) / norm2(l)) * field[trunc.index(m)] *
             field[trunc.index(l)];
    }
    out.field.raw(trunc.index(k)) = sum;
  }
  out.hermitian_defect = out.field.hermitian_defect();
  out.field.enforce_hermitian();
  return out;
}

struct SpectralWorkspace::Impl {
  Truncation trunc;
  int M;                       // padded grid size per dimension (>= 3 k_max + 1)
  int spec_pitch;              // M/2 + 1
  fftw_complex* spec4;         // 4 batched half-spectra (ux, uy, wx, wy)
  double* phys4;               // 4 batched physical grids
  double* prod;                // physical product
  fftw_complex* prod_spec;     // product half-spectrum
  fftw_plan plan_c2r4;
  fftw_plan plan_r2c;

  explicit Impl(Truncation t) : trunc(std::move(t)) {
    M = next_fast_size(3 * trunc.k_max() + 1);
    spec_pitch = M / 2 + 1;
    const std::size_t spec_n = static_cast<std::size_t>(M) * spec_pitch;
    const std::size_t phys_n = static_cast<std::size_t>(M) * M;
    spec4 = fftw_alloc_complex(4 * spec_n);
    phys4 = fftw_alloc_real(4 * phys_n);
    prod = fftw_alloc_real(phys_n);
    prod_spec = fftw_alloc_complex(spec_n);
    if (!spec4 || !phys4 || !prod || !prod_spec)
      throw std::runtime_error("SpectralWorkspace: allocation failed");
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    int dims[2] = {M, M};
    // FFTW_ESTIMATE keeps plan selection deterministic across runs/threads.
    plan_c2r4 = fftw_plan_many_dft_c2r(2, dims, 4, spec4, nullptr, 1,
                                       static_cast<int>(spec_n), phys4, nullptr, 1,
                                       static_cast<int>(phys_n), FFTW_ESTIMATE);
    plan_r2c = fftw_plan_dft_r2c_2d(M, M, prod, prod_spec, FFTW_ESTIMATE);
    if (!plan_c2r4 || !plan_r2c)
      throw std::runtime_error("SpectralWorkspace: plan creation failed");
  }

  ~Impl() {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_destroy_plan(plan_c2r4);
    fftw_destroy_plan(plan_r2c);
    fftw_free(spec4);
    fftw_free(phys4);
    fftw_free(prod);
    fftw_free(prod_spec);
  }

  // Half-spectrum bin for wave vector (a, b) with 0 <= b <= M/2. Storing
  // c_m at bin(-m) synthesizes sum_m c_m e^{-i m.x} via the unnormalized
  // c2r transform.
  std::size_t bin(int a, int b) const {
    const int k1 = (a % M + M) % M;
    return static_cast<std::size_t>(k1) * spec_pitch + static_cast<std::size_t>(b);
  }
};

SpectralWorkspace::SpectralWorkspace(Truncation trunc)
    : impl_(std::make_unique<Impl>(std::move(trunc))) {}
SpectralWorkspace::~SpectralWorkspace() = default;
SpectralWorkspace::SpectralWorkspace(SpectralWorkspace&&) noexcept = default;
SpectralWorkspace& SpectralWorkspace::operator=(SpectralWorkspace&&) noexcept = default;

const Truncation& SpectralWorkspace::truncation() const { return impl_->trunc; }
int SpectralWorkspace::grid_size() const { return impl_->M; }

BilinearResult SpectralWorkspace::convolution_fft(const VorticityField& field) {
  Impl& im = *impl_;
  if (!(field.truncation() == im.trunc))
    throw std::invalid_argument("convolution_fft: truncation mismatch");
  const Truncation& trunc = im.trunc;
  const std::size_t spec_n = static_cast<std::size_t>(im.M) * im.spec_pitch;
  std::memset(im.spec4, 0, 4 * spec_n * sizeof(fftw_complex));

  // Fill half-spectra of u_x, u_y, dw/dx, dw/dy. With the convention
  // w(x) = sum_k w_k e^{-i k.x}: u_k = i(-k2, k1)|k|^{-2} w_k and
  // (d/dx_j w)_k = -i k_j w_k. The c2r layout stores bins with ky >= 0, so a
  // mode m lands at bin(-m) exactly when m.ky <= 0.
  for (const WaveVector m : trunc.active_modes()) {
    if (m.ky > 0) continue;
    const Complex w = field[trunc.index(m)];
    const double inv_k2 = 1.0 / static_cast<double>(norm2(m));
    const std::size_t b = im.bin(-m.kx, -m.ky);
    const Complex i_unit{0.0, 1.0};
    const Complex vals[4] = {
        i_unit * (-m.ky * inv_k2) * w,  // u_x
        i_unit * (m.kx * inv_k2) * w,   // u_y
        -i_unit * static_cast<double>(m.kx) * w,  // dw/dx
        -i_unit * static_cast<double>(m.ky) * w,  // dw/dy
    };
    for (int a = 0; a < 4; ++a) {
      fftw_complex& dst = im.spec4[a * spec_n + b];
      dst[0] = vals[a].real();
      dst[1] = vals[a].imag();
    }
  }

  fftw_execute(im.plan_c2r4);

  const std::size_t phys_n = static_cast<std::size_t>(im.M) * im.M;
  const double* ux = im.phys4 + 0 * phys_n;
  const double* uy = im.phys4 + 1 * phys_n;
  const double* wx = im.phys4 + 2 * phys_n;
  const double* wy = im.phys4 + 3 * phys_n;
  for (std::size_t j = 0; j < phys_n; ++j) im.prod[j] = ux[j] * wx[j] + uy[j] * wy[j];

  fftw_execute(im.plan_r2c);

  // N_k = -(u.grad w)_k; coefficient of e^{-i k.x} in prod is
  // prod_spec(bin(-k))/M^2 when k.ky <= 0, else the conjugate mirror.
  BilinearResult out{VorticityField{trunc}, 0.0};
  const double scale = 1.0 / (static_cast<double>(im.M) * im.M);
  for (const WaveVector k : trunc.half_modes()) {
    Complex q;
    if (k.ky <= 0) {
      const fftw_complex& v = im.prod_spec[im.bin(-k.kx, -k.ky)];
      q = Complex(v[0], v[1]);
    } else {
      const fftw_complex& v = im.prod_spec[im.bin(k.kx, k.ky)];
      q = std::conj(Complex(v[0], v[1]));
    }
    out.field.set_pair(k, -scale * q);
  }
  return out;
}

std::pair<double, double> quadratic_invariants(const VorticityField& field,
                                               const BilinearResult& b) {
  const Truncation& trunc = field.truncation();
  if (!(b.field.truncation() == trunc))
    throw std::invalid_argument("quadratic_invariants: truncation mismatch");
  double enstrophy_flux = 0.0;
  double energy_flux = 0.0;
  for (const WaveVector k : trunc.active_modes()) {
    const int idx = trunc.index(k);
    const double term = (std::conj(field[idx]) * b.field[idx]).real();
    enstrophy_flux += term;
    energy_flux += term / norm2(k);
  }
  return {enstrophy_flux, energy_flux};
}

}  // namespace ns2d
