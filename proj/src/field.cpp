#include "ns2d/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ns2d {

void validate_norm_exponents(double r, double alpha) {
  if (!(r > 1.0)) throw std::invalid_argument("NormParams: r must be > 1");
  if (!(alpha > 1.0 + r) || !(alpha > 2.0))
    throw std::invalid_argument("NormParams: alpha must exceed max(2, 1 + r)");
}

NormParams::NormParams(double r_, double alpha_, double D_) : r(r_), alpha(alpha_), D(D_) {
  validate_norm_exponents(r, alpha);
  if (!(D > 0.0)) throw std::invalid_argument("NormParams: D must be > 0");
}

VorticityField::VorticityField(Truncation trunc)
    : trunc_(std::move(trunc)), data_(static_cast<std::size_t>(trunc_.array_size())) {}

void VorticityField::set_pair(WaveVector k, Complex v) {
  if (!trunc_.active(k)) throw std::invalid_argument("set_pair: mode outside truncation");
  data_[static_cast<std::size_t>(trunc_.index(k))] = v;
  data_[static_cast<std::size_t>(trunc_.index(-k))] = std::conj(v);
}

double VorticityField::enforce_hermitian() {
  double worst = 0.0;
  for (const WaveVector k : trunc_.half_modes()) {
    Complex& a = data_[static_cast<std::size_t>(trunc_.index(k))];
    Complex& b = data_[static_cast<std::size_t>(trunc_.index(-k))];
    const Complex mean = 0.5 * (a + std::conj(b));
    worst = std::max(worst, std::abs(a - mean));
    a = mean;
    b = std::conj(mean);
  }
  return worst;
}

double VorticityField::hermitian_defect() const {
  double worst = 0.0;
  double scale = 0.0;
  for (const WaveVector k : trunc_.half_modes()) {
    const Complex a = data_[static_cast<std::size_t>(trunc_.index(k))];
    const Complex b = data_[static_cast<std::size_t>(trunc_.index(-k))];
    worst = std::max(worst, std::abs(a - std::conj(b)));
    scale = std::max({scale, std::abs(a), std::abs(b)});
  }
  return scale > 0.0 ? worst / scale : 0.0;
}

bool VorticityField::finite() const {
  for (const Complex& v : data_)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

void VorticityField::validate() const {
  if (!finite()) throw std::invalid_argument("VorticityField: non-finite amplitude");
  if (hermitian_defect() > 1e-12)
    throw std::invalid_argument("VorticityField: hermitian symmetry violated");
  const WaveVector zero{0, 0};
  if (std::abs(data_[static_cast<std::size_t>(trunc_.index(zero))]) != 0.0)
    throw std::invalid_argument("VorticityField: zero mode must vanish");
}

double enstrophy(const VorticityField& field) {
  double sum = 0.0;
  for (const WaveVector k : field.truncation().active_modes())
    sum += std::norm(field[field.truncation().index(k)]);
  return 0.5 * sum;
}

double d_norm(const VorticityField& field, const NormParams& p) {
  const double dma = std::pow(p.D, -p.alpha);
  double sup = 0.0;
  for (const WaveVector k : field.truncation().active_modes()) {
    const double a = std::abs(field[field.truncation().index(k)]);
    if (a == 0.0) continue;
    const double kk = norm(k);
    sup = std::max(sup, a * std::pow(kk, p.r) * std::exp(dma * kk));
  }
  return sup;
}

bool in_region_U(const VorticityField& field, const NormParams& p) {
  if (enstrophy(field) > p.D * p.D) return false;
  return d_norm(field, p) <= std::pow(p.D, p.alpha);
}

double minimal_D(const VorticityField& field, double r, double alpha, double tol,
                 double ceiling) {
  validate_norm_exponents(r, alpha);
  if (!(tol > 0.0)) throw std::invalid_argument("minimal_D: tol must be > 0");
  const double phi = enstrophy(field);
  if (phi == 0.0 && d_norm(field, NormParams(r, alpha, 1.0)) == 0.0) return 0.0;
  double hi = ceiling;
  if (!in_region_U(field, NormParams(r, alpha, hi)))
    return std::numeric_limits<double>::infinity();
  double lo = 0.0;  // membership fails as D -> 0 for any nonzero field
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (in_region_U(field, NormParams(r, alpha, mid)))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

SpectrumEstimate energy_spectrum(std::span<const VorticityField> ensemble) {
  if (ensemble.empty()) throw std::invalid_argument("energy_spectrum: empty ensemble");
  const Truncation& trunc = ensemble.front().truncation();
  for (const VorticityField& f : ensemble)
    if (!(f.truncation() == trunc))
      throw std::invalid_argument("energy_spectrum: mixed truncations");

  const int k_max = trunc.k_max();
  std::vector<double> sums(static_cast<std::size_t>(k_max) + 1, 0.0);
  std::vector<int> counts(static_cast<std::size_t>(k_max) + 1, 0);
  // Shell of site k' is the nearest integer to |k'| ([k-1/2, k+1/2) bins).
  std::vector<int> shell_of(static_cast<std::size_t>(trunc.array_size()), -1);
  for (const WaveVector k : trunc.active_modes()) {
    const int shell = static_cast<int>(std::floor(norm(k) + 0.5));
    if (shell >= 1 && shell <= k_max) {
      shell_of[static_cast<std::size_t>(trunc.index(k))] = shell;
      counts[static_cast<std::size_t>(shell)] += 1;
    }
  }
  for (const VorticityField& f : ensemble) {
    for (const WaveVector k : trunc.active_modes()) {
      const int idx = trunc.index(k);
      const int shell = shell_of[static_cast<std::size_t>(idx)];
      if (shell > 0) sums[static_cast<std::size_t>(shell)] += std::norm(f[idx]);
    }
  }
  SpectrumEstimate out;
  const double n = static_cast<double>(ensemble.size());
  for (int s = 1; s <= k_max; ++s) {
    const int c = counts[static_cast<std::size_t>(s)];
    if (c == 0) continue;
    out.shells.push_back({static_cast<double>(s),
                          sums[static_cast<std::size_t>(s)] / (n * s), c});
  }
  return out;
}

VelocityModes velocity_from_vorticity(const VorticityField& field) {
  const Truncation& trunc = field.truncation();
  VelocityModes vel{trunc,
                    std::vector<Complex>(static_cast<std::size_t>(trunc.array_size())),
                    std::vector<Complex>(static_cast<std::size_t>(trunc.array_size()))};
  for (const WaveVector k : trunc.active_modes()) {
    const int idx = trunc.index(k);
    const Complex w = field[idx];
    const double inv_k2 = 1.0 / static_cast<double>(norm2(k));
    // u_k = i (-k2, k1) / |k|^2 * w_k
    vel.ux[static_cast<std::size_t>(idx)] = Complex(0.0, -k.ky * inv_k2) * w;
    vel.uy[static_cast<std::size_t>(idx)] = Complex(0.0, k.kx * inv_k2) * w;
  }
  return vel;
}

}  // namespace ns2d
