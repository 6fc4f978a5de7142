#include "ns2d/forcing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ns2d/ensemble.hpp"

namespace ns2d {

namespace {

double validated_reynolds(const Truncation& trunc, const std::vector<double>& gamma,
                          double c_gamma) {
  if (gamma.size() != static_cast<std::size_t>(trunc.array_size()))
    throw std::invalid_argument("NoiseSpec: dense array size mismatch");
  if (!(c_gamma > 0.0)) throw std::invalid_argument("NoiseSpec: c_gamma must be > 0");
  const WaveVector zero{0, 0};
  if (gamma[static_cast<std::size_t>(trunc.index(zero))] != 0.0)
    throw std::invalid_argument("NoiseSpec: gamma at k = 0 must be absent/zero");
  double sum = 0.0;
  for (const WaveVector k : trunc.active_modes()) {
    const double g = gamma[static_cast<std::size_t>(trunc.index(k))];
    if (!(g >= 0.0) || !std::isfinite(g))
      throw std::invalid_argument("NoiseSpec: gamma must be finite and >= 0");
    const double g_neg = gamma[static_cast<std::size_t>(trunc.index(-k))];
    if (g != g_neg)
      throw std::invalid_argument("NoiseSpec: gamma must be even under k -> -k");
    sum += g;
  }
  // Entries off the active disk must be zero.
  for (int i = 0; i < trunc.array_size(); ++i) {
    if (gamma[static_cast<std::size_t>(i)] != 0.0 &&
        !trunc.active(trunc.from_index(i)))
      throw std::invalid_argument("NoiseSpec: gamma outside the truncation");
  }
  const double R = 0.5 * sum;
  for (const WaveVector k : trunc.active_modes()) {
    const double g = gamma[static_cast<std::size_t>(trunc.index(k))];
    if (g > c_gamma * R * std::exp(-norm(k)) * (1.0 + 1e-12))
      throw std::invalid_argument("NoiseSpec: exponential decay bound violated");
  }
  return R;
}

}  // namespace

NoiseSpec::NoiseSpec(Truncation trunc, std::vector<double> gamma_dense, double c_gamma)
    : trunc_(std::move(trunc)),
      gamma_(std::move(gamma_dense)),
      c_gamma_(c_gamma),
      reynolds_(validated_reynolds(trunc_, gamma_, c_gamma_)) {}

NoiseSpec NoiseSpec::from_modes(Truncation trunc,
                                std::span<const std::pair<WaveVector, double>> modes,
                                double c_gamma) {
  std::vector<double> dense(static_cast<std::size_t>(trunc.array_size()), 0.0);
  for (const auto& [k, g] : modes) {
    if (!trunc.active(k))
      throw std::invalid_argument("NoiseSpec: mode outside truncation");
    // Hermitian completion: specifying gamma_k implies gamma_{-k}.
    const std::size_t i = static_cast<std::size_t>(trunc.index(k));
    const std::size_t j = static_cast<std::size_t>(trunc.index(-k));
    if ((dense[i] != 0.0 && dense[i] != g) || (dense[j] != 0.0 && dense[j] != g))
      throw std::invalid_argument("NoiseSpec: conflicting gamma for a mode pair");
    dense[i] = g;
    dense[j] = g;
  }
  return NoiseSpec(std::move(trunc), std::move(dense), c_gamma);
}

NoiseSpec NoiseSpec::default_band(Truncation trunc, double R, double band_radius,
                                  double c_gamma) {
  if (!(R >= 0.0)) throw std::invalid_argument("NoiseSpec: R must be >= 0");
  std::vector<double> dense(static_cast<std::size_t>(trunc.array_size()), 0.0);
  double z = 0.0;
  for (const WaveVector k : trunc.active_modes())
    if (norm(k) <= band_radius) z += std::exp(-norm(k));
  if (z == 0.0) throw std::invalid_argument("NoiseSpec: empty forcing band");
  for (const WaveVector k : trunc.active_modes())
    if (norm(k) <= band_radius)
      dense[static_cast<std::size_t>(trunc.index(k))] = 2.0 * R * std::exp(-norm(k)) / z;
  return NoiseSpec(std::move(trunc), std::move(dense), c_gamma);
}

double reynolds(const NoiseSpec& spec) { return spec.reynolds(); }

void NoiseSpec::save(const std::filesystem::path& path) const {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw std::runtime_error("NoiseSpec: cannot write " + path.string());
  std::fprintf(f, "# stoch-ns2d noise spec\n");
  std::fprintf(f, "k_max = %d\n", trunc_.k_max());
  std::fprintf(f, "c_gamma = %.17g\n", c_gamma_);
  std::fprintf(f, "decay_coefficient = 1\n");
  for (const WaveVector k : trunc_.half_modes()) {
    const double g = gamma_[static_cast<std::size_t>(trunc_.index(k))];
    if (g != 0.0) std::fprintf(f, "mode = %d %d %.17g\n", k.kx, k.ky, g);
  }
  std::fclose(f);
}

NoiseSpec NoiseSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("NoiseSpec: cannot read " + path.string());
  int k_max = -1;
  double c_gamma = 10.0;
  std::vector<std::pair<WaveVector, double>> modes;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("NoiseSpec: expected key = value at line " +
                               std::to_string(lineno));
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    const auto trim = [](std::string& s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      s = b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(value);
    if (key == "k_max") {
      k_max = std::stoi(value);
    } else if (key == "c_gamma") {
      c_gamma = std::stod(value);
    } else if (key == "decay_coefficient") {
      if (std::stod(value) != 1.0)
        throw std::runtime_error("NoiseSpec: decay coefficient is fixed to 1");
    } else if (key == "mode") {
      std::istringstream ss(value);
      WaveVector k;
      double g = 0.0;
      if (!(ss >> k.kx >> k.ky >> g))
        throw std::runtime_error("NoiseSpec: bad mode entry at line " +
                                 std::to_string(lineno));
      modes.emplace_back(k, g);
    } else {
      throw std::runtime_error("NoiseSpec: unknown key '" + key + "'");
    }
  }
  if (k_max < 1) throw std::runtime_error("NoiseSpec: missing k_max in " + path.string());
  return from_modes(Truncation(k_max), modes, c_gamma);
}

PhysicalParams::PhysicalParams(double nu_, double L_, double Gamma0_, Truncation trunc_,
                               std::vector<double> shape_dense)
    : nu(nu_), L(L_), Gamma0(Gamma0_), trunc(std::move(trunc_)),
      gamma_shape(std::move(shape_dense)) {
  if (!(nu > 0.0)) throw std::invalid_argument("PhysicalParams: nu must be > 0");
  if (!(L > 0.0)) throw std::invalid_argument("PhysicalParams: L must be > 0");
  if (!(Gamma0 >= 0.0)) throw std::invalid_argument("PhysicalParams: Gamma0 must be >= 0");
  if (gamma_shape.size() != static_cast<std::size_t>(trunc.array_size()))
    throw std::invalid_argument("PhysicalParams: shape size mismatch");
  double sum = 0.0;
  for (const WaveVector k : trunc.active_modes())
    sum += gamma_shape[static_cast<std::size_t>(trunc.index(k))];
  if (sum > 0.0) {
    for (double& s : gamma_shape) s /= sum;
  } else if (Gamma0 > 0.0) {
    throw std::invalid_argument("PhysicalParams: shape sums to zero with Gamma0 > 0");
  }
}

NoiseSpec nondimensionalize(const PhysicalParams& p, double c_gamma) {
  const double scale = p.L * p.L / (p.nu * p.nu * p.nu) * p.Gamma0;
  std::vector<double> dense(p.gamma_shape.size(), 0.0);
  for (std::size_t i = 0; i < dense.size(); ++i) dense[i] = scale * p.gamma_shape[i];
  return NoiseSpec(p.trunc, std::move(dense), c_gamma);
}

OUState::OUState(Truncation trunc)
    : trunc_(std::move(trunc)), z_(static_cast<std::size_t>(trunc_.array_size())), t_(0.0) {}

OUStepper::OUStepper(const NoiseSpec& spec, double h)
    : trunc_(spec.truncation()),
      h_(h),
      decay_dense_(static_cast<std::size_t>(trunc_.array_size()), 0.0) {
  if (!(h > 0.0)) throw std::invalid_argument("OUStepper: h must be > 0");
  half_.reserve(trunc_.half_modes().size());
  for (const WaveVector k : trunc_.half_modes()) {
    HalfMode m;
    m.k = k;
    m.idx = trunc_.index(k);
    m.idx_neg = trunc_.index(-k);
    m.mode_id = trunc_.mode_id(k);
    const double k2 = static_cast<double>(norm2(k));
    m.decay = std::exp(-k2 * h);
    const double gamma = spec.gamma(k);
    m.xi_std = std::sqrt(gamma * (1.0 - std::exp(-2.0 * k2 * h)) / (2.0 * k2));
    half_.push_back(m);
    decay_dense_[static_cast<std::size_t>(m.idx)] = m.decay;
    decay_dense_[static_cast<std::size_t>(m.idx_neg)] = m.decay;
  }
}

void OUStepper::step(OUState& state, rng::StreamKey key, std::uint32_t step_index,
                     std::vector<Complex>* xi_out) const {
  if (!(state.trunc_ == trunc_))
    throw std::invalid_argument("OUStepper: state truncation mismatch");
  if (xi_out) xi_out->assign(state.z_.size(), Complex{});
  for (const HalfMode& m : half_) {
    Complex xi{};
    if (m.xi_std > 0.0)
      xi = rng::complex_gauss(key.seed, key.traj, step_index, m.mode_id, rng::draw_ou,
                              m.xi_std * m.xi_std);
    const std::size_t i = static_cast<std::size_t>(m.idx);
    const std::size_t j = static_cast<std::size_t>(m.idx_neg);
    state.z_[i] = m.decay * state.z_[i] + xi;
    state.z_[j] = std::conj(state.z_[i]);
    if (xi_out) {
      (*xi_out)[i] = xi;
      (*xi_out)[j] = std::conj(xi);
    }
  }
  state.t_ += h_;
}

double ou_variance(double gamma, WaveVector k, double t) {
  const double k2 = static_cast<double>(norm2(k));
  return gamma * (1.0 - std::exp(-2.0 * k2 * t)) / (2.0 * k2);
}

stats::EnsembleResult ou_sup_tail_estimate(const NoiseSpec& spec, WaveVector k,
                                           double tau, double B, int n_traj,
                                           int n_substeps, std::uint64_t seed,
                                           int n_threads) {
  if (n_traj <= 0) throw std::invalid_argument("ou_sup_tail_estimate: n_traj must be > 0");
  if (n_substeps < 100)
    throw std::invalid_argument("ou_sup_tail_estimate: n_substeps must be >= 100");
  if (!(tau > 0.0)) throw std::invalid_argument("ou_sup_tail_estimate: tau must be > 0");
  if (!upper_half(k)) k = -k;  // |z_k| = |z_{-k}|
  const double k2 = static_cast<double>(norm2(k));
  const double h = tau / n_substeps;
  const double decay = std::exp(-k2 * h);
  const double sigma2 = spec.gamma(k) * (1.0 - std::exp(-2.0 * k2 * h)) / (2.0 * k2);
  const std::uint32_t mode = spec.truncation().mode_id(k);
  const double threshold = B * std::sqrt(tau);

  auto one = [&](int traj) -> std::uint8_t {
    Complex z{};
    double sup = 0.0;  // includes the t = 0 grid point, z(0) = 0
    for (int s = 0; s < n_substeps; ++s) {
      Complex xi{};
      if (sigma2 > 0.0)
        xi = rng::complex_gauss(seed, static_cast<std::uint32_t>(traj),
                                static_cast<std::uint32_t>(s), mode, rng::draw_ou, sigma2);
      z = decay * z + xi;
      sup = std::max(sup, std::abs(z));
    }
    return sup >= threshold ? 1 : 0;
  };
  const auto hits = parallel_map<std::uint8_t>(n_traj, n_threads, one);
  int n_hits = 0;
  for (const std::uint8_t h8 : hits) n_hits += h8;
  return stats::make_ensemble_result(n_traj, n_hits, seed);
}

bool event_A_D_indicator(const Truncation& trunc, std::span<const double> mode_sups,
                         double D, double tau) {
  const double root_tau = std::sqrt(tau);
  for (const WaveVector k : trunc.half_modes()) {
    const double bound = root_tau * D * std::exp(-norm(k) / 4.0);
    if (mode_sups[static_cast<std::size_t>(trunc.index(k))] > bound) return false;
  }
  return true;
}

bool event_A_D_indicator(const std::vector<OUState>& path, double D, double tau) {
  if (path.empty()) throw std::invalid_argument("event_A_D_indicator: empty path");
  const Truncation& trunc = path.front().truncation();
  std::vector<double> sups(static_cast<std::size_t>(trunc.array_size()), 0.0);
  for (const OUState& s : path)
    for (const WaveVector k : trunc.half_modes()) {
      const std::size_t i = static_cast<std::size_t>(trunc.index(k));
      sups[i] = std::max(sups[i], std::abs(s.z_by_index(static_cast<int>(i))));
    }
  return event_A_D_indicator(trunc, sups, D, tau);
}

}  // namespace ns2d
