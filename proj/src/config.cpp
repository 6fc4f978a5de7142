#include "ns2d/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "ns2d/field.hpp"
#include "ns2d/rng.hpp"

namespace ns2d::config {

namespace {

const std::map<std::string, Experiment>& experiment_names() {
  static const std::map<std::string, Experiment> names = {
      {"simulate", Experiment::simulate},
      {"ensemble", Experiment::ensemble},
      {"verify-conservation", Experiment::verify_conservation},
      {"lemma1", Experiment::lemma1},
      {"lemma2", Experiment::lemma2},
      {"proposition", Experiment::proposition},
      {"theorem-ladder", Experiment::theorem_ladder},
      {"time-average", Experiment::time_average},
      {"spectrum", Experiment::spectrum},
      {"picard-certify", Experiment::picard_certify},
  };
  return names;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing junk");
    return x;
  } catch (const std::exception&) {
    throw config_error("config: bad numeric value for '" + key + "': " + v);
  }
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing junk");
    return static_cast<int>(x);
  } catch (const std::exception&) {
    throw config_error("config: bad integer value for '" + key + "': " + v);
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing junk");
    return x;
  } catch (const std::exception&) {
    throw config_error("config: bad seed value for '" + key + "': " + v);
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw config_error("config: bad boolean value for '" + key + "': " + v);
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += fmt(v[i]);
  }
  return s;
}

}  // namespace

std::string to_string(Experiment e) {
  for (const auto& [name, val] : experiment_names())
    if (val == e) return name;
  return "unknown";
}

Experiment experiment_from_string(const std::string& s) {
  const auto it = experiment_names().find(s);
  if (it == experiment_names().end())
    throw config_error("config: unknown experiment '" + s + "'");
  return it->second;
}

RunConfig parse(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw config_error("config: malformed section at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      if (section != "physics" && section != "numerics" && section != "experiment" &&
          section != "mc" && section != "io")
        throw config_error("config: unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("config: expected key = value at line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    const auto claim = [&](const std::string& want_section) {
      if (section != want_section)
        throw config_error("config: key '" + key + "' belongs in [" + want_section + "]");
    };

    if (key == "experiment") {
      if (!section.empty())
        throw config_error("config: 'experiment' must precede any section");
      c.experiment = experiment_from_string(value);
    } else if (key == "k_max") {
      claim("physics"); c.k_max = parse_int(key, value);
    } else if (key == "r") {
      claim("physics"); c.r = parse_double(key, value);
    } else if (key == "alpha") {
      claim("physics"); c.alpha = parse_double(key, value);
    } else if (key == "delta") {
      claim("physics"); c.delta = parse_double(key, value);
    } else if (key == "R") {
      claim("physics"); c.R = parse_double(key, value);
    } else if (key == "noise_file") {
      claim("physics"); c.noise_file = value;
    } else if (key == "nu") {
      claim("physics"); c.nu = parse_double(key, value);
    } else if (key == "L") {
      claim("physics"); c.L = parse_double(key, value);
    } else if (key == "Gamma0") {
      claim("physics"); c.Gamma0 = parse_double(key, value);
    } else if (key == "c_gamma") {
      claim("physics"); c.c_gamma = parse_double(key, value);
    } else if (key == "band_radius") {
      claim("physics"); c.band_radius = parse_double(key, value);
    } else if (key == "h") {
      claim("numerics"); c.h = parse_double(key, value);
    } else if (key == "T") {
      claim("numerics"); c.T = parse_double(key, value);
    } else if (key == "n_substeps") {
      claim("numerics"); c.n_substeps = parse_int(key, value);
    } else if (key == "picard_max_iter") {
      claim("numerics"); c.picard_max_iter = parse_int(key, value);
    } else if (key == "picard_tol") {
      claim("numerics"); c.picard_tol = parse_double(key, value);
    } else if (key == "picard_grid") {
      claim("numerics"); c.picard_grid = parse_int(key, value);
    } else if (key == "heun") {
      claim("numerics"); c.heun = parse_bool(key, value);
    } else if (key == "nonlinear") {
      claim("numerics"); c.nonlinear = parse_bool(key, value);
    } else if (key == "phi0") {
      claim("experiment"); c.phi0 = parse_double(key, value);
    } else if (key == "t_check") {
      claim("experiment"); c.t_check = parse_double(key, value);
    } else if (key == "d_grid") {
      claim("experiment"); c.d_grid = parse_list(key, value);
    } else if (key == "d2_grid") {
      claim("experiment"); c.d2_grid = parse_list(key, value);
    } else if (key == "b_grid") {
      claim("experiment"); c.b_grid = parse_list(key, value);
    } else if (key == "n_checks") {
      claim("experiment"); c.n_checks = parse_int(key, value);
    } else if (key == "tau") {
      claim("experiment"); c.tau = parse_double(key, value);
    } else if (key == "mode_kx") {
      claim("experiment"); c.mode_kx = parse_int(key, value);
    } else if (key == "mode_ky") {
      claim("experiment"); c.mode_ky = parse_int(key, value);
    } else if (key == "t_avg") {
      claim("experiment"); c.t_avg = parse_double(key, value);
    } else if (key == "ladder_a_hat") {
      claim("experiment"); c.ladder_a_hat = parse_double(key, value);
    } else if (key == "ladder_levels") {
      claim("experiment"); c.ladder_levels = parse_int(key, value);
    } else if (key == "ladder_m") {
      claim("experiment"); c.ladder_m = parse_int(key, value);
    } else if (key == "ladder_n") {
      claim("experiment"); c.ladder_n = parse_int(key, value);
    } else if (key == "k_star_family") {
      claim("experiment"); c.k_star_family = parse_list(key, value);
    } else if (key == "burn_in") {
      claim("experiment"); c.burn_in = parse_double(key, value);
    } else if (key == "snapshots") {
      claim("experiment"); c.snapshots = parse_int(key, value);
    } else if (key == "snapshot_spacing") {
      claim("experiment"); c.snapshot_spacing = parse_double(key, value);
    } else if (key == "chains") {
      claim("experiment"); c.chains = parse_int(key, value);
    } else if (key == "alpha_tilde") {
      claim("experiment"); c.alpha_tilde = parse_double(key, value);
    } else if (key == "fit_k_lo") {
      claim("experiment"); c.fit_k_lo = parse_double(key, value);
    } else if (key == "fit_k_hi") {
      claim("experiment"); c.fit_k_hi = parse_double(key, value);
    } else if (key == "fit_slack") {
      claim("experiment"); c.fit_slack = parse_double(key, value);
    } else if (key == "intervals") {
      claim("experiment"); c.intervals = parse_int(key, value);
    } else if (key == "init") {
      claim("experiment"); c.init = value;
    } else if (key == "init_kx") {
      claim("experiment"); c.init_kx = parse_int(key, value);
    } else if (key == "init_ky") {
      claim("experiment"); c.init_ky = parse_int(key, value);
    } else if (key == "amplitude") {
      claim("experiment"); c.amplitude = parse_double(key, value);
    } else if (key == "n_fields") {
      claim("experiment"); c.n_fields = parse_int(key, value);
    } else if (key == "n_traj") {
      claim("mc"); c.n_traj = parse_int(key, value);
    } else if (key == "seed") {
      claim("mc"); c.seed = parse_u64(key, value);
    } else if (key == "out_dir") {
      claim("io"); c.out_dir = value;
    } else if (key == "checkpoint_interval") {
      claim("io"); c.checkpoint_interval = parse_int(key, value);
    } else if (key == "threads") {
      claim("io"); c.threads = parse_int(key, value);
    } else {
      throw config_error("config: unknown key '" + key + "'");
    }
  }
  return c;
}

RunConfig parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("config: cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void RunConfig::validate() const {
  if (k_max < 1) throw config_error("config: k_max must be >= 1");
  try {
    validate_norm_exponents(r, alpha);
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("config: ") + e.what());
  }
  if (!(delta > 0.0)) throw config_error("config: delta must be > 0");
  if (!(c_gamma > 0.0)) throw config_error("config: c_gamma must be > 0");
  if (!(h > 0.0)) throw config_error("config: h must be > 0");
  if (!(T > 0.0)) throw config_error("config: T must be > 0");
  if (n_substeps < 1) throw config_error("config: n_substeps must be >= 1");
  if (picard_max_iter < 1) throw config_error("config: picard_max_iter must be >= 1");
  if (!(picard_tol > 0.0)) throw config_error("config: picard_tol must be > 0");
  if (picard_grid < 1) throw config_error("config: picard_grid must be >= 1");
  if (n_traj < 1) throw config_error("config: n_traj must be >= 1");
  if (threads < 1) throw config_error("config: threads must be >= 1");
  if (checkpoint_interval < 0) throw config_error("config: checkpoint_interval >= 0");
  if (init != "zero" && init != "single_pair" && init != "profile")
    throw config_error("config: init must be zero | single_pair | profile");
  const bool physical = nu > 0.0 || L > 0.0 || Gamma0 >= 0.0;
  if (noise_file.empty() && R < 0.0 && !(nu > 0.0 && L > 0.0 && Gamma0 >= 0.0))
    throw config_error(
        "config: forcing unspecified (set R, noise_file, or nu/L/Gamma0)");
  (void)physical;
  for (const double d : d_grid)
    if (!(d > 0.0)) throw config_error("config: d_grid entries must be > 0");
  for (const double d2 : d2_grid)
    if (!(d2 > 0.0)) throw config_error("config: d2_grid entries must be > 0");
  if (!(ladder_a_hat > 0.0)) throw config_error("config: ladder_a_hat must be > 0");
  if (!(phi0 >= 0.0)) throw config_error("config: phi0 must be >= 0");
  if (!(amplitude > 0.0)) throw config_error("config: amplitude must be > 0");
  if (n_fields < 1) throw config_error("config: n_fields must be >= 1");
  if (intervals < 1) throw config_error("config: intervals must be >= 1");
  if (snapshots < 1) throw config_error("config: snapshots must be >= 1");
  if (chains < 1) throw config_error("config: chains must be >= 1");
  if (!(snapshot_spacing > 0.0)) throw config_error("config: snapshot_spacing > 0");
  if (!(burn_in >= 0.0)) throw config_error("config: burn_in must be >= 0");
  if (n_checks < 1) throw config_error("config: n_checks must be >= 1");
}

std::string RunConfig::serialize() const {
  std::ostringstream s;
  s << "experiment = " << to_string(experiment) << "\n";
  s << "[physics]\n";
  s << "k_max = " << k_max << "\n";
  s << "r = " << fmt(r) << "\n";
  s << "alpha = " << fmt(alpha) << "\n";
  s << "delta = " << fmt(delta) << "\n";
  s << "R = " << fmt(R) << "\n";
  s << "noise_file = " << noise_file << "\n";
  s << "nu = " << fmt(nu) << "\n";
  s << "L = " << fmt(L) << "\n";
  s << "Gamma0 = " << fmt(Gamma0) << "\n";
  s << "c_gamma = " << fmt(c_gamma) << "\n";
  s << "band_radius = " << fmt(band_radius) << "\n";
  s << "[numerics]\n";
  s << "h = " << fmt(h) << "\n";
  s << "T = " << fmt(T) << "\n";
  s << "n_substeps = " << n_substeps << "\n";
  s << "picard_max_iter = " << picard_max_iter << "\n";
  s << "picard_tol = " << fmt(picard_tol) << "\n";
  s << "picard_grid = " << picard_grid << "\n";
  s << "heun = " << (heun ? "true" : "false") << "\n";
  s << "nonlinear = " << (nonlinear ? "true" : "false") << "\n";
  s << "[experiment]\n";
  s << "phi0 = " << fmt(phi0) << "\n";
  s << "t_check = " << fmt(t_check) << "\n";
  s << "d_grid = " << fmt(d_grid) << "\n";
  s << "d2_grid = " << fmt(d2_grid) << "\n";
  s << "b_grid = " << fmt(b_grid) << "\n";
  s << "n_checks = " << n_checks << "\n";
  s << "tau = " << fmt(tau) << "\n";
  s << "mode_kx = " << mode_kx << "\n";
  s << "mode_ky = " << mode_ky << "\n";
  s << "t_avg = " << fmt(t_avg) << "\n";
  s << "ladder_a_hat = " << fmt(ladder_a_hat) << "\n";
  s << "ladder_levels = " << ladder_levels << "\n";
  s << "ladder_m = " << ladder_m << "\n";
  s << "ladder_n = " << ladder_n << "\n";
  s << "k_star_family = " << fmt(k_star_family) << "\n";
  s << "burn_in = " << fmt(burn_in) << "\n";
  s << "snapshots = " << snapshots << "\n";
  s << "snapshot_spacing = " << fmt(snapshot_spacing) << "\n";
  s << "chains = " << chains << "\n";
  s << "alpha_tilde = " << fmt(alpha_tilde) << "\n";
  s << "fit_k_lo = " << fmt(fit_k_lo) << "\n";
  s << "fit_k_hi = " << fmt(fit_k_hi) << "\n";
  s << "fit_slack = " << fmt(fit_slack) << "\n";
  s << "intervals = " << intervals << "\n";
  s << "init = " << init << "\n";
  s << "init_kx = " << init_kx << "\n";
  s << "init_ky = " << init_ky << "\n";
  s << "amplitude = " << fmt(amplitude) << "\n";
  s << "n_fields = " << n_fields << "\n";
  s << "[mc]\n";
  s << "n_traj = " << n_traj << "\n";
  s << "seed = " << seed << "\n";
  s << "[io]\n";
  s << "out_dir = " << out_dir << "\n";
  s << "checkpoint_interval = " << checkpoint_interval << "\n";
  s << "threads = " << threads << "\n";
  return s.str();
}

std::string RunConfig::digest() const { return rng::hex64(rng::fnv1a64(serialize())); }

}  // namespace ns2d::config
