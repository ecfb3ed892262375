#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "smcflab/grid.hpp"

namespace smcflab {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class SchemeKind { ExplicitEM, SemiImplicitSpectral, StratonovichHeun };

inline const char* scheme_name(SchemeKind s) {
  switch (s) {
    case SchemeKind::ExplicitEM: return "ExplicitEM";
    case SchemeKind::SemiImplicitSpectral: return "SemiImplicitSpectral";
    case SchemeKind::StratonovichHeun: return "StratonovichHeun";
  }
  return "?";
}

inline SchemeKind scheme_from_name(const std::string& s) {
  if (s == "ExplicitEM") return SchemeKind::ExplicitEM;
  if (s == "SemiImplicitSpectral") return SchemeKind::SemiImplicitSpectral;
  if (s == "StratonovichHeun") return SchemeKind::StratonovichHeun;
  throw ConfigError("config: unknown scheme \"" + s + "\"");
}

// One explicit frequency vector with sin/cos amplitudes, for data that the
// plain per-axis coefficient lists cannot express (e.g. mixed 2-D modes).
struct FourierMode {
  std::vector<int> k;
  double a = 0.0;  // sin coefficient
  double b = 0.0;  // cos coefficient
};

struct InitialData {
  enum class Family { Fourier, RandomLipschitz };
  Family family = Family::Fourier;
  // fourier: u0 = constant + sum_k sin[k-1] sin(2 pi k x_1) + cos[k-1] cos(...)
  //          + the explicit modes list
  std::vector<double> sin_coeffs;
  std::vector<double> cos_coeffs;
  double constant = 0.0;
  std::vector<FourierMode> modes;
  // randomLipschitz: random trig polynomial with modes up to max_mode,
  // rescaled so the discrete sup of |grad u0| equals L
  double L = 1.0;
  int max_mode = 3;
};

struct LargeTimeSettings {
  std::vector<double> t_grid;  // empty = derive from T
};

struct Tolerances {
  double tol_mp = 0.02;     // relative gradient-max-principle allowance
  double tol_bias = -1.0;   // supermartingale bias; negative = 1% of I(0)
  double moment_k = 10.0;   // structural constant for the moment bound
  double moment_q = 1.5;    // q used by the q-moment checks
};

struct SimConfig {
  int dim = 1;
  int res = 128;
  double epsilon = 0.0;
  double dt = 1e-3;
  double T = 1.0;
  SchemeKind scheme = SchemeKind::SemiImplicitSpectral;
  int sample_stride = 0;  // 0 = choose so that a trace keeps <= 2048 samples
  InitialData initial;
  int ensemble_size = 100;
  std::uint64_t base_seed = 0;
  int max_refine_level = 0;
  Tolerances tolerances;
  int worker_count = 0;  // 0 = hardware concurrency
  bool noise = true;
  std::vector<double> epsilons = {0.2, 0.1, 0.05, 0.0};
  LargeTimeSettings large_time;

  GridSpec grid() const { return make_grid(dim, res); }

  long long steps() const { return std::llround(T / dt); }

  int stride() const {
    if (sample_stride > 0) return sample_stride;
    return 1 + static_cast<int>(steps() / 2046);
  }

  std::uint32_t finest_subdivision() const {
    std::uint32_t s = 1;
    for (int i = 0; i < max_refine_level; ++i) s *= 2;
    return s;
  }

  double cfl_bound() const {
    const double h = 1.0 / res;
    return 0.5 * h * h / (2.0 * dim * (1.0 + epsilon));
  }

  std::vector<double> large_time_grid() const {
    if (!large_time.t_grid.empty()) return large_time.t_grid;
    return {T / 16.0, T / 8.0, T / 4.0, T / 2.0};
  }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j,
                                const std::vector<std::string>& allowed,
                                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& k : allowed)
      if (it.key() == k) { ok = true; break; }
    if (!ok) throw ConfigError("config: unknown key \"" + it.key() + "\" in " + where);
  }
}

template <typename T>
inline T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config: bad value for \"") + key + "\"");
  }
}

}  // namespace detail

inline void validate_config(const SimConfig& c, bool force_cfl = false) {
  make_grid(c.dim, c.res);  // throws on bad dim/res
  if (!(c.dt > 0.0)) throw ConfigError("config: dt must be positive");
  if (!(c.T > 0.0)) throw ConfigError("config: T must be positive");
  const long long n = c.steps();
  if (n < 1 || std::abs(static_cast<double>(n) * c.dt - c.T) > 1e-9 * std::max(c.T, 1.0))
    throw ConfigError("config: T must be an integer multiple of dt");
  if (c.epsilon < 0.0) throw ConfigError("config: epsilon must be >= 0");
  if (c.ensemble_size < 1) throw ConfigError("config: M must be >= 1");
  if (c.sample_stride < 0) throw ConfigError("config: sampleStride must be >= 0");
  if (c.max_refine_level < 0 || c.max_refine_level > 20)
    throw ConfigError("config: maxRefineLevel must be in [0, 20]");
  if (c.worker_count < 0) throw ConfigError("config: workerCount must be >= 0");
  if (c.initial.family == InitialData::Family::RandomLipschitz) {
    if (!(c.initial.L > 0.0)) throw ConfigError("config: initial.L must be > 0");
    if (c.initial.max_mode < 1 || c.initial.max_mode > c.res / 2)
      throw ConfigError("config: initial.maxMode must be in [1, res/2]");
  }
  for (const auto& m : c.initial.modes)
    if (static_cast<int>(m.k.size()) != c.dim)
      throw ConfigError("config: initial mode frequency has wrong dimension");
  if (!(c.tolerances.tol_mp >= 0.0))
    throw ConfigError("config: tolerances.tolMP must be >= 0");
  if (!(c.tolerances.moment_k > 0.0))
    throw ConfigError("config: tolerances.momentK must be > 0");
  if (c.tolerances.moment_q < 1.0 || c.tolerances.moment_q >= 2.0)
    throw ConfigError("config: tolerances.momentQ must lie in [1, 2)");
  if (c.epsilons.empty() || c.epsilons.back() != 0.0)
    throw ConfigError("config: epsilons must end with 0");
  for (std::size_t e = 0; e + 1 < c.epsilons.size(); ++e)
    if (!(c.epsilons[e] > c.epsilons[e + 1]))
      throw ConfigError("config: epsilons must be strictly descending");
  for (double e : c.epsilons)
    if (e < 0.0) throw ConfigError("config: epsilons must be >= 0");
  if (!force_cfl && c.scheme != SchemeKind::SemiImplicitSpectral) {
    const double bound = c.cfl_bound();
    if (c.dt > bound) {
      std::ostringstream os;
      os << "config: dt = " << c.dt
         << " exceeds the explicit stability bound 0.5*h^2/(2*dim*(1+epsilon)) = "
         << bound;
      throw ConfigError(os.str());
    }
  }
  for (double t : c.large_time_grid())
    if (!(t > 0.0) || t > c.T)
      throw ConfigError("config: largeTime.Tgrid entries must lie in (0, T]");
}

inline SimConfig parse_config(const nlohmann::json& j, bool force_cfl = false) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  detail::reject_unknown_keys(
      j,
      {"dim", "res", "epsilon", "dt", "T", "scheme", "sampleStride", "initial",
       "M", "baseSeed", "maxRefineLevel", "tolerances", "workerCount", "noise",
       "epsilons", "largeTime"},
      "top level");
  SimConfig c;
  c.dim = detail::get_or(j, "dim", c.dim);
  c.res = detail::get_or(j, "res", c.res);
  c.epsilon = detail::get_or(j, "epsilon", c.epsilon);
  c.dt = detail::get_or(j, "dt", c.dt);
  c.T = detail::get_or(j, "T", c.T);
  if (j.contains("scheme")) c.scheme = scheme_from_name(j.at("scheme").get<std::string>());
  c.sample_stride = detail::get_or(j, "sampleStride", c.sample_stride);
  c.ensemble_size = detail::get_or(j, "M", c.ensemble_size);
  c.base_seed = detail::get_or(j, "baseSeed", c.base_seed);
  c.max_refine_level = detail::get_or(j, "maxRefineLevel", c.max_refine_level);
  c.worker_count = detail::get_or(j, "workerCount", c.worker_count);
  c.noise = detail::get_or(j, "noise", c.noise);
  if (j.contains("epsilons"))
    c.epsilons = j.at("epsilons").get<std::vector<double>>();
  if (j.contains("initial")) {
    const auto& ji = j.at("initial");
    detail::reject_unknown_keys(
        ji, {"family", "sin", "cos", "const", "modes", "L", "maxMode"}, "initial");
    const std::string fam = detail::get_or<std::string>(ji, "family", "fourier");
    if (fam == "fourier") c.initial.family = InitialData::Family::Fourier;
    else if (fam == "randomLipschitz")
      c.initial.family = InitialData::Family::RandomLipschitz;
    else throw ConfigError("config: unknown initial family \"" + fam + "\"");
    c.initial.sin_coeffs = detail::get_or(ji, "sin", c.initial.sin_coeffs);
    c.initial.cos_coeffs = detail::get_or(ji, "cos", c.initial.cos_coeffs);
    c.initial.constant = detail::get_or(ji, "const", c.initial.constant);
    c.initial.L = detail::get_or(ji, "L", c.initial.L);
    c.initial.max_mode = detail::get_or(ji, "maxMode", c.initial.max_mode);
    if (ji.contains("modes")) {
      for (const auto& jm : ji.at("modes")) {
        detail::reject_unknown_keys(jm, {"k", "a", "b"}, "initial.modes");
        FourierMode m;
        m.k = jm.at("k").get<std::vector<int>>();
        m.a = detail::get_or(jm, "a", 0.0);
        m.b = detail::get_or(jm, "b", 0.0);
        c.initial.modes.push_back(m);
      }
    }
  }
  if (j.contains("tolerances")) {
    const auto& jt = j.at("tolerances");
    detail::reject_unknown_keys(jt, {"tolMP", "tolBias", "momentK", "momentQ"},
                                "tolerances");
    c.tolerances.tol_mp = detail::get_or(jt, "tolMP", c.tolerances.tol_mp);
    c.tolerances.tol_bias = detail::get_or(jt, "tolBias", c.tolerances.tol_bias);
    c.tolerances.moment_k = detail::get_or(jt, "momentK", c.tolerances.moment_k);
    c.tolerances.moment_q = detail::get_or(jt, "momentQ", c.tolerances.moment_q);
  }
  if (j.contains("largeTime")) {
    const auto& jl = j.at("largeTime");
    detail::reject_unknown_keys(jl, {"Tgrid"}, "largeTime");
    c.large_time.t_grid = detail::get_or(jl, "Tgrid", c.large_time.t_grid);
  }
  validate_config(c, force_cfl);
  return c;
}

inline SimConfig parse_config(const std::string& text, bool force_cfl = false) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return parse_config(j, force_cfl);
}

inline SimConfig load_config(const std::string& path, bool force_cfl = false) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str(), force_cfl);
}

// Effective configuration with defaults resolved; what report.json echoes.
inline nlohmann::json config_echo(const SimConfig& c) {
  nlohmann::json ji;
  if (c.initial.family == InitialData::Family::Fourier) {
    ji["family"] = "fourier";
    ji["sin"] = c.initial.sin_coeffs;
    ji["cos"] = c.initial.cos_coeffs;
    ji["const"] = c.initial.constant;
    nlohmann::json jm = nlohmann::json::array();
    for (const auto& m : c.initial.modes)
      jm.push_back({{"k", m.k}, {"a", m.a}, {"b", m.b}});
    ji["modes"] = jm;
  } else {
    ji["family"] = "randomLipschitz";
    ji["L"] = c.initial.L;
    ji["maxMode"] = c.initial.max_mode;
  }
  return nlohmann::json{
      {"dim", c.dim},
      {"res", c.res},
      {"epsilon", c.epsilon},
      {"dt", c.dt},
      {"T", c.T},
      {"scheme", scheme_name(c.scheme)},
      {"sampleStride", c.stride()},
      {"initial", ji},
      {"M", c.ensemble_size},
      {"baseSeed", c.base_seed},
      {"maxRefineLevel", c.max_refine_level},
      {"tolerances",
       {{"tolMP", c.tolerances.tol_mp},
        {"tolBias", c.tolerances.tol_bias},
        {"momentK", c.tolerances.moment_k},
        {"momentQ", c.tolerances.moment_q}}},
      {"workerCount", c.worker_count},
      {"noise", c.noise},
      {"epsilons", c.epsilons},
      {"largeTime", {{"Tgrid", c.large_time_grid()}}}};
}

}  // namespace smcflab
