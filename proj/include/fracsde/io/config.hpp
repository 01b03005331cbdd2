#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracsde/drift/field.hpp"
#include "fracsde/fbm/ensemble.hpp"

namespace fracsde::io {

inline constexpr int schema_version = 1;

// Schema violation; `field` is the offending key.
struct SchemaError : std::runtime_error {
  SchemaError(std::string f, const std::string& what) : std::runtime_error(f + ": " + what), field(std::move(f)) {}
  std::string field;
};

struct RunConfig {
  std::string experiment = "simulate";
  double H = 0.3;
  double T = 1.0;
  std::size_t n_steps = 256;
  std::size_t d = 1;
  std::size_t n_paths = 1000;
  std::uint64_t seed = 1;
  std::string drift_kind = "zero";
  std::map<std::string, double> drift_params;
  double p = std::numeric_limits<double>::infinity();
  double q = std::numeric_limits<double>::infinity();
  double box_lo = -3.0;
  double box_hi = 3.0;
  std::string generator = "volterra";
  std::vector<double> mollification_levels{0.5, 0.25, 0.125, 0.0625, 0.03125};
  std::string output_dir = "out";
  double quad_abs_tol = 1e-12;
  double quad_rel_tol = 1e-10;
  std::vector<double> checkpoint_times{0.25, 0.5, 0.75, 1.0};
  std::vector<double> x0{0.0};
  std::size_t step_refinements = 3;
  double p1 = 2.0;
  std::string check = "holder";
  std::size_t workers = 1;
  std::size_t batch_size = 64;
  bool write_cache = true;
  bool sweep = false;

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Shortest representation that parses back to the same double.
inline std::string fmt(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& key, const std::string& v) {
  if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
  double x = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc{} || r.ptr != v.data() + v.size() || !std::isfinite(x))
    throw SchemaError(key, "expected a number, got '" + v + "'");
  return x;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc{} || r.ptr != v.data() + v.size())
    throw SchemaError(key, "expected a non-negative integer, got '" + v + "'");
  return x;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw SchemaError(key, "expected true or false, got '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  return out;
}

inline std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

}  // namespace detail

inline const std::vector<std::string>& experiments() {
  static const std::vector<std::string> e{"simulate", "girsanov", "converge", "flow", "verify", "regimes"};
  return e;
}

inline const std::vector<std::string>& verify_checks() {
  static const std::vector<std::string> c{"holder",  "density", "product_moment", "simplex",     "taming",
                                          "kernel_bounds", "shuffle", "compactness", "flow"};
  return c;
}

// Keys accepted in files and as CLI flags, in serialization order. Drift parameters use "drift.<name>".
inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> k{
      "schema_version", "experiment",   "H",           "T",          "n_steps",      "d",
      "n_paths",        "seed",         "drift_kind",  "p",    "q",      "box_lo",
      "box_hi",         "generator",    "mollification_levels",      "output_dir",   "quad_abs_tol",
      "quad_rel_tol",   "checkpoint_times", "x0",      "step_refinements", "p1",   "check",
      "workers",        "batch_size",   "write_cache", "sweep"};
  return k;
}

inline void set_key(RunConfig& c, const std::string& key, const std::string& raw) {
  using namespace detail;
  const std::string v = trim(raw);
  if (key.rfind("drift.", 0) == 0) {
    c.drift_params[key.substr(6)] = parse_double(key, v);
    return;
  }
  if (key == "schema_version") {
    if (parse_uint(key, v) != static_cast<std::uint64_t>(schema_version))
      throw SchemaError(key, "unsupported version " + v + " (expected " + std::to_string(schema_version) + ")");
  } else if (key == "experiment") c.experiment = v;
  else if (key == "H") c.H = parse_double(key, v);
  else if (key == "T") c.T = parse_double(key, v);
  else if (key == "n_steps") c.n_steps = parse_uint(key, v);
  else if (key == "d") c.d = parse_uint(key, v);
  else if (key == "n_paths") c.n_paths = parse_uint(key, v);
  else if (key == "seed") c.seed = parse_uint(key, v);
  else if (key == "drift_kind") c.drift_kind = v;
  else if (key == "p") c.p = parse_double(key, v);
  else if (key == "q") c.q = parse_double(key, v);
  else if (key == "box_lo") c.box_lo = parse_double(key, v);
  else if (key == "box_hi") c.box_hi = parse_double(key, v);
  else if (key == "generator") c.generator = v;
  else if (key == "mollification_levels") c.mollification_levels = parse_list(key, v);
  else if (key == "output_dir") c.output_dir = v;
  else if (key == "quad_abs_tol") c.quad_abs_tol = parse_double(key, v);
  else if (key == "quad_rel_tol") c.quad_rel_tol = parse_double(key, v);
  else if (key == "checkpoint_times") c.checkpoint_times = parse_list(key, v);
  else if (key == "x0") c.x0 = parse_list(key, v);
  else if (key == "step_refinements") c.step_refinements = parse_uint(key, v);
  else if (key == "p1") c.p1 = parse_double(key, v);
  else if (key == "check") c.check = v;
  else if (key == "workers") c.workers = parse_uint(key, v);
  else if (key == "batch_size") c.batch_size = parse_uint(key, v);
  else if (key == "write_cache") c.write_cache = parse_bool(key, v);
  else if (key == "sweep") c.sweep = parse_bool(key, v);
  else throw SchemaError(key, "unknown field");
}

// Field-level checks that do not need the regimes module.
inline void validate(const RunConfig& c) {
  auto in = [](const std::string& v, const std::vector<std::string>& set) {
    for (const auto& s : set)
      if (s == v) return true;
    return false;
  };
  if (!in(c.experiment, experiments())) throw SchemaError("experiment", "unknown experiment '" + c.experiment + "'");
  if (!(c.H > 0.0 && c.H < 1.0)) throw SchemaError("H", "must lie in (0,1)");
  if (!(c.T > 0.0 && std::isfinite(c.T))) throw SchemaError("T", "must be positive");
  if (c.n_steps < 1) throw SchemaError("n_steps", "must be >= 1");
  if (c.d < 1 || c.d > 3) throw SchemaError("d", "must be 1, 2 or 3");
  if (c.n_paths < 1) throw SchemaError("n_paths", "must be >= 1");
  if (!(c.box_lo < c.box_hi)) throw SchemaError("box_lo", "must be below box_hi");
  if (!(c.p >= 1.0)) throw SchemaError("p", "must lie in [1, inf]");
  if (!(c.q >= 1.0)) throw SchemaError("q", "must lie in [1, inf]");
  const auto& presets = drift::preset_defaults();
  const auto it = presets.find(c.drift_kind);
  if (it == presets.end()) throw SchemaError("drift_kind", "unknown drift kind '" + c.drift_kind + "'");
  for (const auto& [k, v] : c.drift_params)
    if (!it->second.count(k)) throw SchemaError("drift." + k, "not a parameter of '" + c.drift_kind + "'");
  try {
    (void)fbm::generator_from_string(c.generator);
  } catch (const std::invalid_argument&) {
    throw SchemaError("generator", "unknown generator '" + c.generator + "'");
  }
  if (c.mollification_levels.empty()) throw SchemaError("mollification_levels", "must not be empty");
  for (std::size_t k = 0; k < c.mollification_levels.size(); ++k) {
    if (!(c.mollification_levels[k] > 0.0)) throw SchemaError("mollification_levels", "levels must be positive");
    if (k && !(c.mollification_levels[k] < c.mollification_levels[k - 1]))
      throw SchemaError("mollification_levels", "levels must decrease");
  }
  for (double t : c.checkpoint_times)
    if (!(t >= 0.0 && t <= c.T)) throw SchemaError("checkpoint_times", "times must lie in [0,T]");
  if (c.x0.size() != c.d) throw SchemaError("x0", "needs exactly d components");
  if (!(c.p1 >= 1.0)) throw SchemaError("p1", "must be >= 1");
  if (!(c.quad_abs_tol > 0.0) || !(c.quad_rel_tol > 0.0)) throw SchemaError("quad_abs_tol", "tolerances must be positive");
  if (!in(c.check, verify_checks())) throw SchemaError("check", "unknown check '" + c.check + "'");
  if (c.workers < 1) throw SchemaError("workers", "must be >= 1");
  if (c.batch_size < 1) throw SchemaError("batch_size", "must be >= 1");
  if (c.experiment == "girsanov") {
    if (c.generator != "volterra") throw SchemaError("generator", "girsanov needs the volterra generator");
    if (!(c.H < 0.5)) throw SchemaError("H", "girsanov needs H < 1/2");
  }
}

// Flat "key = value" text; '#' starts a comment.
inline RunConfig parse_config(std::istream& is, RunConfig c = {}) {
  std::string line;
  bool versioned = false;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw SchemaError("line " + std::to_string(lineno), "expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    set_key(c, key, line.substr(eq + 1));
    versioned |= key == "schema_version";
  }
  if (!versioned) throw SchemaError("schema_version", "missing");
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw SchemaError("config", "cannot open '" + path + "'");
  return parse_config(is);
}

inline std::string serialize(const RunConfig& c) {
  using detail::fmt;
  std::ostringstream os;
  os << "schema_version = " << schema_version << '\n'
     << "experiment = " << c.experiment << '\n'
     << "H = " << fmt(c.H) << '\n'
     << "T = " << fmt(c.T) << '\n'
     << "n_steps = " << c.n_steps << '\n'
     << "d = " << c.d << '\n'
     << "n_paths = " << c.n_paths << '\n'
     << "seed = " << c.seed << '\n'
     << "drift_kind = " << c.drift_kind << '\n';
  for (const auto& [k, v] : c.drift_params) os << "drift." << k << " = " << fmt(v) << '\n';
  os << "p = " << fmt(c.p) << '\n'
     << "q = " << fmt(c.q) << '\n'
     << "box_lo = " << fmt(c.box_lo) << '\n'
     << "box_hi = " << fmt(c.box_hi) << '\n'
     << "generator = " << c.generator << '\n'
     << "mollification_levels = " << detail::fmt_list(c.mollification_levels) << '\n'
     << "output_dir = " << c.output_dir << '\n'
     << "quad_abs_tol = " << fmt(c.quad_abs_tol) << '\n'
     << "quad_rel_tol = " << fmt(c.quad_rel_tol) << '\n'
     << "checkpoint_times = " << detail::fmt_list(c.checkpoint_times) << '\n'
     << "x0 = " << detail::fmt_list(c.x0) << '\n'
     << "step_refinements = " << c.step_refinements << '\n'
     << "p1 = " << fmt(c.p1) << '\n'
     << "check = " << c.check << '\n'
     << "workers = " << c.workers << '\n'
     << "batch_size = " << c.batch_size << '\n'
     << "write_cache = " << (c.write_cache ? "true" : "false") << '\n'
     << "sweep = " << (c.sweep ? "true" : "false") << '\n';
  return os.str();
}

// Layering: file < FRACSDE_OUT < explicit overrides (CLI flags).
inline RunConfig resolve(RunConfig c, const std::vector<std::pair<std::string, std::string>>& overrides) {
  if (const char* out = std::getenv("FRACSDE_OUT"); out && *out) c.output_dir = out;
  for (const auto& [k, v] : overrides) set_key(c, k, v);
  return c;
}

}  // namespace fracsde::io
