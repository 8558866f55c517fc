#pragma once

#include <cctype>
#include <charconv>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fsiplate/params.hpp"
#include "fsiplate/types.hpp"

namespace fsiplate {

enum class ExperimentKind { ConvergeSpace, ConvergeTime, Vibrate, InfSup, SingleSolve };

// One run of the command-line driver: which experiment, at which
// resolutions, with which physics. Parsed from a key = value document
// (one pair per line, '#' starts a comment); every key has a default, so
// the empty document is a valid spatial-convergence run.
struct RunConfig {
  ExperimentKind kind = ExperimentKind::ConvergeSpace;
  std::vector<int> levels = {2, 4, 8};             // mesh subdivisions
  std::vector<double> dts = {0.5, 0.25, 0.125};    // temporal sweep steps
  double dt = 1e-4;
  double t_final = 1e-3;
  PhysicalParams params;
  CouplingConfig coupling;
  std::string out_dir = "results";
  unsigned int seed = 0;
  int max_level_override = 0;  // 0 keeps `levels`; else clamp/extend to it

  bool operator==(const RunConfig&) const = default;

  // Levels after applying the override: entries above the cap are dropped
  // and the sweep is extended by doubling up to the cap.
  std::vector<int> effective_levels() const {
    if (max_level_override <= 0) return levels;
    std::vector<int> out;
    for (int n : levels)
      if (n <= max_level_override) out.push_back(n);
    while (!out.empty() && 2 * out.back() <= max_level_override)
      out.push_back(2 * out.back());
    if (out.empty()) out.push_back(max_level_override);
    return out;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline double parse_double_value(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ConfigurationError(key, "expected a number, got '" + v + "'");
  }
}

inline long parse_int_value(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ConfigurationError(key, "expected an integer, got '" + v + "'");
  }
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> items;
  std::string cur;
  for (char c : v) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) items.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) items.push_back(cur);
  return items;
}

inline void require_positive(const std::string& key, double v) {
  if (!(v > 0.0)) throw ConfigurationError(key, "must be > 0");
}

// Shortest decimal that reparses to the same double (17 significant
// digits suffice for IEEE binary64).
inline std::string format_full(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace detail

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::ConvergeSpace: return "converge-space";
    case ExperimentKind::ConvergeTime: return "converge-time";
    case ExperimentKind::Vibrate: return "vibrate";
    case ExperimentKind::InfSup: return "infsup";
    case ExperimentKind::SingleSolve: return "solve";
  }
  throw std::logic_error("to_string: unknown experiment kind");
}

inline std::string to_string(CouplingMode m) {
  return m == CouplingMode::Partitioned ? "partitioned" : "monolithic";
}

inline ExperimentKind experiment_kind_from_string(const std::string& v) {
  if (v == "converge-space") return ExperimentKind::ConvergeSpace;
  if (v == "converge-time") return ExperimentKind::ConvergeTime;
  if (v == "vibrate") return ExperimentKind::Vibrate;
  if (v == "infsup") return ExperimentKind::InfSup;
  if (v == "solve" || v == "single-solve") return ExperimentKind::SingleSolve;
  throw ConfigurationError(
      "experiment",
      "unknown experiment '" + v +
          "' (expected converge-space | converge-time | vibrate | infsup | solve)");
}

inline CouplingMode coupling_mode_from_string(const std::string& key,
                                              const std::string& v) {
  if (v == "partitioned") return CouplingMode::Partitioned;
  if (v == "monolithic") return CouplingMode::Monolithic;
  throw ConfigurationError(key, "expected 'partitioned' or 'monolithic', got '" + v + "'");
}

// Parse a key = value document. Unknown keys, malformed values and
// constraint violations all raise ConfigurationError naming the key.
inline RunConfig parse_config(const std::string& source) {
  RunConfig c;
  std::istringstream in(source);
  std::string raw;
  while (std::getline(in, raw)) {
    if (const auto hash = raw.find('#'); hash != std::string::npos)
      raw.erase(hash);
    const std::string line = detail::trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigurationError(line, "expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigurationError(line, "empty key");

    if (key == "experiment") {
      c.kind = experiment_kind_from_string(value);
    } else if (key == "levels") {
      std::vector<int> levels;
      for (const auto& item : detail::split_list(value)) {
        const long n = detail::parse_int_value(key, item);
        if (n < 1) throw ConfigurationError(key, "levels must be >= 1");
        levels.push_back(static_cast<int>(n));
      }
      if (levels.empty()) throw ConfigurationError(key, "needs at least one level");
      c.levels = std::move(levels);
    } else if (key == "dts") {
      std::vector<double> dts;
      for (const auto& item : detail::split_list(value)) {
        const double v = detail::parse_double_value(key, item);
        detail::require_positive(key, v);
        dts.push_back(v);
      }
      if (dts.empty()) throw ConfigurationError(key, "needs at least one step");
      c.dts = std::move(dts);
    } else if (key == "dt") {
      c.dt = detail::parse_double_value(key, value);
      detail::require_positive(key, c.dt);
    } else if (key == "t_final") {
      c.t_final = detail::parse_double_value(key, value);
      detail::require_positive(key, c.t_final);
    } else if (key == "rho_f") {
      c.params.rho_f = detail::parse_double_value(key, value);
      detail::require_positive(key, c.params.rho_f);
    } else if (key == "nu_f") {
      c.params.nu_f = detail::parse_double_value(key, value);
      detail::require_positive(key, c.params.nu_f);
    } else if (key == "rho_p") {
      c.params.rho_p = detail::parse_double_value(key, value);
      detail::require_positive(key, c.params.rho_p);
    } else if (key == "rho_rot") {
      c.params.rho_rot = detail::parse_double_value(key, value);
      if (c.params.rho_rot < 0.0) throw ConfigurationError(key, "must be >= 0");
    } else if (key == "flexural_rigidity") {
      c.params.flexural_rigidity = detail::parse_double_value(key, value);
      detail::require_positive(key, c.params.flexural_rigidity);
    } else if (key == "omega") {
      c.params.omega = detail::parse_double_value(key, value);
      detail::require_positive(key, c.params.omega);
    } else if (key == "mode") {
      c.coupling.mode = coupling_mode_from_string(key, value);
    } else if (key == "theta") {
      c.coupling.theta = detail::parse_double_value(key, value);
      if (!(c.coupling.theta > 0.0) || c.coupling.theta > 1.0)
        throw ConfigurationError(key, "must be in (0, 1]");
    } else if (key == "tolerance") {
      c.coupling.tolerance = detail::parse_double_value(key, value);
      detail::require_positive(key, c.coupling.tolerance);
    } else if (key == "max_iterations") {
      const long n = detail::parse_int_value(key, value);
      if (n < 1) throw ConfigurationError(key, "must be >= 1");
      c.coupling.max_iterations = static_cast<int>(n);
    } else if (key == "out_dir") {
      if (value.empty()) throw ConfigurationError(key, "must be non-empty");
      c.out_dir = value;
    } else if (key == "seed") {
      const long n = detail::parse_int_value(key, value);
      if (n < 0) throw ConfigurationError(key, "must be >= 0");
      c.seed = static_cast<unsigned int>(n);
    } else if (key == "max_level_override") {
      const long n = detail::parse_int_value(key, value);
      if (n < 0) throw ConfigurationError(key, "must be >= 0");
      c.max_level_override = static_cast<int>(n);
    } else {
      throw ConfigurationError(key, "unknown key");
    }
  }
  try {
    c.params.validate();
    c.coupling.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigurationError("(config)", e.what());
  }
  return c;
}

// Serialize every field; parse_config(emit_config(c)) == c.
inline std::string emit_config(const RunConfig& c) {
  std::ostringstream os;
  os << "experiment = " << to_string(c.kind) << "\n";
  os << "levels =";
  for (size_t i = 0; i < c.levels.size(); ++i)
    os << (i ? "," : " ") << c.levels[i];
  os << "\n";
  os << "dts =";
  for (size_t i = 0; i < c.dts.size(); ++i)
    os << (i ? "," : " ") << detail::format_full(c.dts[i]);
  os << "\n";
  os << "dt = " << detail::format_full(c.dt) << "\n";
  os << "t_final = " << detail::format_full(c.t_final) << "\n";
  os << "rho_f = " << detail::format_full(c.params.rho_f) << "\n";
  os << "nu_f = " << detail::format_full(c.params.nu_f) << "\n";
  os << "rho_p = " << detail::format_full(c.params.rho_p) << "\n";
  os << "rho_rot = " << detail::format_full(c.params.rho_rot) << "\n";
  os << "flexural_rigidity = " << detail::format_full(c.params.flexural_rigidity) << "\n";
  os << "omega = " << detail::format_full(c.params.omega) << "\n";
  os << "mode = " << to_string(c.coupling.mode) << "\n";
  os << "theta = " << detail::format_full(c.coupling.theta) << "\n";
  os << "tolerance = " << detail::format_full(c.coupling.tolerance) << "\n";
  os << "max_iterations = " << c.coupling.max_iterations << "\n";
  os << "out_dir = " << c.out_dir << "\n";
  os << "seed = " << c.seed << "\n";
  os << "max_level_override = " << c.max_level_override << "\n";
  return os.str();
}

}  // namespace fsiplate
