#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "fsiplate/config.hpp"
#include "fsiplate/experiments.hpp"
#include "fsiplate/version.hpp"

namespace fsiplate {

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("emit_results: cannot open '" + path.string() +
                             "' for writing");
  return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

// Short scientific / fixed formats for the human-readable tables; '-'
// stands in for the absent first-level rate.
inline std::string sci(double v) {
  if (std::isnan(v)) return "-";
  std::ostringstream os;
  os << std::scientific << std::setprecision(3) << v;
  return os.str();
}
inline std::string fix2(double v) {
  if (std::isnan(v)) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

}  // namespace detail

inline const std::vector<std::string>& experiment_csv_columns() {
  static const std::vector<std::string> cols = {
      "level",     "refinement", "dt",        "u_l2",      "u_h1",
      "p_l2",      "w_l2",       "w_h1",      "z_l2",      "z_h1",
      "rate_u_l2", "rate_u_h1",  "rate_p_l2", "rate_w_l2", "rate_w_h1",
      "rate_z_l2", "rate_z_h1",  "wall_seconds", "steps",  "mean_iterations",
      "max_iterations"};
  return cols;
}

inline void write_experiment_csv(const std::filesystem::path& path,
                                 const std::vector<ExperimentRecord>& recs) {
  auto out = detail::open_output(path);
  const auto& cols = experiment_csv_columns();
  for (size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  const auto& f = detail::format_full;
  for (const auto& r : recs) {
    out << r.level << ',' << f(r.refinement) << ',' << f(r.dt) << ','
        << f(r.errors.u_l2) << ',' << f(r.errors.u_h1) << ',' << f(r.errors.p_l2)
        << ',' << f(r.errors.w_l2) << ',' << f(r.errors.w_h1) << ','
        << f(r.errors.z_l2) << ',' << f(r.errors.z_h1) << ',' << f(r.rates.u_l2)
        << ',' << f(r.rates.u_h1) << ',' << f(r.rates.p_l2) << ','
        << f(r.rates.w_l2) << ',' << f(r.rates.w_h1) << ',' << f(r.rates.z_l2)
        << ',' << f(r.rates.z_h1) << ',' << f(r.wall_seconds) << ',' << r.steps
        << ',' << f(r.mean_iterations) << ',' << r.max_iterations << "\n";
  }
}

inline std::vector<ExperimentRecord> read_experiment_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("read_experiment_csv: cannot open '" +
                             path.string() + "'");
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("read_experiment_csv: empty file");
  if (detail::split_csv_line(line) != experiment_csv_columns())
    throw std::runtime_error("read_experiment_csv: unexpected header");
  std::vector<ExperimentRecord> recs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto v = detail::split_csv_line(line);
    if (v.size() != experiment_csv_columns().size())
      throw std::runtime_error("read_experiment_csv: malformed row");
    ExperimentRecord r;
    size_t i = 0;
    r.level = std::stoi(v[i++]);
    r.refinement = std::stod(v[i++]);
    r.dt = std::stod(v[i++]);
    r.errors.u_l2 = std::stod(v[i++]);
    r.errors.u_h1 = std::stod(v[i++]);
    r.errors.p_l2 = std::stod(v[i++]);
    r.errors.w_l2 = std::stod(v[i++]);
    r.errors.w_h1 = std::stod(v[i++]);
    r.errors.z_l2 = std::stod(v[i++]);
    r.errors.z_h1 = std::stod(v[i++]);
    r.rates.u_l2 = std::stod(v[i++]);
    r.rates.u_h1 = std::stod(v[i++]);
    r.rates.p_l2 = std::stod(v[i++]);
    r.rates.w_l2 = std::stod(v[i++]);
    r.rates.w_h1 = std::stod(v[i++]);
    r.rates.z_l2 = std::stod(v[i++]);
    r.rates.z_h1 = std::stod(v[i++]);
    r.wall_seconds = std::stod(v[i++]);
    r.steps = std::stoll(v[i++]);
    r.mean_iterations = std::stod(v[i++]);
    r.max_iterations = std::stoi(v[i++]);
    recs.push_back(r);
  }
  return recs;
}

inline void write_vibration_csv(const std::filesystem::path& path,
                                const std::vector<VibrationRecord>& recs) {
  auto out = detail::open_output(path);
  out << "step,time,max_deflection,fluid_kinetic,plate_kinetic,rotational,"
         "elastic,total,interface_mismatch,wdot_integral\n";
  const auto& f = detail::format_full;
  for (const auto& r : recs)
    out << r.step << ',' << f(r.time) << ',' << f(r.max_deflection) << ','
        << f(r.fluid_kinetic) << ',' << f(r.plate_kinetic) << ','
        << f(r.rotational) << ',' << f(r.elastic) << ',' << f(r.total) << ','
        << f(r.interface_mismatch) << ',' << f(r.wdot_integral) << "\n";
}

inline void write_infsup_csv(const std::filesystem::path& path,
                             const std::vector<InfSupRecord>& recs) {
  auto out = detail::open_output(path);
  out << "level,h,beta\n";
  const auto& f = detail::format_full;
  for (const auto& r : recs)
    out << r.level << ',' << f(r.h) << ',' << f(r.beta) << "\n";
}

// Rate-table layout: one row per refinement, error/rate column pairs.
inline std::string format_rate_table(const std::vector<ExperimentRecord>& recs,
                                     const std::string& title) {
  std::ostringstream os;
  os << title << "\n";
  os << std::left << std::setw(12) << "step" << std::setw(11) << "u L2"
     << std::setw(7) << "rate" << std::setw(11) << "u H1" << std::setw(7)
     << "rate" << std::setw(11) << "p L2" << std::setw(7) << "rate"
     << std::setw(11) << "w L2" << std::setw(7) << "rate" << std::setw(11)
     << "w H1" << std::setw(7) << "rate" << std::setw(11) << "z L2"
     << std::setw(7) << "rate" << std::setw(11) << "z H1" << std::setw(7)
     << "rate" << "\n";
  for (const auto& r : recs) {
    std::ostringstream step;
    step << std::setprecision(6) << r.refinement;
    os << std::left << std::setw(12) << step.str() << std::setw(11)
       << detail::sci(r.errors.u_l2) << std::setw(7) << detail::fix2(r.rates.u_l2)
       << std::setw(11) << detail::sci(r.errors.u_h1) << std::setw(7)
       << detail::fix2(r.rates.u_h1) << std::setw(11) << detail::sci(r.errors.p_l2)
       << std::setw(7) << detail::fix2(r.rates.p_l2) << std::setw(11)
       << detail::sci(r.errors.w_l2) << std::setw(7) << detail::fix2(r.rates.w_l2)
       << std::setw(11) << detail::sci(r.errors.w_h1) << std::setw(7)
       << detail::fix2(r.rates.w_h1) << std::setw(11) << detail::sci(r.errors.z_l2)
       << std::setw(7) << detail::fix2(r.rates.z_l2) << std::setw(11)
       << detail::sci(r.errors.z_h1) << std::setw(7) << detail::fix2(r.rates.z_h1)
       << "\n";
  }
  return os.str();
}

inline void write_manifest(const std::filesystem::path& path,
                           const RunConfig& config) {
  auto out = detail::open_output(path);
  out << "# run manifest\n";
  out << "solver_version = " << kVersion << "\n";
  out << "git_sha = " << kGitSha << "\n";
  out << "\n" << emit_config(config);
}

// Persist one experiment's outputs under `dir`; returns the files written.
inline std::vector<std::filesystem::path> emit_results(
    const std::vector<ExperimentRecord>& recs, const std::filesystem::path& dir,
    const RunConfig& config, const std::string& name) {
  if (recs.empty()) throw std::invalid_argument("emit_results: no records");
  const auto csv = dir / (name + ".csv");
  const auto table = dir / (name + "_rates.txt");
  const auto manifest = dir / "manifest.txt";
  write_experiment_csv(csv, recs);
  {
    auto out = detail::open_output(table);
    out << format_rate_table(recs, "Errors and observed rates (" + name + ")");
  }
  write_manifest(manifest, config);
  return {csv, table, manifest};
}

inline std::vector<std::filesystem::path> emit_results(
    const std::vector<VibrationRecord>& recs, const std::filesystem::path& dir,
    const RunConfig& config) {
  if (recs.empty()) throw std::invalid_argument("emit_results: no records");
  const auto csv = dir / "vibration.csv";
  const auto manifest = dir / "manifest.txt";
  write_vibration_csv(csv, recs);
  write_manifest(manifest, config);
  return {csv, manifest};
}

inline std::vector<std::filesystem::path> emit_results(
    const std::vector<InfSupRecord>& recs, const std::filesystem::path& dir,
    const RunConfig& config) {
  if (recs.empty()) throw std::invalid_argument("emit_results: no records");
  const auto csv = dir / "infsup.csv";
  const auto manifest = dir / "manifest.txt";
  write_infsup_csv(csv, recs);
  write_manifest(manifest, config);
  return {csv, manifest};
}

}  // namespace fsiplate
