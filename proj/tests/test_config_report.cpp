#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fsiplate/config.hpp"
#include "fsiplate/experiments.hpp"
#include "fsiplate/report.hpp"

using namespace fsiplate;

namespace {

bool same_double(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

bool same_errors(const VariableErrors& a, const VariableErrors& b) {
  return same_double(a.u_l2, b.u_l2) && same_double(a.u_h1, b.u_h1) &&
         same_double(a.p_l2, b.p_l2) && same_double(a.w_l2, b.w_l2) &&
         same_double(a.w_h1, b.w_h1) && same_double(a.z_l2, b.z_l2) &&
         same_double(a.z_h1, b.z_h1);
}

std::filesystem::path temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("fsiplate_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("empty config document yields all defaults") {
  const RunConfig c = parse_config("");
  CHECK(c.kind == ExperimentKind::ConvergeSpace);
  CHECK(c.levels == std::vector<int>{2, 4, 8});
  CHECK(c.dt == 1e-4);
  CHECK(c.t_final == 1e-3);
  CHECK(c.params == PhysicalParams{});
  CHECK(c.coupling.mode == CouplingMode::Partitioned);
  CHECK(c.coupling.theta == 1.0);
  CHECK(c.coupling.tolerance == 1e-8);
  CHECK(c.out_dir == "results");
}

TEST_CASE("values, comments and whitespace parse") {
  const std::string doc = R"(
# temporal study
experiment = converge-time
omega = 1e5    # plate inertia scaling
dts = 0.5, 0.25, 0.125
levels = 2,4
mode = monolithic
theta = 0.5
t_final = 1
)";
  const RunConfig c = parse_config(doc);
  CHECK(c.kind == ExperimentKind::ConvergeTime);
  CHECK(c.params.omega == 1e5);
  CHECK(c.dts == std::vector<double>{0.5, 0.25, 0.125});
  CHECK(c.levels == std::vector<int>{2, 4});
  CHECK(c.coupling.mode == CouplingMode::Monolithic);
  CHECK(c.coupling.theta == 0.5);
  CHECK(c.t_final == 1.0);
}

TEST_CASE("bad configs raise ConfigurationError naming the key") {
  const auto key_of = [](const std::string& doc) {
    try {
      parse_config(doc);
    } catch (const ConfigurationError& e) {
      return e.key;
    }
    return std::string("(no error)");
  };
  CHECK(key_of("nu_f = -1") == "nu_f");
  CHECK(key_of("nu_f = banana") == "nu_f");
  CHECK(key_of("frobnicate = 1") == "frobnicate");
  CHECK(key_of("theta = 1.5") == "theta");
  CHECK(key_of("mode = sideways") == "mode");
  CHECK(key_of("experiment = dance") == "experiment");
  CHECK(key_of("levels = 0") == "levels");
  CHECK(key_of("just some words") == "just some words");
}

TEST_CASE("emit/parse round-trip is the identity") {
  RunConfig c;
  c.kind = ExperimentKind::Vibrate;
  c.levels = {3, 6, 12};
  c.dts = {0.1, 0.05};
  c.dt = 1.0 / 3.0;  // not representable in short decimal
  c.t_final = 0.7;
  c.params.rho_f = 1.25;
  c.params.nu_f = 0.03;
  c.params.rho_p = 2.7;
  c.params.rho_rot = 0.0;
  c.params.flexural_rigidity = 6.4527;
  c.params.omega = 1e5;
  c.coupling.mode = CouplingMode::Monolithic;
  c.coupling.theta = 0.75;
  c.coupling.tolerance = 1e-10;
  c.coupling.max_iterations = 33;
  c.out_dir = "runs/vib";
  c.seed = 1234;
  c.max_level_override = 16;
  CHECK(parse_config(emit_config(c)) == c);
  // And defaults round-trip too.
  CHECK(parse_config(emit_config(RunConfig{})) == RunConfig{});
}

TEST_CASE("max level override truncates or extends the sweep") {
  RunConfig c;
  c.levels = {2, 4, 8};
  c.max_level_override = 16;
  CHECK(c.effective_levels() == std::vector<int>{2, 4, 8, 16});
  c.max_level_override = 4;
  CHECK(c.effective_levels() == std::vector<int>{2, 4});
  c.max_level_override = 0;
  CHECK(c.effective_levels() == std::vector<int>{2, 4, 8});
}

TEST_CASE("experiment CSV round-trips to full precision") {
  std::vector<ExperimentRecord> recs(3);
  for (int i = 0; i < 3; ++i) {
    auto& r = recs[i];
    r.level = 2 << i;
    r.refinement = 1.0 / r.level;
    r.dt = 1e-4;
    r.errors = {1.234567890123456e-3 / (i + 1), 2.3e-2 / (i + 1), 3.7e-4 / (i + 1),
                4.1e-5 / (i + 1),               5.9e-4 / (i + 1), 6.2e-3 / (i + 1),
                7.7e-2 / (i + 1)};
    r.wall_seconds = 0.125 * (i + 1);
    r.steps = 10;
    r.mean_iterations = 3.5;
    r.max_iterations = 4 + i;
  }
  // Rates: NaN on the first row, populated afterwards (3 rows -> 2 rate rows).
  recs[0].rates = detail::nan_errors();
  recs[1].rates = {2.1, 1.4, 2.0, 2.6, 1.7, 2.4, 1.3};
  recs[2].rates = {2.2, 1.5, 2.1, 2.7, 1.8, 2.5, 1.4};

  const auto dir = temp_dir("csv");
  const auto path = dir / "convergence.csv";
  write_experiment_csv(path, recs);
  const auto back = read_experiment_csv(path);
  REQUIRE(back.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(back[i].level == recs[i].level);
    CHECK(back[i].refinement == recs[i].refinement);
    CHECK(back[i].dt == recs[i].dt);
    CHECK(same_errors(back[i].errors, recs[i].errors));
    CHECK(same_errors(back[i].rates, recs[i].rates));
    CHECK(back[i].wall_seconds == recs[i].wall_seconds);
    CHECK(back[i].steps == recs[i].steps);
    CHECK(back[i].mean_iterations == recs[i].mean_iterations);
    CHECK(back[i].max_iterations == recs[i].max_iterations);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("emit_results writes CSV, rate table and manifest") {
  std::vector<ExperimentRecord> recs(2);
  recs[0].level = 2;
  recs[0].refinement = 0.5;
  recs[0].errors = {1e-2, 2e-2, 3e-3, 4e-4, 5e-3, 6e-3, 7e-2};
  recs[0].rates = detail::nan_errors();
  recs[1].level = 4;
  recs[1].refinement = 0.25;
  recs[1].errors = {2.5e-3, 9e-3, 8e-4, 6e-5, 1.6e-3, 1.5e-3, 3e-2};
  recs[1].rates = {2.0, 1.15, 1.9, 2.7, 1.6, 2.0, 1.2};

  const auto dir = temp_dir("emit");
  RunConfig cfg;
  const auto files = emit_results(recs, dir, cfg, "convergence");
  REQUIRE(files.size() == 3);
  for (const auto& f : files) CHECK(std::filesystem::exists(f));

  // The rate table mentions every variable and one row per level.
  std::ifstream table(dir / "convergence_rates.txt");
  std::string text((std::istreambuf_iterator<char>(table)),
                   std::istreambuf_iterator<char>());
  CHECK(text.find("u L2") != std::string::npos);
  CHECK(text.find("z H1") != std::string::npos);
  CHECK(text.find("0.5") != std::string::npos);
  CHECK(text.find("0.25") != std::string::npos);

  // The manifest reproduces the full configuration.
  std::ifstream manifest(dir / "manifest.txt");
  std::string mtext((std::istreambuf_iterator<char>(manifest)),
                    std::istreambuf_iterator<char>());
  CHECK(mtext.find("solver_version") != std::string::npos);
  CHECK(mtext.find("git_sha") != std::string::npos);
  const auto config_pos = mtext.find("experiment = converge-space");
  REQUIRE(config_pos != std::string::npos);
  CHECK(parse_config(mtext.substr(config_pos)) == cfg);
  std::filesystem::remove_all(dir);
}

TEST_CASE("vibration series emits a monotone time column") {
  std::vector<VibrationRecord> recs(4);
  for (int i = 0; i < 4; ++i) {
    recs[i].step = i;
    recs[i].time = 1e-3 * i;
    recs[i].total = 1.0 / (i + 1);
  }
  const auto dir = temp_dir("vib");
  RunConfig cfg;
  cfg.kind = ExperimentKind::Vibrate;
  emit_results(recs, dir, cfg);
  std::ifstream in(dir / "vibration.csv");
  std::string line;
  REQUIRE(std::getline(in, line));  // header
  double prev = -1.0;
  int rows = 0;
  while (std::getline(in, line)) {
    const auto fields = detail::split_csv_line(line);
    REQUIRE(fields.size() == 10);
    const double t = std::stod(fields[1]);
    CHECK(t > prev);
    prev = t;
    ++rows;
  }
  CHECK(rows == 4);
  std::filesystem::remove_all(dir);
}

TEST_CASE("records are internally consistent end to end") {
  // A tiny real run: each record's rate entries must equal observed_rate
  // applied to its own error columns.
  const auto recs =
      run_space_convergence({2, 4}, 1e-3, 2e-3, PhysicalParams{}, CouplingMode::Monolithic);
  REQUIRE(recs.size() == 2);
  CHECK(std::isnan(recs[0].rates.u_l2));
  const std::vector<double> hs = {recs[0].refinement, recs[1].refinement};
  CHECK(recs[1].rates.u_l2 ==
        observed_rate({recs[0].errors.u_l2, recs[1].errors.u_l2}, hs).front());
  CHECK(recs[1].rates.w_h1 ==
        observed_rate({recs[0].errors.w_h1, recs[1].errors.w_h1}, hs).front());
  CHECK(recs[1].rates.p_l2 ==
        observed_rate({recs[0].errors.p_l2, recs[1].errors.p_l2}, hs).front());
  for (const auto& r : recs) {
    CHECK(r.steps == 2);
    CHECK(r.wall_seconds > 0.0);
    CHECK(r.errors.u_l2 > 0.0);
  }
  // Unwritable output directory raises an io error.
  std::vector<ExperimentRecord> one(1);
  one[0].rates = detail::nan_errors();
  CHECK_THROWS_AS(write_experiment_csv("/proc/nope/convergence.csv", one),
                  std::runtime_error);
}
