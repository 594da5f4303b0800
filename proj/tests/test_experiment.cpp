#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"

#include "erm/experiment.hpp"

using namespace erm;
namespace fs = std::filesystem;

namespace {

fs::path case_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "erm_experiment_tests" / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const std::string& text) {
  return text.substr(0, text.find('\n'));
}

const Record& find_record(const ResultManifest& man, const std::string& name,
                          int n = -1) {
  for (const auto& r : man.records)
    if (r.name == name && (n < 0 || r.n == n)) return r;
  FAIL("no record named ", name);
  static Record dummy;
  return dummy;
}

ExperimentConfig base_config(Command cmd) {
  ExperimentConfig c;
  c.command = cmd;
  c.kernel.name = "box";
  c.kernel.d = 1;
  c.kernel.r = 0.25;
  c.master_seed = 77;
  return c;
}

}  // namespace

TEST_CASE("command names round-trip through the lookup") {
  const char* names[] = {"spectrum",          "measure-compare",
                         "moment-convergence", "density-sweep",
                         "poisson-bound",      "eigenvector-residual",
                         "correlations",       "level-set"};
  for (const char* n : names) {
    auto cmd = command_from_name(n);
    REQUIRE(cmd.has_value());
    CHECK(std::string(command_name(*cmd)) == n);
  }
  CHECK(!command_from_name("spectra").has_value());
}

TEST_CASE("config parsing reports the offending field") {
  SUBCASE("not JSON at all") {
    CHECK_THROWS_WITH_AS(parse_config("{"),
                         doctest::Contains("not valid JSON"),
                         std::runtime_error);
  }
  SUBCASE("unknown top-level field") {
    CHECK_THROWS_WITH_AS(parse_config(R"({"reps": 3})"),
                         doctest::Contains("reps"), std::runtime_error);
  }
  SUBCASE("unknown command") {
    CHECK_THROWS_WITH_AS(parse_config(R"({"command": "specter"})"),
                         doctest::Contains("command"), std::runtime_error);
  }
  SUBCASE("wrong type inside kernel") {
    CHECK_THROWS_WITH_AS(
        parse_config(R"({"kernel": {"name": "box", "r": "wide"}})"),
        doctest::Contains("kernel.r"), std::runtime_error);
  }
  SUBCASE("p_norms accepts numbers and the string inf") {
    ExperimentConfig c = parse_config(R"({"p_norms": [2, "inf"]})");
    REQUIRE(c.p_norms.size() == 2);
    CHECK(c.p_norms[0] == 2.0);
    CHECK(std::isinf(c.p_norms[1]));
    CHECK_THROWS_WITH_AS(parse_config(R"({"p_norms": ["sup"]})"),
                         doctest::Contains("p_norms[0]"), std::runtime_error);
  }
  SUBCASE("full document round-trips the basics") {
    ExperimentConfig c = parse_config(R"({
      "command": "moment-convergence",
      "kernel": {"name": "box", "d": 1, "r": 0.25},
      "model": {"type": "scaled", "gamma": 1.5, "boundary": "periodic"},
      "n_list": [100, 200],
      "realizations": 7,
      "master_seed": 424242,
      "moments": [1, 2]
    })");
    CHECK(c.command == Command::MomentConvergence);
    CHECK(c.command_from_file);
    CHECK(c.scaled_model);
    CHECK(c.gamma == 1.5);
    CHECK(c.boundary == BoundaryRule::PeriodicExtension);
    CHECK(c.n_list == std::vector<int>{100, 200});
    CHECK(c.realizations == 7);
    CHECK(c.master_seed == 424242);
  }
}

TEST_CASE("validation diagnostics name the field and the constraint") {
  SUBCASE("a sound config has no diagnostics") {
    ExperimentConfig c = base_config(Command::Spectrum);
    c.n_list = {50};
    c.realizations = 2;
    CHECK(validate(c).empty());
  }
  SUBCASE("zero realizations") {
    ExperimentConfig c = base_config(Command::Spectrum);
    c.realizations = 0;
    auto diags = validate(c);
    REQUIRE(!diags.empty());
    CHECK(diags[0].find("realizations") != std::string::npos);
  }
  SUBCASE("box support exceeding the fundamental domain") {
    ExperimentConfig c = base_config(Command::Spectrum);
    c.kernel.r = 0.6;
    auto diags = validate(c);
    REQUIRE(!diags.empty());
    CHECK(diags[0].find("kernel.r") != std::string::npos);
    CHECK(diags[0].find("support exceeds") != std::string::npos);
  }
  SUBCASE("empty n_list") {
    ExperimentConfig c = base_config(Command::Spectrum);
    c.n_list.clear();
    auto diags = validate(c);
    REQUIRE(!diags.empty());
    CHECK(diags[0].find("n_list") != std::string::npos);
  }
  SUBCASE("scaled-only command on the torus") {
    ExperimentConfig c = base_config(Command::MomentConvergence);
    c.scaled_model = false;
    auto diags = validate(c);
    REQUIRE(!diags.empty());
    CHECK(diags[0].find("model.type") != std::string::npos);
  }
  SUBCASE("correlations rejects moments without a grid oracle") {
    ExperimentConfig c = base_config(Command::Correlations);
    c.moments = {4};
    auto diags = validate(c);
    REQUIRE(!diags.empty());
    CHECK(diags[0].find("moments[0]") != std::string::npos);
  }
  SUBCASE("non-hermitian kernel flagged before any sampling") {
    ExperimentConfig c = base_config(Command::MeasureCompare);
    c.kernel.name = "fourier";
    c.kernel.coeffs[{1}] = Complex(0.0, 1.0);
    auto diags = validate(c);
    REQUIRE(!diags.empty());
    CHECK(diags[0].find("hermitian") != std::string::npos);
  }
  SUBCASE("run refuses an invalid config") {
    ExperimentConfig c = base_config(Command::Spectrum);
    c.realizations = 0;
    CHECK_THROWS_AS(run(c), std::invalid_argument);
  }
}

TEST_CASE("moment-convergence is byte-identical across reruns and threads") {
  ExperimentConfig c = base_config(Command::MomentConvergence);
  c.scaled_model = true;
  c.gamma = 1.0;
  c.n_list = {40, 80};
  c.realizations = 4;
  c.moments = {1, 2};

  fs::path d1 = case_dir("mc_serial_a");
  fs::path d2 = case_dir("mc_serial_b");
  fs::path d3 = case_dir("mc_parallel");
  c.out_dir = d1.string();
  ResultManifest m1 = run(c);
  c.out_dir = d2.string();
  ResultManifest m2 = run(c);
  c.out_dir = d3.string();
  c.threads = 3;
  ResultManifest m3 = run(c);

  std::string body1 = slurp(d1 / "moment-convergence" / "results.csv");
  CHECK(body1 == slurp(d2 / "moment-convergence" / "results.csv"));
  CHECK(body1 == slurp(d3 / "moment-convergence" / "results.csv"));
  CHECK(first_line(body1) == "# erm-spectra v0.1.0 moment-convergence");

  REQUIRE(m1.records.size() == m3.records.size());
  for (std::size_t i = 0; i < m1.records.size(); ++i) {
    CHECK(m1.records[i].name == m3.records[i].name);
    CHECK(m1.records[i].empirical == m3.records[i].empirical);
    CHECK(m1.records[i].se == m3.records[i].se);
  }

  // the first scaled moment is the diagonal value; the empirical side only
  // picks up eigensolver roundoff
  const Record& m1rec = find_record(m1, "nu_moment_m1", 80);
  CHECK(m1rec.theory == 1.0);
  CHECK(m1rec.empirical == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m1rec.pass);
  CHECK(m1rec.tolerance_kind == "sigma");

  const Record& trend = find_record(m1, "nu_gap_trend_m2");
  CHECK(trend.tolerance_kind == "trend");

  // the m = 1 deviations are eigensolver roundoff around an exact identity;
  // the roundoff floor keeps the trend from flipping on that noise
  const Record& trend1 = find_record(m1, "nu_gap_trend_m1");
  CHECK(trend1.pass);

  for (const auto& r : m1.records) CHECK(record_passes(r) == r.pass);
  CHECK(m1.solver_failures == 0);
}

TEST_CASE("spectrum run writes identity records and per-realization files") {
  ExperimentConfig c = base_config(Command::Spectrum);
  c.n_list = {50};
  c.realizations = 2;
  c.write_spectra = true;
  c.write_points = true;
  fs::path d = case_dir("spectrum_files");
  c.out_dir = d.string();

  ResultManifest man = run(c);
  fs::path cmd_dir = d / "spectrum";
  CHECK(fs::exists(cmd_dir / "results.csv"));
  CHECK(fs::exists(cmd_dir / "manifest.json"));
  CHECK(fs::exists(cmd_dir / "points.csv"));
  for (int r = 0; r < 2; ++r) {
    fs::path sp = cmd_dir / ("spectrum_" + std::to_string(r) + ".csv");
    REQUIRE(fs::exists(sp));
    std::string text = slurp(sp);
    CHECK(first_line(text) == "# erm-spectra v0.1.0 spectrum");
    // header + column line + 50 eigenvalues
    CHECK(std::count(text.begin(), text.end(), '\n') == 52);
  }

  CHECK(find_record(man, "trace_identity", 50).pass);
  CHECK(find_record(man, "frobenius_identity", 50).pass);
  const Record& radius = find_record(man, "spectral_radius", 50);
  CHECK(radius.theory == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(find_record(man, "spectral_gap", 50).theory ==
        doctest::Approx(0.5 - 1.0 / std::numbers::pi).epsilon(1e-3));

  std::string results = slurp(cmd_dir / "results.csv");
  std::istringstream lines(results);
  std::string line;
  std::getline(lines, line);
  std::getline(lines, line);
  CHECK(line ==
        "n,realization,spectral_radius,spectral_gap,trace_dev,frob_rel_dev");
}

TEST_CASE("measure-compare counts eigenvalues in the configured windows") {
  ExperimentConfig c = base_config(Command::MeasureCompare);
  c.n_list = {400};
  c.realizations = 6;
  c.windows = {{0.45, 0.55, 1.0}, {0.29, 0.34, 2.0}};
  fs::path d = case_dir("measure_windows");
  c.out_dir = d.string();

  ResultManifest man = run(c);
  const Record& mean0 = find_record(man, "window[0.45,0.55)_mean", 400);
  CHECK(mean0.theory == 1.0);
  CHECK(mean0.empirical == doctest::Approx(1.0).epsilon(0.35));
  const Record& rate1 = find_record(man, "window[0.29,0.34)_hit_rate", 400);
  CHECK(rate1.tolerance_kind == "rate");
  CHECK(rate1.tolerance == doctest::Approx(0.95));

  std::string results = slurp(d / "measure-compare" / "results.csv");
  std::istringstream lines(results);
  std::string line;
  std::getline(lines, line);
  std::getline(lines, line);
  CHECK(line == "n,realization,count_w0,count_w1");
  int rows = 0;
  while (std::getline(lines, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 6);
}

TEST_CASE("density-sweep cross-checks the surjection and convolution routes") {
  ExperimentConfig c = base_config(Command::DensitySweep);
  c.scaled_model = true;
  c.gamma_list = {5.0, 100.0};
  c.sweep_moment = 3;
  fs::path d = case_dir("density_sweep");
  c.out_dir = d.string();

  ResultManifest man = run(c);
  CHECK(man.all_pass());
  const Record& r5 = find_record(man, "ratio_gamma=5");
  // closed form for this kernel: (1 + 1.5 g + 0.1875 g^2) / (0.1875 g^2)
  CHECK(r5.empirical == doctest::Approx(2.81333333).epsilon(0.01));
  CHECK(find_record(man, "ratio_monotone_decreasing").pass);
  CHECK(find_record(man, "ratio_at_least_one").pass);
}

TEST_CASE("level-set moments agree with convolution powers through the runner") {
  ExperimentConfig c = base_config(Command::LevelSet);
  c.moments = {1, 2};
  fs::path d = case_dir("level_set");
  c.out_dir = d.string();

  ResultManifest man = run(c);
  const Record& m1 = find_record(man, "psi_moment_m1");
  CHECK(m1.theory == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(m1.pass);
  const Record& m2 = find_record(man, "psi_moment_m2");
  CHECK(m2.theory == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(m2.pass);

  std::string results = slurp(d / "level-set" / "results.csv");
  CHECK(first_line(results) == "# erm-spectra v0.1.0 level-set");
}

TEST_CASE("poisson-bound reports the exact row-sum inequality at rate one") {
  ExperimentConfig c = base_config(Command::PoissonBound);
  c.scaled_model = true;
  c.gamma = 1.0;
  c.kernel.d = 2;
  c.n_list = {60};
  c.realizations = 5;
  fs::path d = case_dir("poisson_bound");
  c.out_dir = d.string();

  ResultManifest man = run(c);
  const Record& gersh = find_record(man, "radius_le_gershgorin", 60);
  CHECK(gersh.empirical == 1.0);
  CHECK(gersh.pass);
  CHECK(find_record(man, "radius_le_j_supf", 60).tolerance ==
        doctest::Approx(0.9));
}

TEST_CASE("correlations MC estimate sits inside sigma of the grid oracle") {
  ExperimentConfig c = base_config(Command::Correlations);
  c.moments = {2};
  c.det_power = 1;
  c.mc_samples = 20000;
  fs::path d = case_dir("correlations");
  c.out_dir = d.string();

  ResultManifest man = run(c);
  const Record& rec = find_record(man, "det_moment_m2_k1");
  CHECK(rec.theory == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(rec.se > 0.0);
  CHECK(rec.pass);
}

TEST_CASE("eigenvector-residual records exact finite-n theory plus a trend") {
  ExperimentConfig c = base_config(Command::EigenvectorResidual);
  c.n_list = {50, 100};
  c.realizations = 4;
  fs::path d = case_dir("residuals");
  c.out_dir = d.string();

  ResultManifest man = run(c);
  // for this kernel at the zero mode the squared residual expectation is
  // exactly a quarter at every n
  for (int n : {50, 100}) {
    const Record& rec = find_record(man, "residual_sq_l2", n);
    CHECK(rec.theory == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(rec.tolerance_kind == "sigma");
  }
  const Record& trend = find_record(man, "residual_pinf_trend");
  CHECK(trend.tolerance_kind == "trend");
  for (const auto& r : man.records) CHECK(record_passes(r) == r.pass);
}
