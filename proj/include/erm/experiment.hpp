#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "erm/common.hpp"
#include "erm/kernel.hpp"
#include "erm/matrices.hpp"

namespace erm {

enum class Command {
  Spectrum,
  MeasureCompare,
  MomentConvergence,
  DensitySweep,
  PoissonBound,
  EigenvectorResidual,
  Correlations,
  LevelSet,
};

const char* command_name(Command c);
std::optional<Command> command_from_name(const std::string& name);

// Kernel description as it appears in the config file.  `name` selects the
// factory: "box" and "ball" read d and r, "pure-mode" reads mode, "fourier"
// reads coeffs.
struct KernelSpec {
  std::string name = "box";
  int d = 1;
  double r = 0.25;
  std::vector<int> mode;
  std::map<std::vector<int>, Complex> coeffs;
};

// Half-open eigenvalue window with the atom count expected inside it.
struct WindowSpec {
  double lo = 0.0;
  double hi = 0.0;
  double count = 0.0;
};

struct ExperimentConfig {
  Command command = Command::Spectrum;
  bool command_from_file = false;  // config document named the command itself
  KernelSpec kernel;

  bool scaled_model = false;
  double gamma = 1.0;
  BoundaryRule boundary = BoundaryRule::PlainDifference;

  std::vector<int> n_list{500};
  int realizations = 1;
  std::uint64_t master_seed = 1;
  std::string out_dir = "runs";
  int threads = 1;

  // declared tolerances; every manifest record cites one of these
  double mc_sigma = 3.0;
  double quadrature_rel = 0.02;
  double window_hit_fraction = 0.95;
  double poisson_rate = 0.90;

  int fourier_cutoff = 2000;
  std::vector<int> moments{1, 2, 3};
  std::vector<WindowSpec> windows;  // empty: derived from the atom list
  std::vector<double> gamma_list{5.0, 100.0, 1000.0};
  int sweep_moment = 3;
  std::vector<int> residual_mode;  // empty: the zero mode
  std::vector<double> p_norms;     // empty: {2, inf}
  long long mc_samples = 1'000'000;
  int det_power = 1;
  bool write_points = false;
  bool write_spectra = false;
  bool verify_extremes = false;
  LevelSetOptions level_set;
};

// Parses the JSON document.  Throws std::runtime_error naming the offending
// field on malformed input; range checks live in validate() instead.
ExperimentConfig parse_config(const std::string& json_text);

// Empty list iff the config is runnable; each diagnostic names the field and
// the constraint it breaks.
std::vector<std::string> validate(const ExperimentConfig& c);

// One compared quantity.  `pass` is recomputable from the numbers stored
// here: sigma |emp-th| <= tol*se + roundoff floor, relative |emp-th| <=
// tol*max(1,|th|), absolute |emp-th| <= tol, rate emp >= tol, trend
// emp <= tol + roundoff floor, none always.  The floor 1e-12*max(1,|th|)
// keeps exact statistics, whose deviations and se are pure solver roundoff,
// from flipping on noise.
struct Record {
  std::string name;
  int n = 0;
  std::uint64_t stream_lo = 0;  // seed streams relative to master_seed
  std::uint64_t stream_hi = 0;
  double theory = 0.0;
  double empirical = 0.0;
  double se = 0.0;
  std::string tolerance_kind = "none";
  double tolerance = 0.0;
  bool pass = true;
};

struct ResultManifest {
  std::string command;
  std::string config_echo;  // canonical JSON of the effective config
  std::vector<Record> records;
  int solver_failures = 0;
  std::vector<std::string> failure_notes;
  double wall_seconds = 0.0;
  std::vector<std::string> artifacts;

  bool all_pass() const;
};

// Executes the configured study and writes <out>/<command>/results.csv plus
// manifest.json (and any per-realization artifacts).  Deterministic for a
// fixed config: worker threads fill preallocated slots that are reduced in
// index order, so the CSV body is byte-identical at any thread count.
ResultManifest run(const ExperimentConfig& c);

bool record_passes(const Record& r);

}  // namespace erm
