#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "erm/experiment.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_records(const erm::ResultManifest& man) {
  for (const auto& r : man.records) {
    std::printf("[%s] %-32s", r.pass ? "PASS" : "FAIL", r.name.c_str());
    if (r.n > 0) std::printf(" n=%-6d", r.n);
    std::printf(" theory=%-12.6g empirical=%-12.6g", r.theory, r.empirical);
    if (r.se > 0.0) std::printf(" se=%.3g", r.se);
    if (r.tolerance_kind != "none")
      std::printf(" (%s %.3g)", r.tolerance_kind.c_str(), r.tolerance);
    std::printf("\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "erm-spectra: empirical spectra of Euclidean random matrices against "
      "their predicted limits"};
  std::string command, config_path, out_override;
  long long seed_override = -1;
  int threads_override = 0;

  app.add_option("command", command,
                 "spectrum | measure-compare | moment-convergence | "
                 "density-sweep | poisson-bound | eigenvector-residual | "
                 "correlations | level-set")
      ->required();
  app.add_option("--config", config_path, "JSON config file")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed_override, "override master_seed");
  app.add_option("--out", out_override, "override the output directory");
  app.add_option("--threads", threads_override, "worker thread count");
  CLI11_PARSE(app, argc, argv);

  auto cmd = erm::command_from_name(command);
  if (!cmd) {
    std::cerr << "command: unknown command '" << command << "'\n";
    return 1;
  }

  erm::ExperimentConfig cfg;
  try {
    cfg = erm::parse_config(read_file(config_path));
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  if (cfg.command_from_file && cfg.command != *cmd) {
    std::cerr << "command: config file says '"
              << erm::command_name(cfg.command)
              << "' but the command line says '" << command << "'\n";
    return 1;
  }
  cfg.command = *cmd;

  if (seed_override >= 0)
    cfg.master_seed = static_cast<std::uint64_t>(seed_override);
  if (!out_override.empty()) cfg.out_dir = out_override;
  if (threads_override > 0) cfg.threads = threads_override;
  if (const char* root = std::getenv("ERM_OUT_ROOT"))
    if (*root && std::filesystem::path(cfg.out_dir).is_relative())
      cfg.out_dir = (std::filesystem::path(root) / cfg.out_dir).string();

  auto diags = erm::validate(cfg);
  if (!diags.empty()) {
    for (const auto& d : diags) std::cerr << d << "\n";
    return 1;
  }

  erm::ResultManifest man;
  try {
    man = erm::run(cfg);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return 2;
  }

  print_records(man);
  int passed = 0;
  for (const auto& r : man.records) passed += r.pass ? 1 : 0;
  std::printf("records: %d/%zu pass; solver failures: %d; %.2fs; wrote %s\n",
              passed, man.records.size(), man.solver_failures,
              man.wall_seconds, man.artifacts.empty()
                                    ? "(nothing)"
                                    : man.artifacts.front().c_str());
  for (const auto& note : man.failure_notes) std::cerr << note << "\n";
  return man.solver_failures > 0 ? 2 : 0;
}
