#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "qgl/config.hpp"

namespace qgl {

enum ExitCode { kExitOk = 0, kExitAssertion = 1, kExitConfig = 2, kExitSolver = 3 };

struct CheckOutcome {
  std::string name;
  bool assertable = false;  // report-only checks never fail a run
  bool passed = true;
  std::string text;         // terminal report
  nlohmann::json summary;
  std::vector<std::filesystem::path> files;
};

// Runs one check, writing `<name>-<hash>.csv` and `.json` under cfg.out_dir.
CheckOutcome run_check(const std::string& name, const ExperimentConfig& cfg);

struct RunResult {
  std::vector<CheckOutcome> checks;
  std::filesystem::path manifest;
  bool all_passed() const;
};

// Every configured check, then `manifest-<hash>.json`.
RunResult run_experiment(const ExperimentConfig& cfg);

// Loads, validates and runs a configuration file; returns the exit code.
int run_config_file(const std::filesystem::path& path, std::ostream& out, std::ostream& err);

// Exit code for an exception escaping a check.
int exit_code_for(const std::exception& e);

}  // namespace qgl
