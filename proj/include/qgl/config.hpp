#pragma once

// Experiment configuration: an INI-style file ([section] headers, dotted
// keys, `key = value`) or JSON, merged over defaults and validated.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qgl/fem.hpp"
#include "qgl/random_model.hpp"

namespace qgl {

// Values are read as JSON scalars or arrays when they parse as such; a bare
// comma-separated value becomes a list; anything else is a string.
nlohmann::json parse_ini(std::string_view text);

// By extension: .json is JSON, anything else INI. A manifest file is accepted
// and its "config" member used.
nlohmann::json load_config_file(const std::filesystem::path& path);

std::vector<std::string> known_checks();
nlohmann::json default_config();

struct ExperimentConfig {
  nlohmann::json resolved;  // defaults merged with the user file
  int N = 1;
  int d = 1;
  PotentialLaw law;
  InteractionSpec interaction;
  Mesh mesh;
  int L = 8;
  std::vector<std::string> checks;
  std::uint64_t trials = 50;
  std::uint64_t seed = 1;
  int threads = 1;
  std::filesystem::path out_dir;

  // Parameter block of a check with n, L and trials inherited when unset.
  nlohmann::json check(const std::string& name) const;
  // The part of the configuration a check's outputs depend on.
  nlohmann::json fingerprint(const std::string& name) const;
};

// Throws ConfigError naming the offending field.
ExperimentConfig resolve_config(const nlohmann::json& user);

}  // namespace qgl
