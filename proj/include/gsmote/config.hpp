#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gsmote/trainer.hpp"

namespace gsmote {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetSpec {
  /// "synthetic" or a dataset directory.
  std::string source = "synthetic";
  NodeIndex synthetic_n = 280;
  int synthetic_m = 7;
  NodeIndex synthetic_d = 32;
  double synthetic_intra_p = 0.08;
  double synthetic_inter_p = 0.01;
  double synthetic_separation = 1.0;
  std::uint64_t synthetic_seed = 0;

  bool is_synthetic() const { return source == "synthetic"; }
};

struct RunSpec {
  ExperimentConfig experiment;
  DatasetSpec dataset;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  bool record_timing = false;
  /// Directory relative dataset paths are resolved against.
  std::filesystem::path base_dir;
};

/// Every recognized key with its default value.
nlohmann::json default_config_json();

/// Parses a flat JSON object; unknown keys and ill-typed values are errors.
RunSpec run_spec_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json run_spec_to_json(const RunSpec& spec);

RunSpec load_run_spec(const std::filesystem::path& file);
nlohmann::json load_config_json(const std::filesystem::path& file);

/// Sets `key` from a command-line string: parsed as JSON when possible,
/// otherwise taken as a string.
void apply_override(nlohmann::json& j, const std::string& key, const std::string& value);

bool is_config_key(const std::string& key);

}  // namespace gsmote
