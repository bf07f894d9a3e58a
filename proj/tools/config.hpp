#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

namespace wavemollify::cli {

using Json = nlohmann::json;

// A configuration problem, with the source line when one is known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = -1);
  int line() const { return line_; }

 private:
  int line_;
};

const std::vector<std::string>& experiment_names();

// Parsed and fully resolved experiment configuration. `resolved` holds every
// setting the run uses, defaults included, and is echoed into verdict.json.
struct ExperimentConfig {
  std::string experiment;
  Json resolved;
  std::filesystem::path source;
};

struct Overrides {
  std::string output_dir;
  std::string cache_dir;
  long long seed = -1;
  int threads = 0;
};

// Reads YAML (or JSON, which YAML contains) from text. Unknown keys, wrong
// types and out-of-range values raise ConfigError naming the key and line.
ExperimentConfig parse_config(const std::string& text, const Overrides& ov = {});
ExperimentConfig load_config(const std::filesystem::path& path, const Overrides& ov = {});

// Default block for one experiment (before user settings are merged).
Json experiment_defaults(const std::string& experiment);

}  // namespace wavemollify::cli
