#pragma once

#include <map>
#include <string>

#include "config.hpp"
#include "wavemollify/eigen.hpp"

namespace wavemollify::cli {

struct Outcome {
  bool pass = false;
  Json verdict;      // slopes, R^2, classification, checks
  Json diagnostics;  // engine diagnostics and per-eps detail
  std::string net_csv;
  // Additional plot-ready files, by file name.
  std::map<std::string, std::string> extra_files;
};

Outcome run_experiment(const ExperimentConfig& cfg, const EigenCache& cache);

// Runs the experiment and writes net.csv, verdict.json and diag.json into the
// configured output directory. Returns 0 on pass and 2 on fail; errors propagate.
int run_and_write(const ExperimentConfig& cfg);

// `wavemollify cache <cmd>`; returns the process exit code.
int cache_admin(const std::string& cmd, const std::filesystem::path& dir, std::ostream& out);

}  // namespace wavemollify::cli
