#include <iostream>

#include <CLI11.hpp>

#include "config.hpp"
#include "runner.hpp"
#include "wavemollify/errors.hpp"

using namespace wavemollify;

int main(int argc, char** argv) {
  CLI::App app{"Geometric regularization experiments"};
  app.require_subcommand(1);
  cli::Overrides ov;
  std::string config_path;
  std::string cache_cmd;

  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "YAML or JSON config")->required();
  run->add_option("--output-dir", ov.output_dir, "Directory for net.csv, verdict.json, diag.json");
  run->add_option("--cache-dir", ov.cache_dir, "Eigensystem cache directory");
  run->add_option("--seed", ov.seed, "Seed override")->check(CLI::NonNegativeNumber);
  run->add_option("--threads", ov.threads, "Worker threads (recorded; runs are sequential)")->check(CLI::PositiveNumber);

  auto* cache = app.add_subcommand("cache", "Inspect or clear the eigensystem cache");
  cache->add_option("command", cache_cmd, "list, purge or verify")
      ->required()
      ->check(CLI::IsMember({"list", "purge", "verify"}));
  cache->add_option("--cache-dir", ov.cache_dir, "Eigensystem cache directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      const auto cfg = cli::load_config(config_path, ov);
      const int code = cli::run_and_write(cfg);
      std::cout << cfg.experiment << ": " << (code == 0 ? "PASS" : "FAIL") << " ("
                << cfg.resolved["output_dir"].get<std::string>() << ")\n";
      return code;
    }
    const std::filesystem::path dir = ov.cache_dir.empty() ? EigenCache::default_dir() : std::filesystem::path(ov.cache_dir);
    return cli::cache_admin(cache_cmd, dir, std::cout);
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return 1;
}
