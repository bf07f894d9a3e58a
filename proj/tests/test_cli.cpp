#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "config.hpp"
#include "runner.hpp"
#include "wavemollify/errors.hpp"

using namespace wavemollify;
using namespace wavemollify::cli;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / "wm-cli-test" / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return 0;
}

std::size_t rows(const std::string& csv) {
  std::size_t n = 0;
  for (char c : csv) n += c == '\n';
  return n - 1;
}

}  // namespace

TEST(Config, EveryExperimentHasResolvedDefaults) {
  for (const auto& name : experiment_names()) {
    const auto cfg = parse_config("experiment: " + name + "\n");
    EXPECT_EQ(cfg.resolved["experiment"], name);
    for (const char* key : {"seed", "threads", "output_dir", "cache_dir", "engine", "kernel", "geometry", "fit"}) {
      EXPECT_TRUE(cfg.resolved.contains(key)) << name << ' ' << key;
    }
  }
}

TEST(Config, EpsOutsideWindowNamesLine) {
  try {
    parse_config("experiment: sobolev-detect\nseed: 3\neps: 1.5\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_NE(std::string(e.what()).find("eps=1.5"), std::string::npos);
  }
  EXPECT_EQ(error_line("experiment: slice\neps: [0.25, 0.5]\n"), 2);
  EXPECT_EQ(error_line("experiment: slice\neps: {from: 2}\n"), 2);
}

TEST(Config, UnknownKeysWrongTypesAndSyntax) {
  EXPECT_EQ(error_line("experiment: commutator\ngeometry:\n  model: warped_slab\n  n2: 4\n"), 4);
  EXPECT_EQ(error_line("experiment: commutator\nverdict:\n  min_slope: steep\n"), 3);
  EXPECT_EQ(error_line("experiment: commutator\ngeometry: [1, 2\n"), 3);
  EXPECT_EQ(error_line("experiment: nope\n"), 1);
  EXPECT_EQ(error_line("experiment: weyl\neps: 0.5\n"), 2);
  EXPECT_THROW(parse_config("seed: 1\n"), ConfigError);
  EXPECT_THROW(parse_config("experiment: weyl\ngeometry:\n  model: sphere\n"), ConfigError);
}

TEST(Config, JsonSurfaceAndModelSwitch) {
  const auto cfg = parse_config(R"({"experiment": "cross-engine", "geometry": {"model": "circle", "n0": 48},
                                    "eps": {"from": 2, "to": 4}})");
  EXPECT_EQ(cfg.resolved["geometry"]["model"], "circle");
  EXPECT_EQ(cfg.resolved["geometry"]["n0"], 48);
  EXPECT_FALSE(cfg.resolved["geometry"].contains("n1"));
  EXPECT_EQ(cfg.resolved["eps"].size(), 3u);
  EXPECT_DOUBLE_EQ(cfg.resolved["eps"][2].get<double>(), 0.0625);
}

TEST(Config, OverridesWinAndDependentDefaultsAreWritten) {
  Overrides ov;
  ov.seed = 42;
  ov.output_dir = "/tmp/x";
  ov.threads = 3;
  const auto cfg = parse_config("experiment: isometry-check\nseed: 5\nengine:\n  name: wave\n", ov);
  EXPECT_EQ(cfg.resolved["seed"], 42);
  EXPECT_EQ(cfg.resolved["output_dir"], "/tmp/x");
  EXPECT_EQ(cfg.resolved["threads"], 3);
  EXPECT_DOUBLE_EQ(cfg.resolved["verdict"]["max_residual"].get<double>(), 1e-8);
  const auto w = parse_config("experiment: weyl\ngeometry:\n  model: flat_torus\n");
  EXPECT_DOUBLE_EQ(w.resolved["verdict"]["expected_exponent"].get<double>(), 1.0);
}

TEST(Run, WritesArtifactsAndEchoesConfig) {
  const auto dir = scratch("run");
  auto cfg = parse_config("experiment: multiplier-check\ngeometry:\n  n0: 64\neps: {from: 2, to: 4}\noutput_dir: " +
                          (dir / "out").string() + "\ncache_dir: " + (dir / "cache").string() + "\n");
  EXPECT_EQ(run_and_write(cfg), 0);
  const auto net = slurp(dir / "out" / "net.csv");
  EXPECT_EQ(net.rfind("eps,value\n", 0), 0u);
  EXPECT_EQ(rows(net), 3u);
  const auto verdict = Json::parse(slurp(dir / "out" / "verdict.json"));
  EXPECT_TRUE(verdict["pass"].get<bool>());
  EXPECT_EQ(verdict["config"], cfg.resolved);
  for (const char* key : {"runtime_seconds", "version", "checks"}) EXPECT_TRUE(verdict.contains(key)) << key;
  EXPECT_TRUE(Json::parse(slurp(dir / "out" / "diag.json")).is_array());

  cfg.resolved["verdict"]["max_error"] = 1e-30;
  EXPECT_EQ(run_and_write(cfg), 2);
}

TEST(Run, DeterministicForFixedSeed) {
  const auto dir = scratch("det");
  const std::string base = "experiment: cross-engine\ngeometry:\n  model: circle\n  n0: 48\n  f: {amp_x: 0.2}\n"
                           "distribution:\n  kind: sobolev_random\n  s: 1\neps: {from: 2, to: 5}\ncache_dir: " +
                           (dir / "cache").string() + "\n";
  Overrides a, b, c;
  a.output_dir = (dir / "a").string();
  b.output_dir = (dir / "b").string();
  c.output_dir = (dir / "c").string();
  c.seed = 9;
  EXPECT_EQ(run_and_write(parse_config(base, a)), 0);
  EXPECT_EQ(run_and_write(parse_config(base, b)), 0);
  EXPECT_EQ(run_and_write(parse_config(base, c)), 0);
  EXPECT_EQ(slurp(dir / "a" / "net.csv"), slurp(dir / "b" / "net.csv"));
  EXPECT_NE(slurp(dir / "a" / "net.csv"), slurp(dir / "c" / "net.csv"));
}

TEST(Run, WeylOnCircle) {
  const auto dir = scratch("weyl");
  const auto cfg = parse_config("experiment: weyl\noutput_dir: " + dir.string() + "\n");
  EXPECT_EQ(run_and_write(cfg), 0);
  const auto v = Json::parse(slurp(dir / "verdict.json"));
  EXPECT_NEAR(v["exponent"].get<double>(), 0.5, 0.05);
  EXPECT_GE(v["trusted"].get<int>(), 300);
}

TEST(Run, CommutatorDefaultsOnWarpedSlab) {
  const auto dir = scratch("comm");
  const auto cfg = load_config(std::filesystem::path(WM_SOURCE_DIR) / "configs" / "commutator.cfg",
                               Overrides{dir.string(), (std::filesystem::temp_directory_path() / "wm-lorentz-cache").string()});
  EXPECT_EQ(run_and_write(cfg), 0);
  EXPECT_EQ(rows(slurp(dir / "net.csv")), 7u);
  const auto v = Json::parse(slurp(dir / "verdict.json"));
  EXPECT_GE(v["fit"]["slope"].get<double>(), 1.7);
}

TEST(Run, ValidationErrorsPropagate) {
  const auto cfg = parse_config("experiment: negligibility\ndistribution:\n  kind: band_limited\n  band: 100\n"
                                "output_dir: " + scratch("bad").string() + "\n");
  EXPECT_THROW(run_and_write(cfg), ValidationError);
}

TEST(Cache, ListVerifyPurge) {
  const auto dir = scratch("cache");
  std::ostringstream out;
  EXPECT_EQ(cache_admin("list", dir, out), 0);
  EXPECT_TRUE(out.str().empty());
  const auto cfg = parse_config("experiment: cross-engine\ngeometry:\n  model: circle\n  n0: 40\n  f: {amp_x: 0.3}\n"
                                "eps: {from: 2, to: 4}\noutput_dir: " + (dir / "out").string() +
                                "\ncache_dir: " + dir.string() + "\n");
  run_and_write(cfg);
  out.str("");
  EXPECT_EQ(cache_admin("verify", dir, out), 0);
  EXPECT_NE(out.str().find(" ok"), std::string::npos);
  out.str("");
  cache_admin("purge", dir, out);
  out.str("");
  cache_admin("list", dir, out);
  EXPECT_TRUE(out.str().empty());
  EXPECT_THROW(cache_admin("list", dir / "missing", out), ValidationError);
  EXPECT_THROW(cache_admin("shrink", dir, out), ValidationError);
}
