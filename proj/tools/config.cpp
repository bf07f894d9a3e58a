#include "config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "wavemollify/eigen.hpp"

namespace wavemollify::cli {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

using LineMap = std::map<std::string, int>;

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

Json scalar_to_json(const YAML::Node& n) {
  const std::string& s = n.Scalar();
  if (n.Tag() == "!") return s;  // quoted
  if (s == "true" || s == "True") return true;
  if (s == "false" || s == "False") return false;
  if (s == "null" || s == "~") return nullptr;
  try {
    std::size_t used = 0;
    const long long i = std::stoll(s, &used);
    if (used == s.size()) return i;
  } catch (const std::exception&) {
  }
  try {
    std::size_t used = 0;
    const double d = std::stod(s, &used);
    if (used == s.size()) return d;
  } catch (const std::exception&) {
  }
  return s;
}

Json to_json(const YAML::Node& n, const std::string& path, LineMap& lines) {
  lines[path] = n.Mark().line + 1;
  switch (n.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Scalar:
      return scalar_to_json(n);
    case YAML::NodeType::Sequence: {
      Json a = Json::array();
      for (std::size_t i = 0; i < n.size(); ++i) a.push_back(to_json(n[i], join(path, std::to_string(i)), lines));
      return a;
    }
    case YAML::NodeType::Map: {
      Json o = Json::object();
      for (const auto& kv : n) {
        const std::string key = kv.first.as<std::string>();
        if (o.contains(key)) throw ConfigError("duplicate key '" + join(path, key) + "'", kv.first.Mark().line + 1);
        lines[join(path, key)] = kv.first.Mark().line + 1;
        o[key] = to_json(kv.second, join(path, key), lines);
      }
      return o;
    }
  }
  return nullptr;
}

Json profile(double base, double amp_t = 0.0, double amp_x = 0.0) {
  return {{"base", base}, {"amp_t", amp_t}, {"amp_x", amp_x}, {"mode_t", 1}, {"mode_x", 1}};
}

Json geometry_defaults(const std::string& model) {
  if (model == "circle") return {{"model", model}, {"n0", 256}, {"length0", kTwoPi}, {"f", profile(1.0)}};
  if (model == "flat_torus") {
    return {{"model", model}, {"n0", 128}, {"n1", 128}, {"length0", kTwoPi}, {"length1", kTwoPi}};
  }
  if (model == "warped_slab") {
    return {{"model", model}, {"n0", 48}, {"n1", 48}, {"length0", kTwoPi}, {"length1", kTwoPi},
            {"beta", profile(1.0)}, {"f", profile(1.0, 0.3)}};
  }
  if (model == "euclidean_line") return {{"model", model}, {"half_length", 16.0}, {"spacing", 1.0 / 256}};
  throw ConfigError("unknown geometry model '" + model + "' (circle, flat_torus, warped_slab, euclidean_line)");
}

Json distribution(const std::string& kind, double x = std::numbers::pi, double s = 0.0, double band = 0.0,
                  double width = 1.0) {
  return {{"kind", kind}, {"center", {0.0, x}}, {"width", width}, {"s", s}, {"band", band}};
}

Json dyadic(int from, int to) {
  Json a = Json::array();
  for (int j = from; j <= to; ++j) a.push_back(std::ldexp(1.0, -j));
  return a;
}

Json slab_experiment(const std::string& kind, double s) {
  Json d = distribution(kind, 0.0, s);
  d["time_bump"] = {{"center", std::numbers::pi}, {"half_width", 1.0}};
  return d;
}

bool same_kind(const Json& a, const Json& b) {
  if (a.is_number() && b.is_number()) return true;
  return a.type() == b.type();
}

// Overlays `user` on `base`, refusing keys the defaults do not define.
void overlay(Json& base, const Json& user, const std::string& path, const LineMap& lines) {
  auto line_of = [&](const std::string& p) {
    auto it = lines.find(p);
    return it == lines.end() ? -1 : it->second;
  };
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string p = join(path, it.key());
    if (!base.contains(it.key())) throw ConfigError("unknown key '" + p + "'", line_of(p));
    Json& slot = base[it.key()];
    if (slot.is_object() && it->is_object()) {
      overlay(slot, *it, p, lines);
      continue;
    }
    if (!same_kind(slot, *it)) {
      throw ConfigError("key '" + p + "' expects " + std::string(slot.type_name()) + ", got " + it->type_name(),
                        line_of(p));
    }
    if (slot.is_array() && !slot.empty()) {
      for (const auto& e : *it) {
        if (!same_kind(slot.front(), e)) throw ConfigError("key '" + p + "' has an element of the wrong type", line_of(p));
      }
    }
    slot = *it;
  }
}

Json resolve_eps(const Json& user, int line) {
  Json list;
  if (user.is_number()) {
    list = Json::array({user});
  } else if (user.is_array()) {
    list = user;
  } else if (user.is_object()) {
    for (auto it = user.begin(); it != user.end(); ++it) {
      if (it.key() != "from" && it.key() != "to") throw ConfigError("unknown key 'eps." + it.key() + "'", line);
    }
    if (!user.contains("from") || !user.contains("to") || !user["from"].is_number_integer() ||
        !user["to"].is_number_integer()) {
      throw ConfigError("eps window needs integer 'from' and 'to' (eps = 2^-from .. 2^-to)", line);
    }
    list = dyadic(user["from"].get<int>(), user["to"].get<int>());
  } else {
    throw ConfigError("eps must be a number, a list or {from, to}", line);
  }
  double prev = 2.0;
  for (const auto& e : list) {
    if (!e.is_number()) throw ConfigError("eps entries must be numbers", line);
    const double v = e.get<double>();
    if (!(v > 0.0 && v <= 1.0)) {
      std::ostringstream m;
      m << "eps=" << v << " is outside the window (0, 1]";
      throw ConfigError(m.str(), line);
    }
    if (v >= prev) throw ConfigError("eps values must be strictly decreasing", line);
    prev = v;
  }
  return list;
}

}  // namespace

ConfigError::ConfigError(const std::string& what, int line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{
      "multiplier-check", "mollifier-moments", "approx-identity", "negligibility", "sobolev-detect",
      "support-check",    "isometry-check",    "weyl",            "commutator",    "dt-commutator",
      "mult-commutator",  "slice",             "slice-assoc",     "wf-probe",      "cross-engine"};
  return names;
}

Json experiment_defaults(const std::string& name) {
  Json j;
  j["experiment"] = name;
  j["seed"] = 1;
  j["threads"] = 1;
  j["output_dir"] = "out/" + name;
  j["cache_dir"] = EigenCache::default_dir().string();
  j["engine"] = {{"name", "spectral"}, {"nodes_per_unit", 16.0}, {"cfl", 0.5}, {"alias_guard", 320.0},
                 {"energy_tol", 1e-6}};
  j["kernel"] = {{"plateau_radius", 1.0}, {"support_radius", 2.0}, {"c", 1.0}, {"tol", 1e-12}};
  j["fit"] = {{"guard", 0.25}, {"negligible_r2", 0.98}, {"noise_floor", 0.0}};

  if (name == "multiplier-check") {
    j["geometry"] = geometry_defaults("circle");
    j["distribution"] = distribution("delta");
    j["eps"] = dyadic(2, 6);
    j["verdict"] = {{"max_error", 1e-8}};
  } else if (name == "mollifier-moments") {
    j["geometry"] = geometry_defaults("euclidean_line");
    j["kernel"]["c"] = 4.0;
    j["distribution"] = distribution("smooth_bump", 0.3, 0.0, 0.0, 4.0);
    j["eps"] = dyadic(4, 5);
    j["engine"]["name"] = "wave";
    j["verdict"] = {{"integral_tol", 1e-8}, {"moment_tol", 1e-6}, {"max_moment", 4}, {"convolution_tol", 1e-6}};
  } else if (name == "approx-identity") {
    j["geometry"] = geometry_defaults("circle");
    j["distribution"] = distribution("delta");
    j["eps"] = dyadic(2, 7);
    j["fit"]["noise_floor"] = 1e-13;
    j["panel"] = {{"count", 8}, {"width_fraction", 0.2}};
    j["verdict"] = {{"min_slope", 0.5}, {"min_moderate_order", -0.6}};
  } else if (name == "negligibility") {
    j["geometry"] = geometry_defaults("circle");
    j["distribution"] = distribution("band_limited", std::numbers::pi, 0.0, 8.0);
    j["eps"] = dyadic(2, 7);
    j["fit"]["noise_floor"] = 1e-13;
    j["verdict"] = {{"min_slope", 6.0}};
  } else if (name == "sobolev-detect") {
    j["geometry"] = geometry_defaults("circle");
    j["geometry"]["n0"] = 4096;
    j["distribution"] = distribution("delta");
    j["eps"] = dyadic(2, 6);
    j["verdict"] = {{"expected_order", -1.0}, {"tolerance", 0.1}};
  } else if (name == "support-check") {
    j["geometry"] = geometry_defaults("circle");
    j["geometry"]["n0"] = 512;
    j["geometry"]["length0"] = 16.0;
    j["distribution"] = distribution("smooth_bump", 8.0, 0.0, 0.0, 0.8);
    j["eps"] = dyadic(2, 4);
    j["margin_cells"] = 10.0;
    j["verdict"] = {{"max_outside", 1e-9}, {"max_localization", 1e-9}};
  } else if (name == "isometry-check") {
    j["geometry"] = geometry_defaults("flat_torus");
    j["geometry"]["n0"] = 32;
    j["geometry"]["n1"] = 32;
    j["distribution"] = distribution("band_limited", std::numbers::pi, 0.0, 4.0);
    j["eps"] = dyadic(2, 5);
    j["shift"] = {8, 8};
    // Negative tolerances select the engine default.
    j["verdict"] = {{"max_residual", -1.0}, {"max_commutation", -1.0}};
  } else if (name == "weyl") {
    j["geometry"] = geometry_defaults("circle");
    j["geometry"]["n0"] = 1280;
    j["eigencount"] = 0;
    j["verdict"] = {{"expected_exponent", -1.0}, {"tolerance", 0.05}, {"min_trusted", 300}};
  } else if (name == "commutator" || name == "dt-commutator" || name == "mult-commutator") {
    const double s = name == "commutator" ? 3.0 : name == "dt-commutator" ? 2.0 : 1.0;
    j["geometry"] = geometry_defaults("warped_slab");
    j["distribution"] = slab_experiment("sobolev_random", s);
    j["eps"] = name == "commutator" ? dyadic(2, 8) : dyadic(2, 7);
    j["verdict"] = {{"min_slope", 1.7}, {"min_r2", 0.0}};
    if (name == "commutator") j["verdict"]["check_bound"] = true;
    if (name == "mult-commutator") j["alpha"] = {{"base", 1.0}, {"amplitude", 0.5}, {"mode", 1}};
  } else if (name == "slice") {
    j["geometry"] = geometry_defaults("warped_slab");
    j["distribution"] = slab_experiment("sobolev_random", 2.0);
    j["eps"] = dyadic(2, 7);
    j["panel"] = {{"levels", 17}, {"lo", 0.25}, {"hi", 0.75}};
    j["verdict"] = {{"min_slope", 1.7}, {"min_r2", 0.95}};
  } else if (name == "slice-assoc") {
    j["geometry"] = geometry_defaults("warped_slab");
    j["x0"] = 2.0;
    j["levels"] = {12, 24, 30};
    j["eps"] = dyadic(2, 7);
    j["fit"]["noise_floor"] = 1e-12;
    j["panel"] = {{"count", 8}, {"width_fraction", 0.2}};
    j["verdict"] = {{"min_slope", 0.25}};
  } else if (name == "wf-probe") {
    j["geometry"] = geometry_defaults("flat_torus");
    j["eps"] = dyadic(2, 5);
    j["probe"] = {{"base", {std::numbers::pi, std::numbers::pi}},
                  {"half_angle", std::numbers::pi / 8},
                  {"window_radius", 2.5},
                  {"l_grid", {0, 1, 2, 3, 4, 5, 6}},
                  {"gap_l_max", 4},
                  {"guard", 0.2}};
    j["verdict"] = {{"min_gap", 0.8}};
  } else if (name == "cross-engine") {
    j["geometry"] = geometry_defaults("warped_slab");
    j["distribution"] = distribution("sobolev_random", 0.0, 2.0);
    j["eps"] = dyadic(2, 7);
    j["verdict"] = {{"max_relative", 1e-6}};
  } else {
    std::string list;
    for (const auto& n : experiment_names()) list += (list.empty() ? "" : ", ") + n;
    throw ConfigError("unknown experiment '" + name + "' (one of: " + list + ")");
  }
  return j;
}

ExperimentConfig parse_config(const std::string& text, const Overrides& ov) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.line + 1);
  }
  if (!root.IsMap()) throw ConfigError("config must be a mapping of keys to values");
  LineMap lines;
  Json user = to_json(root, "", lines);
  auto line_of = [&](const std::string& p) {
    auto it = lines.find(p);
    return it == lines.end() ? -1 : it->second;
  };
  if (!user.contains("experiment") || !user["experiment"].is_string()) {
    throw ConfigError("missing string key 'experiment'");
  }
  const std::string name = user["experiment"];
  Json resolved;
  try {
    resolved = experiment_defaults(name);
  } catch (const ConfigError& e) {
    throw ConfigError(e.what(), line_of("experiment"));
  }

  if (user.contains("geometry") && user["geometry"].is_object() && user["geometry"].contains("model")) {
    const Json& m = user["geometry"]["model"];
    if (!m.is_string()) throw ConfigError("geometry.model must be a string", line_of("geometry.model"));
    if (m.get<std::string>() != resolved["geometry"]["model"].get<std::string>()) {
      try {
        resolved["geometry"] = geometry_defaults(m);
      } catch (const ConfigError& e) {
        throw ConfigError(e.what(), line_of("geometry.model"));
      }
    }
  }
  Json eps_user;
  if (user.contains("eps")) {
    if (!resolved.contains("eps")) throw ConfigError("experiment '" + name + "' takes no eps window", line_of("eps"));
    eps_user = user["eps"];
    user.erase("eps");
  }
  overlay(resolved, user, "", lines);
  if (!eps_user.is_null()) resolved["eps"] = resolve_eps(eps_user, line_of("eps"));

  if (ov.seed >= 0) resolved["seed"] = ov.seed;
  if (!ov.output_dir.empty()) resolved["output_dir"] = ov.output_dir;
  if (!ov.cache_dir.empty()) resolved["cache_dir"] = ov.cache_dir;
  if (ov.threads > 0) resolved["threads"] = ov.threads;
  if (resolved["seed"].get<long long>() < 0) throw ConfigError("seed must be non-negative", line_of("seed"));
  if (resolved["threads"].get<int>() < 1) throw ConfigError("threads must be at least 1", line_of("threads"));
  if (resolved.contains("eps") && resolved["eps"].size() < 1) throw ConfigError("eps window is empty", line_of("eps"));

  // Settings whose default depends on other settings are written out here so
  // the echoed config carries the value actually used.
  if (name == "isometry-check") {
    const bool spectral = resolved["engine"]["name"] == "spectral";
    Json& v = resolved["verdict"];
    if (v["max_residual"].get<double>() < 0.0) v["max_residual"] = spectral ? 1e-12 : 1e-8;
    if (v["max_commutation"].get<double>() < 0.0) v["max_commutation"] = spectral ? 1e-10 : 1e-6;
  }
  if (name == "weyl" && resolved["verdict"]["expected_exponent"].get<double>() < 0.0) {
    const std::string m = resolved["geometry"]["model"];
    resolved["verdict"]["expected_exponent"] = m == "flat_torus" || m == "warped_slab" ? 1.0 : 0.5;
  }

  ExperimentConfig cfg;
  cfg.experiment = name;
  cfg.resolved = std::move(resolved);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const Overrides& ov) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  ExperimentConfig cfg = parse_config(buf.str(), ov);
  cfg.source = path;
  return cfg;
}

}  // namespace wavemollify::cli
