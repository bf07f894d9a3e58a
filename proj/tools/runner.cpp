#include "runner.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "wavemollify/distributions.hpp"
#include "wavemollify/errors.hpp"
#include "wavemollify/lorentz.hpp"
#include "wavemollify/microlocal.hpp"

#ifndef WAVEMOLLIFY_VERSION
#define WAVEMOLLIFY_VERSION "0.0.0"
#endif

namespace wavemollify::cli {
namespace {

using Clock = std::chrono::steady_clock;

Profile to_profile(const Json& j) {
  return {j.at("base").get<double>(), j.at("amp_t").get<double>(), j.at("amp_x").get<double>(),
          j.at("mode_t").get<int>(), j.at("mode_x").get<int>()};
}

std::size_t count(const Json& j, const char* key) {
  const long long v = j.at(key).get<long long>();
  if (v <= 0) throw ValidationError(std::string("geometry.") + key + " must be positive");
  return static_cast<std::size_t>(v);
}

Geometry build_geometry(const Json& j) {
  const std::string model = j.at("model");
  if (model == "circle") return Geometry::circle(count(j, "n0"), to_profile(j.at("f")), j.at("length0").get<double>());
  if (model == "flat_torus") {
    return Geometry::flat_torus(count(j, "n0"), count(j, "n1"), j.at("length0").get<double>(),
                                j.at("length1").get<double>());
  }
  if (model == "warped_slab") {
    return Geometry::warped_slab(count(j, "n0"), count(j, "n1"), j.at("length0").get<double>(),
                                 j.at("length1").get<double>(), to_profile(j.at("beta")), to_profile(j.at("f")));
  }
  return Geometry::euclidean_line(j.at("half_length").get<double>(), j.at("spacing").get<double>());
}

std::vector<double> eps_window(const Json& cfg) { return cfg.at("eps").get<std::vector<double>>(); }

KernelPair build_kernel(const Json& cfg) {
  const Json& k = cfg.at("kernel");
  double eps_min = 0x1p-9;
  if (cfg.contains("eps")) {
    for (double e : eps_window(cfg)) eps_min = std::min(eps_min, e);
  }
  return KernelPair({k.at("plateau_radius").get<double>(), k.at("support_radius").get<double>()},
                    {k.at("c").get<double>()}, eps_min, k.at("tol").get<double>());
}

RegularizerConfig build_engine(const Json& cfg) {
  const Json& e = cfg.at("engine");
  RegularizerConfig rc;
  rc.engine = parse_engine(e.at("name"));
  rc.nodes_per_unit = e.at("nodes_per_unit");
  rc.cfl = e.at("cfl");
  rc.alias_guard = e.at("alias_guard");
  rc.energy_tol = e.at("energy_tol");
  rc.validate();
  return rc;
}

OrderOptions build_fit(const Json& cfg) {
  const Json& f = cfg.at("fit");
  OrderOptions o;
  o.guard = f.at("guard");
  o.negligible_r2 = f.at("negligible_r2");
  o.noise_floor = f.at("noise_floor");
  return o;
}

DistributionSpec build_spec(const Json& cfg) {
  const Json& d = cfg.at("distribution");
  DistributionSpec s;
  s.kind = parse_kind(d.at("kind"));
  const auto c = d.at("center").get<std::vector<double>>();
  if (c.size() != 2) throw ValidationError("distribution.center needs two entries (t, x)");
  s.center = {c[0], c[1]};
  s.width = d.at("width");
  s.s = d.at("s");
  s.band = d.at("band");
  s.seed = cfg.at("seed").get<std::uint64_t>();
  s.validate();
  return s;
}

// Slab inputs carry an optional time bump factor.
Vector slab_input(const Json& cfg, const LaplaceBeltrami& op, const SpectralBasis& basis) {
  Vector u = make_distribution(build_spec(cfg), op, basis).values;
  const Json& d = cfg.at("distribution");
  if (d.contains("time_bump")) {
    const double hw = d["time_bump"].at("half_width");
    if (hw > 0.0) u = u.cwiseProduct(time_bump(op.geometry(), d["time_bump"].at("center"), hw));
  }
  return u;
}

Json fit_json(const OrderVerdict& v) {
  Json j = {{"slope", v.slope},
            {"intercept_log2", v.intercept},
            {"r_squared", v.r_squared},
            {"samples", v.samples},
            {"floor_hit", v.floor_hit},
            {"tail_slope", v.tail_slope},
            {"class", class_name(v.cls)},
            {"summary", v.describe()}};
  if (v.cls == NetClass::kModerate) j["moderate_n"] = v.moderate_n;
  if (v.cls == NetClass::kNegligible) {
    j["negligible_m"] = v.negligible_m == kUnbounded ? Json("inf") : Json(v.negligible_m);
    j["tail_rule"] = v.tail_rule;
  }
  return j;
}

// Accumulates named threshold checks.
class Checks {
 public:
  void at_most(const std::string& name, double value, double limit) { add(name, value, "<=", limit, value <= limit); }
  void at_least(const std::string& name, double value, double limit) { add(name, value, ">=", limit, value >= limit); }
  void flag(const std::string& name, bool ok) {
    list_.push_back({{"name", name}, {"pass", ok}});
    pass_ = pass_ && ok;
  }
  bool pass() const { return pass_; }
  const Json& json() const { return list_; }

 private:
  void add(const std::string& name, double value, const char* rel, double limit, bool ok) {
    list_.push_back({{"name", name}, {"value", value}, {"relation", rel}, {"limit", limit}, {"pass", ok}});
    pass_ = pass_ && ok;
  }
  Json list_ = Json::array();
  bool pass_ = true;
};

std::string csv(const EpsilonNet& net) {
  std::ostringstream out;
  net.write_csv(out);
  return out.str();
}

double maxof(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

Outcome finish(Checks& checks, Json verdict, Json diag, std::string net_csv) {
  Outcome o;
  verdict["checks"] = checks.json();
  o.pass = checks.pass();
  o.verdict = std::move(verdict);
  o.diagnostics = std::move(diag);
  o.net_csv = std::move(net_csv);
  return o;
}

std::shared_ptr<const LaplaceBeltrami> build_op(const Json& cfg) {
  return std::make_shared<const LaplaceBeltrami>(build_geometry(cfg.at("geometry")));
}

Outcome multiplier_check(const Json& cfg, const EigenCache& cache) {
  auto op = build_op(cfg);
  const KernelPair k = build_kernel(cfg);
  Regularizer reg(op, k, build_engine(cfg), &cache);
  const SpectralBasis& basis = reg.basis();
  const Vector u = make_distribution(build_spec(cfg), *op, basis).values;
  const Vector cu = basis.analyze(u);
  const double scale = cu.cwiseAbs().maxCoeff();
  const Vector& lam = basis.eigenvalues();
  EpsilonNet net{"coefficient_error", eps_window(cfg), {}};
  Json diag = Json::array();
  for (double eps : net.eps) {
    RunDiagnostics d;
    const Vector ct = basis.analyze(reg.apply(u, eps, &d));
    const SpectralMultiplier m(k, eps, std::sqrt(lam.maxCoeff()));
    double worst = 0.0;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      worst = std::max(worst, std::abs(ct[i] - m(std::sqrt(std::max(lam[i], 0.0))) * cu[i]));
    }
    net.values.push_back(scale > 0.0 ? worst / scale : worst);
    diag.push_back(Json::parse(diagnostics_json(d)));
  }
  Checks c;
  c.at_most("max relative coefficient error", maxof(net.values), cfg["verdict"]["max_error"]);
  return finish(c, {}, diag, csv(net));
}

Outcome mollifier_moments(const Json& cfg, const EigenCache& cache) {
  auto op = build_op(cfg);
  const KernelPair k = build_kernel(cfg);
  const Json& v = cfg.at("verdict");
  const int max_moment = v.at("max_moment");
  Regularizer reg(op, k, build_engine(cfg), &cache);
  const Vector u = make_distribution(build_spec(cfg), *op, reg.basis()).values;
  const double un = weighted_norm(u, op->weights());
  EpsilonNet net{"max_moment_error", eps_window(cfg), {}};
  Json per = Json::array();
  Checks c;
  double worst_integral = 0.0, worst_moment = 0.0, worst_conv = 0.0;
  for (double eps : net.eps) {
    const double reach = 2.0 * k.cutoff().c;
    const double h = eps / 16.0;
    const auto n = static_cast<std::size_t>(std::ceil(2.0 * reach / h));
    const LineGrid grid{-reach, 2.0 * reach / static_cast<double>(n), n + 1};
    const auto mu = euclidean_mollifier(eps, k, grid);
    std::vector<double> moments;
    for (int order = 0; order <= max_moment; ++order) {
      double s = 0.0;
      for (std::size_t i = 0; i < grid.count; ++i) s += grid.spacing * std::pow(grid.at(i), order) * mu[i];
      moments.push_back(order == 0 ? s - 1.0 : s);
    }
    RunDiagnostics d;
    const Vector tu = reg.apply(u, eps, &d);
    const Vector conv = euclidean_convolution(*op, u, eps, k);
    const double tn = weighted_norm(tu, op->weights());
    const double rel = weighted_norm(conv - tu, op->weights()) / (tn > 0.0 ? tn : un);
    double mmax = 0.0;
    for (std::size_t i = 1; i < moments.size(); ++i) mmax = std::max(mmax, std::abs(moments[i]));
    worst_integral = std::max(worst_integral, std::abs(moments[0]));
    worst_moment = std::max(worst_moment, mmax);
    worst_conv = std::max(worst_conv, rel);
    net.values.push_back(std::max(std::abs(moments[0]), mmax));
    per.push_back({{"eps", eps}, {"moment_errors", moments}, {"convolution_residual", rel},
                   {"engine", Json::parse(diagnostics_json(d))}});
  }
  c.at_most("|integral - 1|", worst_integral, v.at("integral_tol"));
  c.at_most("max |moment 1..n|", worst_moment, v.at("moment_tol"));
  c.at_most("convolution vs engine, relative", worst_conv, v.at("convolution_tol"));
  return finish(c, {}, per, csv(net));
}

Outcome approx_identity(const Json& cfg, const EigenCache& cache) {
  auto op = build_op(cfg);
  Regularizer reg(op, build_kernel(cfg), build_engine(cfg), &cache);
  const Vector u = make_distribution(build_spec(cfg), *op, reg.basis()).values;
  const OrderOptions fit = build_fit(cfg);
  FieldNet a, b;
  a.eps = b.eps = eps_window(cfg);
  EpsilonNet norms{"norm", a.eps, {}};
  Json diag = Json::array();
  for (double eps : a.eps) {
    RunDiagnostics d;
    a.fields.push_back(reg.apply(u, eps, &d));
    b.fields.push_back(u);
    norms.values.push_back(weighted_norm(a.fields.back(), op->weights()));
    diag.push_back(Json::parse(diagnostics_json(d)));
  }
  const auto tests = bump_panel(op->geometry(), cfg["panel"]["count"].get<std::size_t>(),
                                cfg["panel"]["width_fraction"].get<double>());
  const auto assoc = association_check(a, b, tests, op->weights(), fit);
  EpsilonNet worst{"worst_pairing", a.eps, std::vector<double>(a.eps.size(), 0.0)};
  for (const auto& p : assoc.pairings)
    for (std::size_t i = 0; i < p.size(); ++i) worst.values[i] = std::max(worst.values[i], p.values[i]);
  const auto moderate = estimate_order(norms, fit);
  Checks c;
  c.flag("every pairing decays", assoc.associated);
  c.at_least("worst pairing slope", assoc.worst_slope, cfg["verdict"]["min_slope"]);
  c.at_least("order of ||T_eps u||", moderate.slope, cfg["verdict"]["min_moderate_order"]);
  Json per = Json::array();
  for (const auto& f : assoc.per_test) per.push_back(fit_json(f));
  return finish(c, {{"pairings", per}, {"norm", fit_json(moderate)}}, diag, csv(worst));
}

Outcome negligibility(const Json& cfg, const EigenCache& cache) {
  auto op = build_op(cfg);
  Regularizer reg(op, build_kernel(cfg), build_engine(cfg), &cache);
  const Vector u = make_distribution(build_spec(cfg), *op, reg.basis()).values;
  const double un = weighted_norm(u, op->weights());
  EpsilonNet net{"relative_defect", eps_window(cfg), {}};
  Json diag = Json::array();
  for (double eps : net.eps) {
    RunDiagnostics d;
    net.values.push_back(weighted_norm(reg.apply(u, eps, &d) - u, op->weights()) / un);
    diag.push_back(Json::parse(diagnostics_json(d)));
  }
  const auto fit = estimate_order(net, build_fit(cfg));
  const double need = cfg["verdict"]["min_slope"];
  // An unbounded negligibility verdict or a tail-rule order both certify the slope.
  const double certified = fit.cls == NetClass::kNegligible
                               ? (fit.negligible_m == kUnbounded ? 1e300 : std::max<double>(fit.negligible_m, fit.slope))
                               : fit.slope;
  Checks c;
  c.at_least("certified order", certified, need);
  return finish(c, {{"fit", fit_json(fit)}}, diag, csv(net));
}

Outcome sobolev(const Json& cfg, const EigenCache& cache) {
  auto op = build_op(cfg);
  Regularizer reg(op, build_kernel(cfg), build_engine(cfg), &cache);
  const Vector u = make_distribution(build_spec(cfg), *op, reg.basis()).values;
  EpsilonNet net{"squared_norm", eps_window(cfg), {}};
  Json diag = Json::array();
  for (double eps : net.eps) {
    RunDiagnostics d;
    const double n = weighted_norm(reg.apply(u, eps, &d), op->weights());
    net.values.push_back(n * n);
    diag.push_back(Json::parse(diagnostics_json(d)));
  }
  const auto det = sobolev_detect(net, op->geometry().dim(), build_fit(cfg));
  Checks c;
  c.at_most("|order - expected|", std::abs(det.fit.slope - cfg["verdict"]["expected_order"].get<double>()),
            cfg["verdict"]["tolerance"]);
  return finish(c, {{"fit", fit_json(det.fit)}, {"implied_floor", det.implied_floor}}, diag, csv(net));
}

Outcome support(const Json& cfg, const EigenCache& cache) {
  auto op = build_op(cfg);
  Regularizer reg(op, build_kernel(cfg), build_engine(cfg), &cache);
  const Vector u = make_distribution(build_spec(cfg), *op, reg.basis()).values;
  EpsilonNet net{"outside_mass", eps_window(cfg), {}};
  Json per = Json::array();
  double loc = 0.0;
  for (double eps : net.eps) {
    const auto r = support_radius_check(reg, u, eps, cfg.at("margin_cells"), true);
    net.values.push_back(r.outside_mass);
    loc = std::max(loc, r.localization);
    per.push_back({{"eps", eps}, {"radius", r.radius}, {"outside_mass", r.outside_mass},
                   {"outside_max", r.outside_max}, {"localization", r.localization}, {"pad_cells", r.pad_cells}});
  }
  Checks c;
  c.at_most("outside mass", maxof(net.values), cfg["verdict"]["max_outside"]);
  c.at_most("base vs padded", loc, cfg["verdict"]["max_localization"]);
  return finish(c, {}, per, csv(net));
}

Outcome isometry(const Json& cfg, const EigenCache& cache) {
  auto op = build_op(cfg);
  Regularizer reg(op, build_kernel(cfg), build_engine(cfg), &cache);
  const Vector u = make_distribution(build_spec(cfg), *op, reg.basis()).values;
  const auto s = cfg.at("shift").get<std::vector<long>>();
  if (s.size() != 2) throw ValidationError("shift needs two entries");
  EpsilonNet net{"isometry_residual", eps_window(cfg), {}};
  std::vector<double> comm;
  for (double eps : net.eps) {
    net.values.push_back(isometry_equivariance_check(reg, u, eps, {s[0], s[1]}));
    comm.push_back(commute_with_laplacian_check(reg, u, eps));
  }
  Checks c;
  c.at_most("isometry residual", maxof(net.values), cfg["verdict"]["max_residual"]);
  c.at_most("Laplacian commutation residual", maxof(comm), cfg["verdict"]["max_commutation"]);
  return finish(c, {}, {{"commutation", comm}}, csv(net));
}

Outcome weyl(const Json& cfg, const EigenCache& cache) {
  auto op = build_op(cfg);
  const std::size_t want = cfg.at("eigencount");
  Vector lambda;
  if (op->is_flat() && want == 0) {
    lambda = FourierBasis(*op).eigenvalues();
  } else {
    lambda = eigensystem(*op, want == 0 ? op->size() : want, &cache).values;
  }
  std::sort(lambda.begin(), lambda.end());
  const double threshold = trusted_threshold(op->geometry());
  const auto fit = weyl_exponent(lambda, threshold);
  std::ostringstream out;
  out.precision(17);
  out << "lambda,count\n";
  for (Eigen::Index i = 0; i < lambda.size() && lambda[i] <= threshold; ++i) out << lambda[i] << ',' << i + 1 << '\n';
  Checks c;
  c.at_most("|exponent - expected|", std::abs(fit.exponent - cfg["verdict"]["expected_exponent"].get<double>()),
            cfg["verdict"]["tolerance"]);
  c.at_least("trusted eigenvalues", static_cast<double>(fit.trusted), cfg["verdict"]["min_trusted"]);
  return finish(c,
                {{"exponent", fit.exponent}, {"r_squared", fit.r_squared}, {"trusted", fit.trusted},
                 {"threshold", threshold}},
                {{"eigenvalues", lambda.size()}}, out.str());
}

Json result_diag(const ExperimentResult& r) {
  Json runs = Json::array();
  for (const auto& d : r.diagnostics) runs.push_back(Json::parse(diagnostics_json(d)));
  Json j = {{"input_l2", r.input_norm}, {"input_sobolev", r.sobolev_norm}, {"net_over_eps2", r.ratio}, {"runs", runs}};
  if (!r.bound.empty()) j["proof_bound"] = r.bound;
  if (r.c1 >= 0.0) j["c1"] = r.c1;
  return j;
}

Outcome commutator(const Json& cfg, const EigenCache& cache) {
  const std::string name = cfg.at("experiment");
  auto op = build_op(cfg);
  LorentzSplit split(op);
  Regularizer reg(op, build_kernel(cfg), build_engine(cfg), &cache);
  const Vector u = slab_input(cfg, *op, reg.basis());
  const Json& v = cfg.at("verdict");
  ExperimentOptions opt;
  opt.eps = eps_window(cfg);
  opt.fit = build_fit(cfg);
  opt.proof_bound = v.value("check_bound", false);
  ExperimentResult r;
  if (name == "commutator") {
    r = commutator_experiment(split, reg, u, opt);
  } else if (name == "dt-commutator") {
    r = dt_commutator_experiment(split, reg, u, opt);
  } else {
    const Json& a = cfg.at("alpha");
    r = mult_commutator_experiment(split, reg, u,
                                   cosine_multiplier(op->geometry(), a.at("base"), a.at("amplitude"), a.at("mode")),
                                   opt);
  }
  Checks c;
  c.at_least("slope", r.fit.slope, v.at("min_slope"));
  c.at_least("R^2", r.fit.r_squared, v.at("min_r2"));
  if (opt.proof_bound) {
    double excess = 0.0;
    for (std::size_t i = 0; i < r.bound.size(); ++i) excess = std::max(excess, r.net.values[i] / r.bound[i]);
    c.at_most("max net / proof bound", excess, 1.0);
  }
  return finish(c, {{"fit", fit_json(r.fit)}}, result_diag(r), csv(r.net));
}

Outcome slice(const Json& cfg, const EigenCache& cache) {
  auto op = build_op(cfg);
  const Geometry& g = op->geometry();
  LorentzSplit split(op);
  const KernelPair k = build_kernel(cfg);
  const RegularizerConfig rc = build_engine(cfg);
  Regularizer reg(op, k, rc, &cache);
  SliceRegularizers slices(g, k, rc, &cache);
  const Json& p = cfg.at("panel");
  const auto panel = slice_panel(g, p.at("levels"), p.at("lo"), p.at("hi"));

  const DistributionSpec spec = build_spec(cfg);
  const bool constant = spec.kind == DistributionKind::kConstant;
  Vector u;
  if (constant) {
    u = Vector::Ones(static_cast<Eigen::Index>(g.size()));
  } else {
    // The S-profile is drawn on the flat circle and spread along t by the time bump.
    const LaplaceBeltrami circle(Geometry::circle(g.axis(1).n, Profile{}, g.axis(1).length()));
    const FourierBasis basis(circle);
    const Vector b = make_distribution(spec, circle, basis).values;
    Vector a = Vector::Ones(static_cast<Eigen::Index>(g.axis(0).n));
    const Json& tb = cfg["distribution"].at("time_bump");
    if (tb.at("half_width").get<double>() > 0.0) {
      const Vector bump = time_bump(g, tb.at("center"), tb.at("half_width"));
      for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = bump[i * static_cast<Eigen::Index>(g.axis(1).n)];
    }
    u = tensor_product(g, a, b);
  }
  ExperimentOptions opt;
  opt.eps = eps_window(cfg);
  opt.fit = build_fit(cfg);
  const auto r = slice_experiment(split, reg, slices, u, panel, opt);
  Checks c;
  if (constant) {
    double fmax = 0.0;
    for (std::size_t q = 0; q < g.size(); ++q) fmax = std::max(fmax, g.f(g.point(q)[0], g.point(q)[1]));
    double worst = 0.0;
    for (std::size_t i = 0; i < r.result.net.size(); ++i) {
      worst = std::max(worst, r.result.net.values[i] / (tail_bound(r.result.net.eps[i], k) * std::sqrt(g.axis(1).length() * fmax)));
    }
    c.at_most("net / (tail bound * sqrt(|S|))", worst, 1.0);
  } else {
    c.at_least("slope", r.result.fit.slope, cfg["verdict"]["min_slope"]);
    c.at_least("R^2", r.result.fit.r_squared, cfg["verdict"]["min_r2"]);
  }
  Json d = result_diag(r.result);
  d["panel"] = r.panel;
  d["argmax"] = r.argmax;
  return finish(c, {{"fit", fit_json(r.result.fit)}}, d, csv(r.result.net));
}

Outcome slice_assoc(const Json& cfg, const EigenCache& cache) {
  auto op = build_op(cfg);
  const Geometry& g = op->geometry();
  LorentzSplit split(op);
  const KernelPair k = build_kernel(cfg);
  const RegularizerConfig rc = build_engine(cfg);
  Regularizer reg(op, k, rc, &cache);
  SliceRegularizers slices(g, k, rc, &cache);
  const Vector u = slice_delta_family(g, cfg.at("x0"));
  const auto tests = bump_panel(Geometry::circle(g.axis(1).n, Profile{}, g.axis(1).length()),
                                cfg["panel"]["count"].get<std::size_t>(), cfg["panel"]["width_fraction"].get<double>());
  ExperimentOptions opt;
  opt.eps = eps_window(cfg);
  opt.fit = build_fit(cfg);
  EpsilonNet worst{"worst_pairing", opt.eps, std::vector<double>(opt.eps.size(), 0.0)};
  Checks c;
  Json per = Json::array();
  for (std::size_t level : cfg.at("levels").get<std::vector<std::size_t>>()) {
    const auto v = slice_association_check(split, reg, slices, u, level, tests, opt);
    for (const auto& p : v.pairings)
      for (std::size_t i = 0; i < p.size(); ++i) worst.values[i] = std::max(worst.values[i], p.values[i]);
    c.flag("associated at level " + std::to_string(level), v.associated);
    per.push_back({{"level", level}, {"worst_slope", v.worst_slope}, {"associated", v.associated}});
  }
  return finish(c, {{"levels", per}}, Json::object(), csv(worst));
}

Outcome wf_probe(const Json& cfg, const EigenCache& cache) {
  auto op = build_op(cfg);
  Regularizer reg(op, build_kernel(cfg), build_engine(cfg), &cache);
  const Json& p = cfg.at("probe");
  ConeProbe probe;
  const auto base = p.at("base").get<std::vector<double>>();
  if (base.size() != 2) throw ValidationError("probe.base needs two entries");
  probe.base = {base[0], base[1]};
  probe.half_angle = p.at("half_angle");
  probe.window_radius = p.at("window_radius");
  probe.l_grid = p.at("l_grid").get<std::vector<int>>();
  probe.gap_l_max = p.at("gap_l_max");
  probe.guard = p.at("guard");
  probe.eps = eps_window(cfg);
  probe.validate();
  const auto panel = wavefront_panel(reg, probe);

  Checks c;
  std::ostringstream all;
  all.precision(17);
  all << "input,direction,l,eps,value\n";
  Json entries = Json::array();
  std::string primary;
  double conormal_gap = 0.0, tangential_gap = 0.0;
  for (const auto& e : panel) {
    c.flag(e.input + " " + e.direction + " matches classical", e.decay.regular == e.classical_regular);
    if (e.input == "delta_line" && e.direction == "conormal") conormal_gap = e.decay.order_gap;
    if (e.input == "delta_line" && e.direction == "tangential") tangential_gap = e.decay.order_gap;
    for (std::size_t l = 0; l < e.decay.nets.size(); ++l) {
      const auto& net = e.decay.nets[l];
      for (std::size_t i = 0; i < net.size(); ++i)
        all << e.input << ',' << e.direction << ',' << probe.l_grid[l] << ',' << net.eps[i] << ',' << net.values[i] << '\n';
      if (e.input == "delta_line" && e.direction == "conormal" && probe.l_grid[l] == probe.gap_l_max) primary = csv(net);
    }
    entries.push_back({{"input", e.input}, {"direction", e.direction}, {"classical_regular", e.classical_regular},
                       {"regular", e.decay.regular}, {"uniform_n", e.decay.uniform_n}, {"orders", e.decay.orders},
                       {"order_gap", e.decay.order_gap}});
  }
  c.at_least("delta line conormal - tangential gap", conormal_gap - tangential_gap, cfg["verdict"]["min_gap"]);
  Outcome o = finish(c, {{"panel", entries}}, Json::object(), primary);
  o.extra_files["nets.csv"] = all.str();
  return o;
}

Outcome cross_engine(const Json& cfg, const EigenCache& cache) {
  auto op = build_op(cfg);
  const KernelPair k = build_kernel(cfg);
  RegularizerConfig rs = build_engine(cfg), rw = rs;
  rs.engine = Engine::kSpectral;
  rw.engine = Engine::kWaveGroup;
  Regularizer spec(op, k, rs, &cache), wave(op, k, rw, &cache);
  Vector u = make_distribution(build_spec(cfg), *op, spec.basis()).values;
  const Json& d = cfg.at("distribution");
  if (d.contains("time_bump") && d["time_bump"].at("half_width").get<double>() > 0.0)
    u = u.cwiseProduct(time_bump(op->geometry(), d["time_bump"].at("center"), d["time_bump"].at("half_width")));
  EpsilonNet net{"relative_difference", eps_window(cfg), {}};
  Json diag = Json::array();
  for (double eps : net.eps) {
    RunDiagnostics ds, dw;
    const Vector a = spec.apply(u, eps, &ds);
    const Vector b = wave.apply(u, eps, &dw);
    net.values.push_back(weighted_norm(a - b, op->weights()) / weighted_norm(a, op->weights()));
    diag.push_back({{"spectral", Json::parse(diagnostics_json(ds))}, {"wave", Json::parse(diagnostics_json(dw))}});
  }
  Checks c;
  c.at_most("max relative difference", maxof(net.values), cfg["verdict"]["max_relative"]);
  return finish(c, {}, diag, csv(net));
}

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + p.string());
}

}  // namespace

Outcome run_experiment(const ExperimentConfig& cfg, const EigenCache& cache) {
  const Json& j = cfg.resolved;
  const std::string& n = cfg.experiment;
  if (n == "multiplier-check") return multiplier_check(j, cache);
  if (n == "mollifier-moments") return mollifier_moments(j, cache);
  if (n == "approx-identity") return approx_identity(j, cache);
  if (n == "negligibility") return negligibility(j, cache);
  if (n == "sobolev-detect") return sobolev(j, cache);
  if (n == "support-check") return support(j, cache);
  if (n == "isometry-check") return isometry(j, cache);
  if (n == "weyl") return weyl(j, cache);
  if (n == "commutator" || n == "dt-commutator" || n == "mult-commutator") return commutator(j, cache);
  if (n == "slice") return slice(j, cache);
  if (n == "slice-assoc") return slice_assoc(j, cache);
  if (n == "wf-probe") return wf_probe(j, cache);
  if (n == "cross-engine") return cross_engine(j, cache);
  throw ConfigError("unknown experiment '" + n + "'");
}

int run_and_write(const ExperimentConfig& cfg) {
  const std::filesystem::path dir = cfg.resolved.at("output_dir").get<std::string>();
  std::filesystem::create_directories(dir);
  const EigenCache cache(cfg.resolved.at("cache_dir").get<std::string>());
  const auto start = Clock::now();
  Outcome o = run_experiment(cfg, cache);
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();

  Json verdict = o.verdict.is_null() ? Json::object() : o.verdict;
  verdict["experiment"] = cfg.experiment;
  verdict["pass"] = o.pass;
  verdict["runtime_seconds"] = seconds;
  verdict["finished_utc"] = now_utc();
  verdict["version"] = WAVEMOLLIFY_VERSION;
  verdict["config"] = cfg.resolved;
  if (!cfg.source.empty()) verdict["config_path"] = cfg.source.string();

  write_file(dir / "net.csv", o.net_csv);
  write_file(dir / "verdict.json", verdict.dump(2) + "\n");
  write_file(dir / "diag.json", o.diagnostics.dump(2) + "\n");
  for (const auto& [name, text] : o.extra_files) write_file(dir / name, text);
  return o.pass ? 0 : 2;
}

int cache_admin(const std::string& cmd, const std::filesystem::path& dir, std::ostream& out) {
  if (!std::filesystem::is_directory(dir)) throw ValidationError("cache directory '" + dir.string() + "' does not exist");
  const EigenCache cache(dir);
  if (cmd == "list") {
    for (const auto& e : cache.list()) {
      out << std::hex << e.fingerprint << std::dec << ' ' << e.count << " pairs " << e.unknowns << " unknowns "
          << e.bytes << " bytes" << (e.intact ? "" : " CORRUPTED " + e.problem) << ' ' << e.path.filename().string()
          << '\n';
    }
    return 0;
  }
  if (cmd == "purge") {
    out << "removed " << cache.purge() << " entries\n";
    return 0;
  }
  if (cmd == "verify") {
    bool ok = true;
    for (const auto& e : cache.list()) {
      if (!e.intact) {
        out << e.path.filename().string() << " CORRUPTED " << e.problem << '\n';
        ok = false;
        continue;
      }
      const LaplaceBeltrami op(Geometry::deserialize(e.geometry_text));
      const auto es = cache.load(e.fingerprint, e.count);
      if (!es || op.fingerprint() != e.fingerprint) {
        out << e.path.filename().string() << " UNREADABLE\n";
        ok = false;
        continue;
      }
      const double res = es->max_residual(op);
      const bool pass = res <= 1e-8;
      ok = ok && pass;
      out << e.path.filename().string() << " residual " << res << (pass ? " ok" : " FAIL") << '\n';
    }
    return ok ? 0 : 2;
  }
  throw ValidationError("unknown cache command '" + cmd + "' (list, purge, verify)");
}

}  // namespace wavemollify::cli
