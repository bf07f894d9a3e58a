#include "wavemollify/lorentz.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "wavemollify/distributions.hpp"
#include "wavemollify/errors.hpp"

namespace wavemollify {

namespace {

constexpr double kPi = 3.14159265358979323846;

double l2(const LaplaceBeltrami& op, const Vector& u) { return weighted_norm(u, op.weights()); }

void check_pair(const LorentzSplit& split, const Regularizer& reg) {
  if (reg.op().fingerprint() != split.op().fingerprint()) {
    throw ValidationError("regularizer and splitting live on different grids");
  }
}

template <class Measure>
ExperimentResult run_net(const char* label, const LorentzSplit& split, const Regularizer& reg, const Vector& u,
                         const ExperimentOptions& opt, bool compact, Measure measure) {
  check_pair(split, reg);
  if (u.size() != static_cast<Eigen::Index>(split.op().size())) throw ValidationError("input is not on the slab grid");
  if (compact) require_time_support(split, reg, u);
  ExperimentResult r;
  r.net.label = label;
  r.net.eps = opt.eps;
  r.input_norm = l2(split.op(), u);
  for (double eps : opt.eps) {
    RunDiagnostics d;
    const double v = measure(eps, &d);
    r.net.values.push_back(v);
    r.ratio.push_back(v / (eps * eps));
    r.diagnostics.push_back(d);
  }
  r.fit = estimate_order(r.net, opt.fit);
  return r;
}

}  // namespace

LorentzSplit::LorentzSplit(std::shared_ptr<const LaplaceBeltrami> slab) : op_(std::move(slab)) {
  if (!op_ || op_->geometry().model() != Model::kWarpedSlab) {
    throw ValidationError("the Lorentzian splitting needs a warped slab");
  }
}

Vector LorentzSplit::theta(const Vector& u) const { return op_->apply_axis(0, u); }

Vector LorentzSplit::spatial(const Vector& u) const { return op_->apply_axis(1, u); }

Vector LorentzSplit::box(const Vector& u) const { return spatial(u) - theta(u); }

Vector LorentzSplit::dt(const Vector& u) const {
  const double h = geometry().axis(0).spacing;
  Vector out(u.size());
  for (std::size_t p = 0; p < op_->size(); ++p) {
    out[static_cast<Eigen::Index>(p)] = (u[static_cast<Eigen::Index>(op_->neighbour(p, 0, +1))] -
                                         u[static_cast<Eigen::Index>(op_->neighbour(p, 0, -1))]) /
                                        (2.0 * h);
  }
  return out;
}

Vector LorentzSplit::theta_laplacian_commutator(const Vector& u) const {
  return theta(op_->apply(u)) - op_->apply(theta(u));
}

double LorentzSplit::identity_residual(const Vector& u) const {
  const double n = u.norm();
  if (n == 0.0) return 0.0;
  return (box(u) - op_->apply(u) + 2.0 * theta(u)).norm() / n;
}

bool LorentzSplit::is_static() const {
  return geometry().beta_profile().amp_t == 0.0 && geometry().f_profile().amp_t == 0.0;
}

Vector cosine_multiplier(const Geometry& slab, double base, double amplitude, int mode) {
  const double len = slab.axis(slab.dim() - 1).length();
  Vector out(static_cast<Eigen::Index>(slab.size()));
  for (std::size_t p = 0; p < slab.size(); ++p) {
    out[static_cast<Eigen::Index>(p)] = base + amplitude * std::cos(2.0 * kPi * mode * slab.point(p)[1] / len);
  }
  return out;
}

void require_time_support(const LorentzSplit& split, const Regularizer& reg, const Vector& u) {
  const Geometry& g = split.geometry();
  const Axis& ta = g.axis(0);
  const std::size_t n1 = g.axis(1).n;
  std::vector<bool> occupied(ta.n, false);
  for (std::size_t i = 0; i < ta.n; ++i) {
    for (std::size_t j = 0; j < n1; ++j) {
      if (u[static_cast<Eigen::Index>(i * n1 + j)] != 0.0) {
        occupied[i] = true;
        break;
      }
    }
  }
  if (std::none_of(occupied.begin(), occupied.end(), [](bool b) { return b; })) return;
  // Longest run of empty time levels, cyclically.
  std::size_t best = 0, run = 0;
  for (std::size_t k = 0; k < 2 * ta.n; ++k) {
    if (occupied[k % ta.n]) run = 0;
    else best = std::max(best, ++run);
  }
  best = std::min(best, ta.n);
  // The empty gap spans best + 1 cells between the two nearest occupied levels.
  double beta_max = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    const auto x = g.point(p);
    beta_max = std::max(beta_max, g.beta(x[0], x[1]));
  }
  const double gap = static_cast<double>(best + 1) * ta.spacing * std::sqrt(beta_max);
  const double radius = 2.0 * reg.kernel().cutoff().c;
  if (gap <= 2.0 * radius) {
    throw ValidationError("support violation: the time support fattened by 2c = " + std::to_string(radius) +
                          " meets itself across the periodic seam (gap " + std::to_string(gap) + ")");
  }
}

ExperimentResult commutator_experiment(const LorentzSplit& split, const Regularizer& reg, const Vector& u,
                                       const ExperimentOptions& opt) {
  const Vector bu = split.box(u);
  ExperimentResult r = run_net("box commutator", split, reg, u, opt, true, [&](double eps, RunDiagnostics* d) {
    return l2(split.op(), reg.apply(bu, eps, d) - split.box(reg.apply(u, eps)));
  });
  const Vector& lambda = reg.basis().eigenvalues();
  const Vector c = reg.basis().analyze(u);
  r.sobolev_norm = sobolev_norm(c, lambda, 3.0);
  if (opt.proof_bound) {
    r.c1 = theta_commutator_norm(split, reg);
    const double moment = 2.0 * reg.kernel().transform().abs_moment(0.0, 2);
    for (double eps : opt.eps) r.bound.push_back(2.0 * r.c1 / (4.0 * kPi) * r.sobolev_norm * moment * eps * eps);
  }
  return r;
}

ExperimentResult dt_commutator_experiment(const LorentzSplit& split, const Regularizer& reg, const Vector& u,
                                          const ExperimentOptions& opt) {
  const Vector du = split.dt(u);
  ExperimentResult r = run_net("dt commutator", split, reg, u, opt, true, [&](double eps, RunDiagnostics* d) {
    return l2(split.op(), reg.apply(du, eps, d) - split.dt(reg.apply(u, eps)));
  });
  r.sobolev_norm = sobolev_norm(reg.basis().analyze(u), reg.basis().eigenvalues(), 2.0);
  return r;
}

ExperimentResult mult_commutator_experiment(const LorentzSplit& split, const Regularizer& reg, const Vector& u,
                                            const Vector& alpha, const ExperimentOptions& opt) {
  if (alpha.size() != u.size()) throw ValidationError("multiplier is not on the slab grid");
  const Vector au = alpha.cwiseProduct(u);
  ExperimentResult r = run_net("multiplication commutator", split, reg, u, opt, true, [&](double eps, RunDiagnostics* d) {
    return l2(split.op(), reg.apply(au, eps, d) - alpha.cwiseProduct(reg.apply(u, eps)));
  });
  r.sobolev_norm = sobolev_norm(reg.basis().analyze(u), reg.basis().eigenvalues(), 1.0);
  return r;
}

double theta_commutator_norm(const LorentzSplit& split, const Regularizer& reg, int iterations) {
  check_pair(split, reg);
  const SpectralBasis& basis = reg.basis();
  if (!basis.complete()) throw ValidationError("operator norm estimate needs a complete basis");
  auto smooth = [&](const Vector& v) {
    return basis.apply([](double lam) { return std::pow(1.0 + std::max(lam, 0.0), -1.5); }, v);
  };
  // A = [Theta, Delta] S with S = (1 - Delta)^{-3/2}; A* A = -S [Theta, Delta]^2 S.
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  Vector v(static_cast<Eigen::Index>(split.op().size()));
  for (auto& x : v) x = normal(rng);
  const Vector& w = split.op().weights();
  v /= weighted_norm(v, w);
  double sigma2 = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const Vector av = split.theta_laplacian_commutator(smooth(v));
    const Vector next = -smooth(split.theta_laplacian_commutator(av));
    sigma2 = weighted_inner(v, next, w);
    const double n = weighted_norm(next, w);
    if (n == 0.0) return 0.0;
    v = next / n;
  }
  return std::sqrt(std::max(sigma2, 0.0));
}

std::vector<std::size_t> slice_panel(const Geometry& slab, std::size_t n, double lo, double hi) {
  if (slab.dim() != 2) throw ValidationError("slice panel needs a slab");
  if (n == 0 || !(lo > 0.0) || !(hi < 1.0) || !(lo <= hi)) {
    throw ValidationError("slice panel must be a non-empty range strictly inside (0, 1) of the period");
  }
  const std::size_t nt = slab.axis(0).n;
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < n; ++k) {
    const double frac = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    out.push_back(static_cast<std::size_t>(std::lround(frac * static_cast<double>(nt))) % nt);
  }
  return out;
}

SliceRegularizers::SliceRegularizers(const Geometry& slab, KernelPair kernel, RegularizerConfig cfg,
                                     const EigenCache* cache)
    : slab_(slab), kernel_(std::move(kernel)), cfg_(cfg), cache_(cache) {}

const Regularizer& SliceRegularizers::at(std::size_t t_index) const {
  auto it = slices_.find(t_index);
  if (it == slices_.end()) {
    auto op = std::make_shared<const LaplaceBeltrami>(slice_geometry(slab_, t_index));
    it = slices_.emplace(t_index, std::make_unique<Regularizer>(op, kernel_, cfg_, cache_)).first;
  }
  return *it->second;
}

SliceResult slice_experiment(const LorentzSplit& split, const Regularizer& reg, const SliceRegularizers& slices,
                             const Vector& u, const std::vector<std::size_t>& panel, const ExperimentOptions& opt) {
  const std::size_t nt = split.geometry().axis(0).n;
  for (std::size_t t : panel) {
    if (t >= nt) throw ValidationError("slice level " + std::to_string(t) + " outside the slab");
    if (t < 2 || t + 2 > nt) {
      throw ValidationError("slice level " + std::to_string(t) + " is within two cells of the periodization seam");
    }
  }
  if (panel.empty()) throw ValidationError("empty slice panel");
  SliceResult out;
  out.panel = panel;
  out.result = run_net("slice restriction", split, reg, u, opt, false, [&](double eps, RunDiagnostics* d) {
    const Vector tu = reg.apply(u, eps, d);
    double worst = -1.0;
    std::size_t arg = panel.front();
    for (std::size_t t : panel) {
      const Slice slab_side = restrict_to_slice(split.op(), tu, t);
      const Slice input = restrict_to_slice(split.op(), u, t);
      const Vector slice_side = slices.at(t).apply(input.values, eps);
      const double v = weighted_norm(slab_side.values - slice_side, slab_side.weights);
      if (v > worst) {
        worst = v;
        arg = t;
      }
    }
    out.argmax.push_back(arg);
    return worst;
  });
  return out;
}

AssociationVerdict slice_association_check(const LorentzSplit& split, const Regularizer& reg,
                                           const SliceRegularizers& slices, const Vector& u, std::size_t t_index,
                                           const std::vector<Vector>& tests, const ExperimentOptions& opt) {
  check_pair(split, reg);
  const Slice input = restrict_to_slice(split.op(), u, t_index);
  FieldNet a, b;
  a.eps = b.eps = opt.eps;
  for (double eps : opt.eps) {
    a.fields.push_back(restrict_to_slice(split.op(), reg.apply(u, eps), t_index).values);
    b.fields.push_back(slices.at(t_index).apply(input.values, eps));
  }
  return association_check(a, b, tests, input.weights, opt.fit);
}

Vector slice_delta_family(const Geometry& slab, double x0) {
  if (slab.dim() != 2) throw ValidationError("delta family needs a slab");
  const Axis& sa = slab.axis(1);
  const std::size_t j = nearest_node(Geometry::circle(sa.n, Profile{}, sa.length()), {0.0, x0});
  Vector out = Vector::Zero(static_cast<Eigen::Index>(slab.size()));
  for (std::size_t i = 0; i < slab.axis(0).n; ++i) {
    const double t = slab.axis(0).coordinate(i);
    out[static_cast<Eigen::Index>(i * sa.n + j)] = 1.0 / (slab.f(t, sa.coordinate(j)) * sa.spacing);
  }
  return out;
}

std::vector<Vector> bump_panel(const Geometry& circle, std::size_t count, double width_fraction) {
  if (circle.dim() != 1) throw ValidationError("bump panel lives on a one-dimensional geometry");
  const double len = circle.axis(0).length();
  const PlateauFunction bump{0.5 * width_fraction * len, width_fraction * len};
  std::vector<Vector> out;
  for (std::size_t k = 0; k < count; ++k) {
    const double c = circle.axis(0).origin + len * (static_cast<double>(k) + 0.5) / static_cast<double>(count);
    Vector v(static_cast<Eigen::Index>(circle.size()));
    for (std::size_t p = 0; p < circle.size(); ++p) {
      double d = std::fmod(std::abs(circle.point(p)[1] - c), len);
      d = std::min(d, len - d);
      v[static_cast<Eigen::Index>(p)] = bump(d);
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace wavemollify
