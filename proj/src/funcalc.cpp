#include "wavemollify/funcalc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <sstream>

#include <json.hpp>

#include "wavemollify/errors.hpp"

namespace wavemollify {
namespace {

constexpr double kPi = std::numbers::pi;

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

const char* engine_name(Engine e) { return e == Engine::kSpectral ? "spectral" : "wave"; }

Engine parse_engine(const std::string& name) {
  if (name == "spectral") return Engine::kSpectral;
  if (name == "wave" || name == "wavegroup" || name == "wave_group") return Engine::kWaveGroup;
  throw ValidationError("unknown engine '" + name + "' (expected spectral or wave)");
}

void RegularizerConfig::validate() const {
  if (!(cfl > 0.0 && cfl <= 0.5)) throw ValidationError("CFL factor must lie in (0, 0.5]");
  if (!(nodes_per_unit >= 16.0)) throw ValidationError("need at least 16 quadrature nodes per unit of eps");
  if (!(alias_guard >= 0.0)) throw ValidationError("alias guard must be non-negative");
  if (!(energy_tol > 0.0)) throw ValidationError("energy tolerance must be positive");
  if (!(cross_tol > 0.0)) throw ValidationError("cross-engine tolerance must be positive");
}

WavePlan plan_wave(double s_max, double max_step, double spectral_bound, double cfl) {
  if (!(s_max > 0.0)) throw ValidationError("wave propagation needs s_max > 0");
  const double root = std::sqrt(std::max(spectral_bound, 0.0));
  double step = std::min(max_step, root > 0.0 ? 2.0 * cfl / root : s_max);
  WavePlan plan;
  plan.steps = static_cast<std::size_t>(std::ceil(s_max / step - 1e-9));
  plan.steps = std::max<std::size_t>(plan.steps, 1);
  plan.step = s_max / static_cast<double>(plan.steps);
  plan.theta_max = plan.step * root;
  const double budget = 1e-17 / (1.0 + s_max * root);
  const double t2 = plan.theta_max * plan.theta_max;
  int j = 1;
  while (j < 40 && std::pow(t2, j) / factorial(2 * j + 2) > budget) ++j;
  plan.taylor_terms = j;
  return plan;
}

WaveGroup::WaveGroup(const LaplaceBeltrami& op, WavePlan plan, double energy_tol)
    : op_(&op), plan_(plan), energy_tol_(energy_tol) {
  if (plan_.theta_max > 2.0) {
    std::ostringstream msg;
    msg << "wave step " << plan_.step << " violates the CFL bound (theta_max " << plan_.theta_max
        << " > 2)";
    throw ValidationError(msg.str());
  }
}

Vector WaveGroup::apply_c(const Vector& w) const {
  // Horner form of sum_j (-ds^2 A)^j / (2j)! with A = -Delta, so -ds^2 A = ds^2 Delta.
  const double d2 = plan_.step * plan_.step;
  const int J = plan_.taylor_terms;
  Vector acc = w / factorial(2 * J);
  for (int j = J - 1; j >= 0; --j) {
    acc = (d2 * op_->apply(acc) + w / factorial(2 * j)).eval();
  }
  return acc;
}

WaveDiagnostics WaveGroup::run(const Vector& u0,
                               const std::function<void(std::size_t, const Vector&)>& visit) const {
  WaveDiagnostics diag;
  diag.step = plan_.step;
  diag.steps = plan_.steps;
  diag.taylor_terms = plan_.taylor_terms;
  diag.theta_max = plan_.theta_max;
  const Vector& w = op_->weights();
  const double d2 = plan_.step * plan_.step;

  Vector prev = u0;
  visit(0, prev);
  Vector cw = apply_c(prev);
  diag.matvecs += static_cast<std::size_t>(plan_.taylor_terms);
  // Zero initial velocity: w_1 = C w_0.
  Vector cur = cw;
  double e0 = -1.0;
  for (std::size_t n = 1; n <= plan_.steps; ++n) {
    // Energy of the pair (w_{n-1}, w_n) using C w_{n-1} from the previous step.
    const Vector diff = cur - prev;
    const double energy = weighted_inner(diff, diff, w) / d2 +
                          2.0 / d2 * weighted_inner(cur, prev - cw, w);
    if (e0 < 0.0) e0 = energy;
    const double scale = std::max(e0, 1e-300);
    const double drift = std::abs(energy - e0) / scale;
    if (e0 > 1e-280) diag.energy_drift = std::max(diag.energy_drift, drift);
    if (e0 > 1e-280 && (drift > energy_tol_ || !std::isfinite(energy))) {
      std::ostringstream msg;
      msg << "wave energy drift " << drift << " at step " << n << " of " << plan_.steps
          << " (ds=" << plan_.step << ", theta_max=" << plan_.theta_max
          << ", taylor terms=" << plan_.taylor_terms << ")";
      throw ConvergenceError(msg.str());
    }
    visit(n, cur);
    if (n == plan_.steps) break;
    cw = apply_c(cur);
    diag.matvecs += static_cast<std::size_t>(plan_.taylor_terms);
    Vector next = 2.0 * cw - prev;
    prev = std::move(cur);
    cur = std::move(next);
  }
  return diag;
}

WaveTrajectory wave_propagate(const LaplaceBeltrami& op, const Vector& u0, double s_max,
                              double cfl, double max_step) {
  if (!(cfl > 0.0 && cfl <= 0.5)) throw ValidationError("CFL factor must lie in (0, 0.5]");
  WaveGroup group(op, plan_wave(s_max, max_step, op.spectral_bound(), cfl));
  WaveTrajectory traj;
  traj.diagnostics = group.run(u0, [&](std::size_t n, const Vector& w) {
    traj.times.push_back(group.plan().step * static_cast<double>(n));
    traj.states.push_back(w);
  });
  return traj;
}

Regularizer::Regularizer(std::shared_ptr<const LaplaceBeltrami> op, KernelPair kernel,
                         RegularizerConfig cfg, const EigenCache* cache)
    : op_(std::move(op)), kernel_(std::move(kernel)), cfg_(cfg), cache_(cache) {
  cfg_.validate();
}

const SpectralBasis& Regularizer::basis() const {
  if (!basis_) {
    if (cfg_.eigencount == 0 || op_->is_flat()) {
      basis_ = make_basis(*op_, cache_);
    } else {
      basis_ = std::make_unique<EigenBasis>(eigensystem(*op_, cfg_.eigencount, cache_),
                                            op_->shared_weights());
    }
  }
  return *basis_;
}

const Vector& Regularizer::symbol(double eps) const {
  auto it = symbols_.find(eps);
  if (it != symbols_.end()) return it->second;
  const Vector& lam = basis().eigenvalues();
  Vector roots = lam.cwiseMax(0.0).cwiseSqrt();
  const SpectralMultiplier m(kernel_, eps, roots.maxCoeff(), cfg_.mode);
  const std::vector<double> values = m.evaluate(std::span<const double>(roots.data(), roots.size()));
  symbol_nodes_[eps] = m.node_count();
  return symbols_.emplace(eps, Eigen::Map<const Vector>(values.data(), roots.size())).first->second;
}

Vector Regularizer::apply_spectral(const Vector& u, double eps, RunDiagnostics* diag) const {
  const Vector& sym = symbol(eps);
  if (diag) {
    diag->engine = Engine::kSpectral;
    diag->eps = eps;
    diag->tail_bound = tail_bound(eps, kernel_);
    diag->quadrature_nodes = symbol_nodes_[eps];
  }
  return basis().apply_diagonal(sym, u);
}

WavePlan Regularizer::wave_plan(double eps) const {
  const double bound = op_->spectral_bound();
  const double alias = 2.0 * kPi /
                       (cfg_.alias_guard + kernel_.plateau().support_radius / eps + std::sqrt(bound));
  const double max_step = std::min(eps / cfg_.nodes_per_unit, alias);
  return plan_wave(2.0 * kernel_.cutoff().c, max_step, bound, cfg_.cfl);
}

Vector Regularizer::apply_wave(const Vector& u, double eps, RunDiagnostics* diag) const {
  if (cfg_.mode != CutoffMode::kTruncated) {
    throw ValidationError("the wave-group engine needs the truncated time cutoff");
  }
  if (!(eps > 0.0 && eps <= 1.0)) throw ValidationError("eps must lie in (0, 1]");
  const WavePlan plan = wave_plan(eps);
  WaveGroup group(*op_, plan, cfg_.energy_tol);
  Vector out = Vector::Zero(u.size());
  const double ds = plan.step;
  const WaveDiagnostics wd = group.run(u, [&](std::size_t n, const Vector& w) {
    const double s = ds * static_cast<double>(n);
    const double g = kernel_.cutoff()(s) * kernel_.scaled_transform(s, eps);
    if (g == 0.0) return;
    const double weight = (n == 0 ? 0.5 : 1.0) * ds * g / kPi;
    out += weight * w;
  });
  if (diag) {
    diag->engine = Engine::kWaveGroup;
    diag->eps = eps;
    diag->tail_bound = tail_bound(eps, kernel_);
    diag->quadrature_nodes = plan.steps + 1;
    diag->wave = wd;
  }
  return out;
}

Vector Regularizer::apply(const Vector& u, double eps, RunDiagnostics* diag) const {
  if (static_cast<std::size_t>(u.size()) != op_->size()) {
    throw ValidationError("input does not live on the operator's grid");
  }
  if (!cfg_.cross_check) {
    return cfg_.engine == Engine::kSpectral ? apply_spectral(u, eps, diag) : apply_wave(u, eps, diag);
  }
  RunDiagnostics ds, dw;
  const Vector a = apply_spectral(u, eps, &ds);
  const Vector b = apply_wave(u, eps, &dw);
  const double unorm = weighted_norm(u, op_->weights());
  const double residual = weighted_norm(a - b, op_->weights()) / std::max(unorm, 1e-300);
  if (residual > cfg_.cross_tol) {
    const Vector c = basis().analyze(a - b);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(c.size()));
    for (Eigen::Index i = 0; i < c.size(); ++i) order[static_cast<std::size_t>(i)] = i;
    std::partial_sort(order.begin(), order.begin() + std::min<std::size_t>(5, order.size()),
                      order.end(), [&](auto x, auto y) { return std::abs(c[x]) > std::abs(c[y]); });
    std::ostringstream msg;
    msg << "engines disagree at eps=" << eps << ": relative residual " << residual << " > "
        << cfg_.cross_tol << "; largest per-mode residuals:";
    for (std::size_t i = 0; i < std::min<std::size_t>(5, order.size()); ++i) {
      msg << " [lambda=" << basis().eigenvalues()[order[i]] << ": " << std::abs(c[order[i]]) << "]";
    }
    throw ConvergenceError(msg.str());
  }
  Vector out = cfg_.engine == Engine::kSpectral ? a : b;
  if (diag) {
    *diag = cfg_.engine == Engine::kSpectral ? ds : dw;
    diag->wave = dw.wave;
    diag->cross_engine_residual = residual;
  }
  return out;
}

Vector distance_from_support(const LaplaceBeltrami& op, const Vector& u) {
  const Geometry& g = op.geometry();
  const std::size_t n = op.size();
  Vector dist = Vector::Constant(static_cast<Eigen::Index>(n), std::numeric_limits<double>::infinity());
  std::vector<std::size_t> support;
  for (std::size_t p = 0; p < n; ++p)
    if (u[static_cast<Eigen::Index>(p)] != 0.0) support.push_back(p);
  if (support.empty()) return dist;

  if (g.dim() == 2 && op.is_flat()) {
    const auto shape = g.shape();
    const double h0 = std::sqrt(g.beta(0.0, 0.0)) * g.axis(0).spacing;
    const double h1 = g.f(0.0, 0.0) * g.axis(1).spacing;
    for (std::size_t p = 0; p < n; ++p) {
      const long i0 = static_cast<long>(p / shape[1]), i1 = static_cast<long>(p % shape[1]);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t q : support) {
        long d0 = std::labs(i0 - static_cast<long>(q / shape[1]));
        long d1 = std::labs(i1 - static_cast<long>(q % shape[1]));
        d0 = std::min(d0, static_cast<long>(shape[0]) - d0);
        d1 = std::min(d1, static_cast<long>(shape[1]) - d1);
        best = std::min(best, std::hypot(d0 * h0, d1 * h1));
      }
      dist[static_cast<Eigen::Index>(p)] = best;
    }
    return dist;
  }

  // Dijkstra. In 1D the path graph is exact; in 2D the 16-neighbour stencil
  // overestimates straight-line lengths by at most a few percent.
  struct Move {
    int d0, d1;
  };
  std::vector<Move> moves;
  if (g.dim() == 1) {
    moves = {{0, 1}, {0, -1}};
  } else {
    for (int a = -2; a <= 2; ++a)
      for (int b = -2; b <= 2; ++b) {
        if (a == 0 && b == 0) continue;
        if (std::max(std::abs(a), std::abs(b)) == 2 && std::min(std::abs(a), std::abs(b)) != 1) continue;
        moves.push_back({a, b});
      }
  }
  const auto shape = g.shape();
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (std::size_t p : support) {
    dist[static_cast<Eigen::Index>(p)] = 0.0;
    heap.push({0.0, p});
  }
  while (!heap.empty()) {
    const auto [d, p] = heap.top();
    heap.pop();
    if (d > dist[static_cast<Eigen::Index>(p)]) continue;
    const auto [t, x] = g.point(p);
    const long i0 = g.dim() == 1 ? 0 : static_cast<long>(p / shape[1]);
    const long i1 = g.dim() == 1 ? static_cast<long>(p) : static_cast<long>(p % shape[1]);
    for (const Move& m : moves) {
      const long n0 = g.dim() == 1 ? 0 : (i0 + m.d0 + static_cast<long>(shape[0])) % static_cast<long>(shape[0]);
      const long len1 = static_cast<long>(g.dim() == 1 ? shape[0] : shape[1]);
      const long n1 = (i1 + m.d1 + len1) % len1;
      const std::size_t q = g.dim() == 1 ? static_cast<std::size_t>(n1)
                                         : static_cast<std::size_t>(n0) * shape[1] + static_cast<std::size_t>(n1);
      double len;
      if (g.dim() == 1) {
        const double h = g.axis(0).spacing;
        len = g.f(0.0, x + 0.5 * m.d1 * h) * h;
      } else {
        const double dt = m.d0 * g.axis(0).spacing;
        const double dx = m.d1 * g.axis(1).spacing;
        const double tm = t + 0.5 * dt, xm = x + 0.5 * dx;
        const double fm = g.f(tm, xm);
        len = std::sqrt(g.beta(tm, xm) * dt * dt + fm * fm * dx * dx);
      }
      const double nd = d + len;
      if (nd < dist[static_cast<Eigen::Index>(q)]) {
        dist[static_cast<Eigen::Index>(q)] = nd;
        heap.push({nd, q});
      }
    }
  }
  return dist;
}

namespace {

// Largest run of axis indices not hit by the support, cyclically.
std::size_t largest_gap(const std::vector<bool>& hit) {
  const std::size_t n = hit.size();
  std::size_t best = 0, run = 0;
  for (std::size_t i = 0; i < 2 * n; ++i) {
    if (hit[i % n]) run = 0;
    else best = std::max(best, std::min(++run, n));
  }
  return best;
}

}  // namespace

SupportReport support_radius_check(const Regularizer& reg, const Vector& u, double eps,
                                   double margin_cells, bool compare_padded) {
  const LaplaceBeltrami& op = reg.op();
  const Geometry& g = op.geometry();
  SupportReport report;
  report.radius = 2.0 * reg.kernel().cutoff().c + margin_cells * g.max_edge_length();

  const auto shape = g.shape();
  for (int a = 0; a < g.dim(); ++a) {
    const std::size_t len = shape[static_cast<std::size_t>(a)];
    std::vector<bool> hit(len, false);
    for (std::size_t p = 0; p < op.size(); ++p) {
      if (u[static_cast<Eigen::Index>(p)] == 0.0) continue;
      const std::size_t idx = g.dim() == 1 ? p : (a == 0 ? p / shape[1] : p % shape[1]);
      hit[idx] = true;
    }
    const double gap = static_cast<double>(largest_gap(hit)) * g.max_edge_length();
    if (std::none_of(hit.begin(), hit.end(), [](bool b) { return b; })) break;
    if (gap <= 2.0 * report.radius) {
      std::ostringstream msg;
      msg << "fattened support (radius " << report.radius << ") does not fit in the domain along axis "
          << a << "; enlarge the domain";
      throw ValidationError(msg.str());
    }
  }

  const Vector tu = reg.apply(u, eps);
  const Vector dist = distance_from_support(op, u);
  const Vector& w = op.weights();
  double out2 = 0.0, all2 = 0.0, out_max = 0.0, all_max = 0.0;
  for (Eigen::Index p = 0; p < tu.size(); ++p) {
    const double v2 = tu[p] * tu[p] * w[p];
    all2 += v2;
    all_max = std::max(all_max, std::abs(tu[p]));
    if (dist[p] > report.radius) {
      out2 += v2;
      out_max = std::max(out_max, std::abs(tu[p]));
    }
  }
  report.outside_mass = all2 > 0.0 ? std::sqrt(out2 / all2) : 0.0;
  report.outside_max = all_max > 0.0 ? out_max / all_max : 0.0;

  if (compare_padded) {
    const auto pad = static_cast<std::size_t>(std::ceil(report.radius / g.min_edge_length())) + 2;
    report.pad_cells = pad;
    auto padded_op = std::make_shared<const LaplaceBeltrami>(g.padded(pad));
    const Regularizer padded(padded_op, reg.kernel(), reg.config(), nullptr);
    const auto pshape = padded_op->geometry().shape();
    auto embed = [&](std::size_t p) {
      if (g.dim() == 1) return p + pad;
      return (p / shape[1] + pad) * pshape[1] + (p % shape[1] + pad);
    };
    Vector up = Vector::Zero(static_cast<Eigen::Index>(padded_op->size()));
    for (std::size_t p = 0; p < op.size(); ++p) up[static_cast<Eigen::Index>(embed(p))] = u[static_cast<Eigen::Index>(p)];
    const Vector tp = padded.apply(up, eps);
    double diff2 = 0.0, ref2 = 0.0;
    for (std::size_t p = 0; p < op.size(); ++p) {
      const auto i = static_cast<Eigen::Index>(p);
      if (dist[i] > report.radius) continue;
      const double d = tu[i] - tp[static_cast<Eigen::Index>(embed(p))];
      diff2 += d * d * w[i];
      ref2 += tu[i] * tu[i] * w[i];
    }
    report.localization = ref2 > 0.0 ? std::sqrt(diff2 / ref2) : std::sqrt(diff2);
  }
  return report;
}

Vector translate(const Geometry& g, const Vector& u, std::array<long, 2> shift) {
  const auto shape = g.shape();
  Vector out(u.size());
  const long n0 = static_cast<long>(shape[0]);
  const long n1 = static_cast<long>(shape[1]);
  if (g.dim() == 1) {
    for (long i = 0; i < n0; ++i) out[((i + shift[0]) % n0 + n0) % n0] = u[i];
    return out;
  }
  for (long i = 0; i < n0; ++i)
    for (long j = 0; j < n1; ++j)
      out[((i + shift[0]) % n0 + n0) % n0 * n1 + ((j + shift[1]) % n1 + n1) % n1] = u[i * n1 + j];
  return out;
}

Vector euclidean_convolution(const LaplaceBeltrami& line, const Vector& u, double eps, const KernelPair& k) {
  const Geometry& g = line.geometry();
  if (g.model() != Model::kEuclideanLine) throw ValidationError("euclidean_convolution needs an EuclideanLine");
  if (u.size() != static_cast<Eigen::Index>(g.size())) throw ValidationError("input size does not match the grid");
  const long n = static_cast<long>(g.size());
  const double h = g.axis(0).spacing;
  const long reach = static_cast<long>(std::ceil(2.0 * k.cutoff().c / h));
  if (2 * reach + 1 > n) throw ValidationError("mollifier support wraps the line");
  const auto mu = euclidean_mollifier(eps, k, LineGrid{-h * static_cast<double>(reach), h,
                                                       static_cast<std::size_t>(2 * reach + 1)});
  Vector out = Vector::Zero(u.size());
  for (long i = 0; i < n; ++i) {
    double s = 0.0;
    for (long m = -reach; m <= reach; ++m) s += mu[static_cast<std::size_t>(m + reach)] * u[((i - m) % n + n) % n];
    out[i] = h * s;
  }
  return out;
}

double isometry_equivariance_check(const Regularizer& reg, const Vector& u, double eps,
                                   std::array<long, 2> shift) {
  const LaplaceBeltrami& op = reg.op();
  if (!op.is_flat()) throw ValidationError("grid translations are isometries only on flat models");
  const Geometry& g = op.geometry();
  const Vector a = reg.apply(translate(g, u, shift), eps);
  const Vector b = translate(g, reg.apply(u, eps), shift);
  const double un = weighted_norm(u, op.weights());
  return un > 0.0 ? weighted_norm(a - b, op.weights()) / un : weighted_norm(a - b, op.weights());
}

double commute_with_laplacian_check(const Regularizer& reg, const Vector& u, double eps) {
  const LaplaceBeltrami& op = reg.op();
  const Vector lu = op.apply(u);
  const Vector a = op.apply(reg.apply(u, eps));
  const Vector b = reg.apply(lu, eps);
  const double ln = weighted_norm(lu, op.weights());
  return weighted_norm(a - b, op.weights()) / std::max(ln, 1e-300);
}

std::string diagnostics_json(const RunDiagnostics& d) {
  nlohmann::json j;
  j["engine"] = engine_name(d.engine);
  j["eps"] = d.eps;
  j["tail_bound"] = d.tail_bound;
  j["quadrature_nodes"] = d.quadrature_nodes;
  if (d.engine == Engine::kWaveGroup || d.wave.steps > 0) {
    j["wave"] = {{"step", d.wave.step},
                 {"steps", d.wave.steps},
                 {"taylor_terms", d.wave.taylor_terms},
                 {"theta_max", d.wave.theta_max},
                 {"energy_drift", d.wave.energy_drift},
                 {"matvecs", d.wave.matvecs}};
  }
  if (d.cross_engine_residual >= 0.0) j["cross_engine_residual"] = d.cross_engine_residual;
  return j.dump();
}

}  // namespace wavemollify
