#include "wavemollify/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numbers>
#include <sstream>

#include "wavemollify/errors.hpp"

namespace wavemollify {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string format_profile(const Profile& p) {
  std::ostringstream out;
  out.precision(17);
  out << p.base << ',' << p.amp_t << ',' << p.amp_x << ',' << p.mode_t << ',' << p.mode_x;
  return out.str();
}

Profile parse_profile(const std::string& text) {
  Profile p;
  char comma = 0;
  std::istringstream in(text);
  in >> p.base >> comma >> p.amp_t >> comma >> p.amp_x >> comma >> p.mode_t >> comma >> p.mode_x;
  if (!in) throw ValidationError("malformed profile '" + text + "'");
  return p;
}

}  // namespace

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

double Profile::operator()(double tp, double xp) const {
  double v = base;
  if (amp_t != 0.0) v += amp_t * std::sin(kTwoPi * mode_t * tp);
  if (amp_x != 0.0) v += amp_x * std::cos(kTwoPi * mode_x * xp);
  return v;
}

const char* model_name(Model m) {
  switch (m) {
    case Model::kCircle: return "circle";
    case Model::kFlatTorus: return "flat_torus";
    case Model::kWarpedSlab: return "warped_slab";
    case Model::kEuclideanLine: return "euclidean_line";
  }
  return "unknown";
}

Geometry Geometry::circle(std::size_t n, Profile f, double length) {
  if (length == 0.0) length = kTwoPi;
  Geometry g;
  g.model_ = Model::kCircle;
  g.dim_ = 1;
  g.axes_[0] = {n, 0.0, length / static_cast<double>(n), length};
  g.f_ = f;
  g.validate();
  return g;
}

Geometry Geometry::flat_torus(std::size_t n0, std::size_t n1, double length0, double length1) {
  Geometry g;
  g.model_ = Model::kFlatTorus;
  g.dim_ = 2;
  g.axes_[0] = {n0, 0.0, length0 / static_cast<double>(n0), length0};
  g.axes_[1] = {n1, 0.0, length1 / static_cast<double>(n1), length1};
  g.validate();
  return g;
}

Geometry Geometry::warped_slab(std::size_t n_t, std::size_t n_s, double period_t, double length_s,
                               Profile beta, Profile f) {
  Geometry g;
  g.model_ = Model::kWarpedSlab;
  g.dim_ = 2;
  g.axes_[0] = {n_t, 0.0, period_t / static_cast<double>(n_t), period_t};
  g.axes_[1] = {n_s, 0.0, length_s / static_cast<double>(n_s), length_s};
  g.beta_ = beta;
  g.f_ = f;
  g.validate();
  return g;
}

Geometry Geometry::euclidean_line(double half_length, double spacing) {
  if (!(half_length > 0.0) || !(spacing > 0.0)) {
    throw ValidationError("euclidean line needs positive half-length and spacing");
  }
  const auto n = static_cast<std::size_t>(std::llround(2.0 * half_length / spacing));
  Geometry g;
  g.model_ = Model::kEuclideanLine;
  g.dim_ = 1;
  g.axes_[0] = {n, -half_length, 2.0 * half_length / static_cast<double>(n), 2.0 * half_length};
  g.validate();
  return g;
}

std::size_t Geometry::size() const { return axes_[0].n * (dim_ == 2 ? axes_[1].n : 1); }

double Geometry::beta(double t, double x) const {
  if (dim_ == 1) return 1.0;
  return beta_(t / axes_[0].period, x / axes_[1].period);
}

double Geometry::f(double t, double x) const {
  if (dim_ == 1) return f_(0.0, x / axes_[0].period);
  return f_(t / axes_[0].period, x / axes_[1].period);
}

std::array<double, 2> Geometry::point(std::size_t p) const {
  if (dim_ == 1) return {0.0, axes_[0].coordinate(p)};
  return {axes_[0].coordinate(p / axes_[1].n), axes_[1].coordinate(p % axes_[1].n)};
}

Geometry Geometry::padded(std::size_t cells) const {
  Geometry g = *this;
  for (int a = 0; a < dim_; ++a) {
    Axis& ax = g.axes_[static_cast<std::size_t>(a)];
    ax.n += 2 * cells;
    ax.origin -= ax.spacing * static_cast<double>(cells);
  }
  g.validate();
  return g;
}

double Geometry::max_edge_length() const {
  double worst = 0.0;
  for (std::size_t p = 0; p < size(); ++p) {
    const auto [t, x] = point(p);
    if (dim_ == 1) {
      worst = std::max(worst, f(0.0, x + 0.5 * axes_[0].spacing) * axes_[0].spacing);
    } else {
      worst = std::max(worst, std::sqrt(beta(t + 0.5 * axes_[0].spacing, x)) * axes_[0].spacing);
      worst = std::max(worst, f(t, x + 0.5 * axes_[1].spacing) * axes_[1].spacing);
    }
  }
  return worst;
}

double Geometry::min_edge_length() const {
  double best = 1e300;
  for (std::size_t p = 0; p < size(); ++p) {
    const auto [t, x] = point(p);
    if (dim_ == 1) {
      best = std::min(best, f(0.0, x + 0.5 * axes_[0].spacing) * axes_[0].spacing);
    } else {
      best = std::min(best, std::sqrt(beta(t + 0.5 * axes_[0].spacing, x)) * axes_[0].spacing);
      best = std::min(best, f(t, x + 0.5 * axes_[1].spacing) * axes_[1].spacing);
    }
  }
  return best;
}

void Geometry::validate() const {
  for (int a = 0; a < dim_; ++a) {
    const Axis& ax = axes_[static_cast<std::size_t>(a)];
    if (ax.n < 8) throw ValidationError("grid size along every axis must be at least 8");
    if (!(ax.spacing > 0.0) || !std::isfinite(ax.spacing) || !(ax.period > 0.0)) {
      throw ValidationError("grid spacing and profile period must be positive");
    }
  }
  // Nodes and edge midpoints both enter the assembly.
  for (std::size_t p = 0; p < size(); ++p) {
    const auto [t, x] = point(p);
    for (int half_t = 0; half_t <= 1; ++half_t) {
      for (int half_x = 0; half_x <= 1; ++half_x) {
        const double tt = dim_ == 2 ? t + 0.5 * half_t * axes_[0].spacing : 0.0;
        const double xx = x + 0.5 * half_x * axes_[dim_ - 1].spacing;
        const double b = beta(tt, xx);
        const double ff = f(tt, xx);
        if (!(b > 1e-12) || !(ff > 1e-12) || !std::isfinite(b) || !std::isfinite(ff)) {
          std::ostringstream msg;
          msg << "non-positive metric sample at node " << p << " (t=" << tt << ", x=" << xx
              << "): beta=" << b << ", f=" << ff;
          throw ValidationError(msg.str());
        }
      }
    }
  }
}

std::string Geometry::serialize() const {
  std::ostringstream out;
  out.precision(17);
  out << "model=" << model_name(model_) << ";dim=" << dim_;
  for (int a = 0; a < dim_; ++a) {
    const Axis& ax = axes_[static_cast<std::size_t>(a)];
    out << ";n" << a << '=' << ax.n << ";o" << a << '=' << ax.origin << ";h" << a << '='
        << ax.spacing << ";p" << a << '=' << ax.period;
  }
  out << ";beta=" << format_profile(beta_) << ";f=" << format_profile(f_);
  return out.str();
}

Geometry Geometry::deserialize(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ';')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ValidationError("malformed geometry text '" + text + "'");
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  auto need = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ValidationError("geometry text lacks '" + key + "'");
    return it->second;
  };
  Geometry g;
  const std::string& m = need("model");
  if (m == "circle") g.model_ = Model::kCircle;
  else if (m == "flat_torus") g.model_ = Model::kFlatTorus;
  else if (m == "warped_slab") g.model_ = Model::kWarpedSlab;
  else if (m == "euclidean_line") g.model_ = Model::kEuclideanLine;
  else throw ValidationError("unknown geometry model '" + m + "'");
  g.dim_ = std::stoi(need("dim"));
  for (int a = 0; a < g.dim_; ++a) {
    const std::string s = std::to_string(a);
    Axis& ax = g.axes_[static_cast<std::size_t>(a)];
    ax.n = std::stoul(need("n" + s));
    ax.origin = std::stod(need("o" + s));
    ax.spacing = std::stod(need("h" + s));
    ax.period = std::stod(need("p" + s));
  }
  g.beta_ = parse_profile(need("beta"));
  g.f_ = parse_profile(need("f"));
  g.validate();
  return g;
}

double weighted_inner(const Vector& u, const Vector& v, const Vector& w) {
  return (u.array() * v.array() * w.array()).sum();
}

double weighted_norm(const Vector& u, const Vector& w) {
  return std::sqrt(std::max(0.0, weighted_inner(u, u, w)));
}

double GridFunction::inner(const GridFunction& other) const {
  return weighted_inner(values, other.values, *weights);
}

double GridFunction::norm() const { return weighted_norm(values, *weights); }

LaplaceBeltrami::LaplaceBeltrami(Geometry g) : geometry_(std::move(g)) {
  const std::size_t n = geometry_.size();
  Vector w(n);
  conductance_[0] = Vector::Zero(static_cast<Eigen::Index>(n));
  conductance_[1] = Vector::Zero(static_cast<Eigen::Index>(n));
  const Geometry& G = geometry_;
  for (std::size_t p = 0; p < n; ++p) {
    const auto [t, x] = G.point(p);
    const auto i = static_cast<Eigen::Index>(p);
    if (G.dim() == 1) {
      const double h = G.axis(0).spacing;
      w[i] = G.f(0.0, x) * h;
      conductance_[0][i] = 1.0 / (G.f(0.0, x + 0.5 * h) * h);
    } else {
      const double h0 = G.axis(0).spacing;
      const double h1 = G.axis(1).spacing;
      w[i] = std::sqrt(G.beta(t, x)) * G.f(t, x) * h0 * h1;
      const double tm = t + 0.5 * h0;
      conductance_[0][i] = G.f(tm, x) / std::sqrt(G.beta(tm, x)) * h1 / h0;
      const double xm = x + 0.5 * h1;
      conductance_[1][i] = std::sqrt(G.beta(t, xm)) / G.f(t, xm) * h0 / h1;
    }
  }
  weights_ = std::make_shared<const Vector>(std::move(w));

  const std::string text = geometry_.serialize();
  std::uint64_t h = fnv1a(text.data(), text.size());
  h = fnv1a(weights_->data(), n * sizeof(double), h);
  for (int a = 0; a < geometry_.dim(); ++a) {
    h = fnv1a(conductance_[static_cast<std::size_t>(a)].data(), n * sizeof(double), h);
  }
  fingerprint_ = h;
}

std::size_t LaplaceBeltrami::neighbour(std::size_t p, int axis, int step) const {
  auto wrap = [step](std::size_t i, std::size_t n) { return step > 0 ? (i + 1) % n : (i + n - 1) % n; };
  const auto shape = geometry_.shape();
  if (geometry_.dim() == 1) return wrap(p, shape[0]);
  std::size_t i0 = p / shape[1];
  std::size_t i1 = p % shape[1];
  if (axis == 0) i0 = wrap(i0, shape[0]);
  else i1 = wrap(i1, shape[1]);
  return i0 * shape[1] + i1;
}

Vector LaplaceBeltrami::apply_axis(int axis, const Vector& u) const {
  const std::size_t n = size();
  const Vector& k = conductance_[static_cast<std::size_t>(axis)];
  const Vector& w = *weights_;
  Vector out(u.size());
  const auto shape = geometry_.shape();
  const std::size_t rows = shape[0];
  const std::size_t cols = shape[1];
  if (geometry_.dim() == 1 || axis == 1) {
    // Stride-1 axis: contiguous rows of length `len`.
    const std::size_t len = geometry_.dim() == 1 ? n : cols;
    const std::size_t count = n / len;
    for (std::size_t r = 0; r < count; ++r) {
      const std::size_t base = r * len;
      for (std::size_t j = 0; j < len; ++j) {
        const std::size_t p = base + j;
        const std::size_t up = base + (j + 1 == len ? 0 : j + 1);
        const std::size_t dn = base + (j == 0 ? len - 1 : j - 1);
        out[p] = (k[p] * (u[up] - u[p]) - k[dn] * (u[p] - u[dn])) / w[p];
      }
    }
  } else {
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t rup = (r + 1 == rows ? 0 : r + 1) * cols;
      const std::size_t rdn = (r == 0 ? rows - 1 : r - 1) * cols;
      const std::size_t base = r * cols;
      for (std::size_t j = 0; j < cols; ++j) {
        const std::size_t p = base + j;
        out[p] = (k[p] * (u[rup + j] - u[p]) - k[rdn + j] * (u[p] - u[rdn + j])) / w[p];
      }
    }
  }
  return out;
}

Vector LaplaceBeltrami::apply(const Vector& u) const {
  Vector out = apply_axis(0, u);
  if (geometry_.dim() == 2) out += apply_axis(1, u);
  return out;
}

double LaplaceBeltrami::spectral_bound() const {
  double bound = 0.0;
  const Vector& w = *weights_;
  for (std::size_t p = 0; p < size(); ++p) {
    double row = 0.0;
    for (int a = 0; a < geometry_.dim(); ++a) {
      const Vector& k = conductance_[static_cast<std::size_t>(a)];
      row += k[p] + k[neighbour(p, a, -1)];
    }
    bound = std::max(bound, 2.0 * row / w[p]);
  }
  return bound;
}

bool LaplaceBeltrami::is_flat() const {
  const Vector& w = *weights_;
  if ((w.array() != w[0]).any()) return false;
  for (int a = 0; a < geometry_.dim(); ++a) {
    const Vector& k = conductance_[static_cast<std::size_t>(a)];
    if ((k.array() != k[0]).any()) return false;
  }
  return true;
}

double LaplaceBeltrami::flat_coefficient(int axis) const {
  return conductance_[static_cast<std::size_t>(axis)][0] / (*weights_)[0];
}

Eigen::SparseMatrix<double> LaplaceBeltrami::stiffness() const {
  const std::size_t n = size();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(n * (1 + 4 * static_cast<std::size_t>(geometry_.dim())));
  for (std::size_t p = 0; p < n; ++p) {
    for (int a = 0; a < geometry_.dim(); ++a) {
      const double k = conductance_[static_cast<std::size_t>(a)][static_cast<Eigen::Index>(p)];
      const std::size_t q = neighbour(p, a, +1);
      const auto ip = static_cast<int>(p);
      const auto iq = static_cast<int>(q);
      trip.emplace_back(ip, ip, k);
      trip.emplace_back(iq, iq, k);
      trip.emplace_back(ip, iq, -k);
      trip.emplace_back(iq, ip, -k);
    }
  }
  Eigen::SparseMatrix<double> K(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

Eigen::SparseMatrix<double> LaplaceBeltrami::symmetric_form() const {
  const Vector d = weights_->array().rsqrt();
  Eigen::SparseMatrix<double> S = stiffness();
  S = d.asDiagonal() * S * d.asDiagonal();
  return S;
}

}  // namespace wavemollify
