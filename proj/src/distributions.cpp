#include "wavemollify/distributions.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "wavemollify/errors.hpp"
#include "wavemollify/kernels.hpp"

namespace wavemollify {

namespace {

constexpr double kPi = 3.14159265358979323846;

double wrap(double d, double period) {
  d = std::fmod(d, period);
  if (d > 0.5 * period) d -= period;
  if (d < -0.5 * period) d += period;
  return d;
}

std::size_t wrap_index(long i, std::size_t n) {
  const long m = static_cast<long>(n);
  return static_cast<std::size_t>(((i % m) + m) % m);
}

double coordinate_distance(const Geometry& g, std::size_t p, std::array<double, 2> c) {
  const auto x = g.point(p);
  if (g.dim() == 1) return std::abs(wrap(x[1] - c[1], g.axis(0).length()));
  const double dt = wrap(x[0] - c[0], g.axis(0).length());
  const double dx = wrap(x[1] - c[1], g.axis(1).length());
  return std::hypot(dt, dx);
}

}  // namespace

const char* kind_name(DistributionKind k) {
  switch (k) {
    case DistributionKind::kDelta: return "delta";
    case DistributionKind::kDeltaPrime: return "delta_prime";
    case DistributionKind::kSawtooth: return "sawtooth";
    case DistributionKind::kSmoothBump: return "smooth_bump";
    case DistributionKind::kSobolevRandom: return "sobolev_random";
    case DistributionKind::kBandLimited: return "band_limited";
    case DistributionKind::kConstant: return "constant";
  }
  return "unknown";
}

DistributionKind parse_kind(const std::string& name) {
  for (auto k : {DistributionKind::kDelta, DistributionKind::kDeltaPrime, DistributionKind::kSawtooth,
                 DistributionKind::kSmoothBump, DistributionKind::kSobolevRandom,
                 DistributionKind::kBandLimited, DistributionKind::kConstant}) {
    if (name == kind_name(k)) return k;
  }
  throw ValidationError("unknown distribution kind '" + name + "'");
}

void DistributionSpec::validate() const {
  if (!std::isfinite(center[0]) || !std::isfinite(center[1])) throw ValidationError("distribution center must be finite");
  if (kind == DistributionKind::kSmoothBump && !(width > 0.0)) throw ValidationError("smooth bump width must be positive");
  if (kind == DistributionKind::kSobolevRandom && !std::isfinite(s)) throw ValidationError("sobolev order must be finite");
  if (kind == DistributionKind::kBandLimited && !(band > 0.0)) throw ValidationError("band-limited input needs a positive band K");
  if (band < 0.0) throw ValidationError("band must be non-negative");
}

void SpectralDistribution::write_csv(std::ostream& out, const SpectralBasis& basis) const {
  out << "index,lambda,coefficient\n";
  out.precision(17);
  for (Eigen::Index k = 0; k < coefficients.size(); ++k) {
    out << k << ',' << basis.eigenvalues()[k] << ',' << coefficients[k] << '\n';
  }
}

std::size_t nearest_node(const Geometry& g, std::array<double, 2> point) {
  auto index = [&](int a, double x) {
    const Axis& ax = g.axis(a);
    return wrap_index(std::lround((x - ax.origin) / ax.spacing), ax.n);
  };
  if (g.dim() == 1) return index(0, point[1]);
  return index(0, point[0]) * g.axis(1).n + index(1, point[1]);
}

SpectralDistribution make_distribution(const DistributionSpec& spec, const LaplaceBeltrami& op,
                                       const SpectralBasis& basis) {
  spec.validate();
  const Geometry& g = op.geometry();
  const Vector& w = op.weights();
  const auto n = static_cast<Eigen::Index>(op.size());
  if (static_cast<Eigen::Index>(basis.size()) > n || basis.eigenvalues().size() != static_cast<Eigen::Index>(basis.size())) {
    throw ValidationError("basis does not belong to this grid");
  }
  const int dim = g.dim();
  const int last = dim - 1;
  const Axis& sx = g.axis(last);
  const double inf = std::numeric_limits<double>::infinity();

  SpectralDistribution d;
  d.spec = spec;
  d.values = Vector::Zero(n);
  bool from_values = true;

  switch (spec.kind) {
    case DistributionKind::kDelta: {
      const std::size_t p = nearest_node(g, spec.center);
      d.values[static_cast<Eigen::Index>(p)] = 1.0 / w[static_cast<Eigen::Index>(p)];
      d.nominal_s = -0.5 * dim;
      d.support_radius = 0.0;
      break;
    }
    case DistributionKind::kDeltaPrime: {
      const std::size_t p = nearest_node(g, spec.center);
      const std::size_t lo = op.neighbour(p, last, -1);
      const std::size_t hi = op.neighbour(p, last, +1);
      const double h2 = 2.0 * sx.spacing;
      d.values[static_cast<Eigen::Index>(lo)] += 1.0 / (h2 * w[static_cast<Eigen::Index>(lo)]);
      d.values[static_cast<Eigen::Index>(hi)] -= 1.0 / (h2 * w[static_cast<Eigen::Index>(hi)]);
      d.nominal_s = -0.5 * dim - 1.0;
      d.support_radius = sx.spacing;
      break;
    }
    case DistributionKind::kSawtooth: {
      // 1/2 - frac((x - x0)/L): jump of size 1 at x0, value 0 on the jump.
      const double len = sx.length();
      for (Eigen::Index p = 0; p < n; ++p) {
        const double y = (g.point(static_cast<std::size_t>(p))[1] - spec.center[1]) / len;
        const double frac = y - std::floor(y);
        const bool on_jump = std::abs(frac) < 1e-12 || std::abs(frac - 1.0) < 1e-12;
        d.values[p] = on_jump ? 0.0 : 0.5 - frac;
      }
      d.nominal_s = 0.5;
      break;
    }
    case DistributionKind::kSmoothBump: {
      const PlateauFunction bump{0.5 * spec.width, spec.width};
      for (Eigen::Index p = 0; p < n; ++p) {
        d.values[p] = bump(coordinate_distance(g, static_cast<std::size_t>(p), spec.center));
      }
      d.nominal_s = inf;
      d.support_radius = spec.width;
      break;
    }
    case DistributionKind::kConstant:
      d.values.setOnes();
      d.nominal_s = inf;
      break;
    case DistributionKind::kSobolevRandom:
    case DistributionKind::kBandLimited: {
      from_values = false;
      std::mt19937_64 rng(spec.seed);
      const Vector& lambda = basis.eigenvalues();
      d.coefficients = Vector::Zero(lambda.size());
      if (spec.kind == DistributionKind::kSobolevRandom) {
        const double power = -(0.5 * spec.s + 0.25 * dim + 0.5 * kSobolevMargin);
        std::bernoulli_distribution coin(0.5);
        for (Eigen::Index k = 0; k < lambda.size(); ++k) {
          const double sign = coin(rng) ? 1.0 : -1.0;
          if (spec.band > 0.0 && std::sqrt(std::max(lambda[k], 0.0)) > spec.band) continue;
          d.coefficients[k] = sign * std::pow(1.0 + std::max(lambda[k], 0.0), power);
        }
        d.nominal_s = spec.s;
      } else {
        const double nyquist = kPi / g.max_edge_length();
        if (spec.band > 0.5 * nyquist) {
          throw ValidationError("band K = " + std::to_string(spec.band) + " exceeds Nyquist/2 = " +
                                std::to_string(0.5 * nyquist));
        }
        std::normal_distribution<double> normal;
        for (Eigen::Index k = 0; k < lambda.size(); ++k) {
          const double c = normal(rng);
          if (std::sqrt(std::max(lambda[k], 0.0)) <= spec.band) d.coefficients[k] = c;
        }
        d.nominal_s = inf;
      }
      d.values = basis.synthesize(d.coefficients);
      break;
    }
  }
  if (from_values) d.coefficients = basis.analyze(d.values);
  return d;
}

double sobolev_norm(const Vector& coefficients, const Vector& eigenvalues, double s, double band) {
  if (coefficients.size() != eigenvalues.size()) throw ValidationError("sobolev norm: size mismatch");
  double sum = 0.0;
  for (Eigen::Index k = 0; k < coefficients.size(); ++k) {
    const double lam = std::max(eigenvalues[k], 0.0);
    if (band > 0.0 && std::sqrt(lam) > band) continue;
    sum += std::pow(1.0 + lam, s) * coefficients[k] * coefficients[k];
  }
  return std::sqrt(sum);
}

double sobolev_norm(const SpectralBasis& basis, const Vector& values, double s, double band) {
  return sobolev_norm(basis.analyze(values), basis.eigenvalues(), s, band);
}

Vector time_bump(const Geometry& slab, double center, double half_width) {
  if (slab.dim() != 2) throw ValidationError("time bump needs a slab geometry");
  if (!(half_width > 0.0) || 2.0 * half_width >= slab.axis(0).length()) {
    throw ValidationError("time bump must be narrower than the time period");
  }
  const PlateauFunction bump{0.5 * half_width, half_width};
  const std::size_t n1 = slab.axis(1).n;
  Vector out(static_cast<Eigen::Index>(slab.size()));
  for (std::size_t i = 0; i < slab.axis(0).n; ++i) {
    const double v = bump(std::abs(wrap(slab.axis(0).coordinate(i) - center, slab.axis(0).length())));
    out.segment(static_cast<Eigen::Index>(i * n1), static_cast<Eigen::Index>(n1)).setConstant(v);
  }
  return out;
}

Geometry slice_geometry(const Geometry& slab, std::size_t t_index) {
  if (slab.dim() != 2) throw ValidationError("slices need a two-dimensional geometry");
  const Axis& ta = slab.axis(0);
  const Axis& sa = slab.axis(1);
  if (t_index >= ta.n) {
    throw ValidationError("slice index " + std::to_string(t_index) + " outside 0.." + std::to_string(ta.n - 1));
  }
  if (sa.origin != 0.0 || std::abs(sa.period - sa.length()) > 1e-12 * sa.period) {
    throw ValidationError("slice geometry needs an unpadded spatial circle");
  }
  const Profile& f = slab.f_profile();
  Profile h = f;
  h.base = f.base + (f.amp_t != 0.0 ? f.amp_t * std::sin(2.0 * kPi * f.mode_t * ta.coordinate(t_index) / ta.period) : 0.0);
  h.amp_t = 0.0;
  return Geometry::circle(sa.n, h, sa.length());
}

Slice restrict_to_slice(const LaplaceBeltrami& slab, const Vector& u, std::size_t t_index) {
  const Geometry& g = slab.geometry();
  if (u.size() != static_cast<Eigen::Index>(slab.size())) throw ValidationError("slice: grid mismatch");
  Slice out{t_index, 0.0, slice_geometry(g, t_index), {}, {}};
  out.t = g.axis(0).coordinate(t_index);
  const auto n1 = static_cast<Eigen::Index>(g.axis(1).n);
  out.values = u.segment(static_cast<Eigen::Index>(t_index) * n1, n1);
  out.weights.resize(n1);
  const double h = g.axis(1).spacing;
  for (Eigen::Index j = 0; j < n1; ++j) {
    out.weights[j] = g.f(out.t, g.axis(1).coordinate(static_cast<std::size_t>(j))) * h;
  }
  return out;
}

Vector tensor_product(const Geometry& slab, const Vector& a, const Vector& b) {
  if (slab.dim() != 2 || a.size() != static_cast<Eigen::Index>(slab.axis(0).n) ||
      b.size() != static_cast<Eigen::Index>(slab.axis(1).n)) {
    throw ValidationError("tensor product: factor sizes do not match the slab");
  }
  Vector out(static_cast<Eigen::Index>(slab.size()));
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a[i] * b;
  return out;
}

}  // namespace wavemollify
