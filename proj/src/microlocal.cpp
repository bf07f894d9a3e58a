#include "wavemollify/microlocal.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>

#include "wavemollify/distributions.hpp"
#include "wavemollify/errors.hpp"

namespace wavemollify {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_torus(const LaplaceBeltrami& op) {
  const Geometry& g = op.geometry();
  if (g.model() != Model::kFlatTorus) throw ValidationError("the cone probe runs on a flat torus");
  if (g.axis(0).n < 128 || g.axis(1).n < 128) throw ValidationError("the cone probe needs at least a 128x128 grid");
}

}  // namespace

void ConeProbe::validate() const {
  if (!(half_angle > 0.0 && half_angle < 0.5 * kPi)) throw ValidationError("cone half-angle must lie in (0, pi/2)");
  if (!(window_radius > 0.0)) throw ValidationError("window radius must be positive");
  if (std::hypot(direction[0], direction[1]) == 0.0) throw ValidationError("cone direction must be non-zero");
  if (l_grid.empty()) throw ValidationError("empty l grid");
  if (eps.size() < 4) throw ValidationError("the cone probe needs at least 4 eps values");
}

Vector cone_window(const Geometry& torus, const ConeProbe& probe) {
  for (int a = 0; a < 2; ++a) {
    const Axis& ax = torus.axis(a);
    if (probe.base[a] - probe.window_radius <= ax.origin || probe.base[a] + probe.window_radius >= ax.origin + ax.length()) {
      throw ValidationError("probe window overlaps the wrap-around on axis " + std::to_string(a));
    }
  }
  const PlateauFunction bump{0.5 * probe.window_radius, probe.window_radius};
  Vector out(static_cast<Eigen::Index>(torus.size()));
  for (std::size_t p = 0; p < torus.size(); ++p) {
    const auto x = torus.point(p);
    out[static_cast<Eigen::Index>(p)] = bump(std::hypot(x[0] - probe.base[0], x[1] - probe.base[1]));
  }
  return out;
}

ConeDecay cone_decay(const LaplaceBeltrami& torus, const FieldNet& u_net, const ConeProbe& probe) {
  probe.validate();
  require_torus(torus);
  if (u_net.eps != probe.eps || u_net.fields.size() != probe.eps.size()) {
    throw ValidationError("cone probe: net and probe use different eps grids");
  }
  const Geometry& g = torus.geometry();
  const std::size_t n0 = g.axis(0).n, n1 = g.axis(1).n, half = n1 / 2 + 1;
  const double h0 = g.axis(0).spacing, h1 = g.axis(1).spacing;
  const double cap = 0.5 * kPi / std::max(h0, h1);
  const double cos_cone = std::cos(probe.half_angle);
  const double dn = std::hypot(probe.direction[0], probe.direction[1]);
  const Vector phi = cone_window(g, probe);

  // Cone lattice points of the r2c half spectrum; the other half is the mirror
  // image, so the cone around -xi0 is covered by conjugate symmetry.
  struct Site {
    std::size_t index;
    double radius;
  };
  std::vector<Site> sites;
  for (std::size_t i = 0; i < n0; ++i) {
    const long k0 = i <= n0 / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(n0);
    for (std::size_t j = 0; j < half; ++j) {
      const double xi0 = 2.0 * kPi * static_cast<double>(k0) / g.axis(0).length();
      const double xi1 = 2.0 * kPi * static_cast<double>(j) / g.axis(1).length();
      const double r = std::hypot(xi0, xi1);
      if (r == 0.0 || r > cap) continue;
      const double c = (xi0 * probe.direction[0] + xi1 * probe.direction[1]) / (r * dn);
      if (std::abs(c) >= cos_cone) sites.push_back({i * half + j, r});
    }
  }
  if (sites.empty()) throw ValidationError("no lattice frequencies inside the cone");

  std::vector<double> in(n0 * n1);
  std::vector<std::complex<double>> out(n0 * half);
  fftw_plan plan = fftw_plan_dft_r2c_2d(static_cast<int>(n0), static_cast<int>(n1), in.data(),
                                        reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
  ConeDecay result;
  result.nets.resize(probe.l_grid.size());
  for (std::size_t k = 0; k < probe.l_grid.size(); ++k) {
    result.nets[k].label = "l=" + std::to_string(probe.l_grid[k]);
    result.nets[k].eps = probe.eps;
  }
  for (std::size_t e = 0; e < probe.eps.size(); ++e) {
    const Vector& u = u_net.fields[e];
    if (u.size() != phi.size()) {
      fftw_destroy_plan(plan);
      throw ValidationError("cone probe: grid mismatch");
    }
    for (Eigen::Index p = 0; p < phi.size(); ++p) in[static_cast<std::size_t>(p)] = phi[p] * u[p];
    fftw_execute(plan);
    for (std::size_t k = 0; k < probe.l_grid.size(); ++k) {
      double best = 0.0;
      for (const Site& s : sites) {
        best = std::max(best, std::pow(1.0 + s.radius, probe.l_grid[k]) * std::abs(out[s.index]) * h0 * h1);
      }
      result.nets[k].values.push_back(best);
    }
  }
  fftw_destroy_plan(plan);

  OrderOptions opt;
  opt.guard = probe.guard;
  for (const auto& net : result.nets) {
    result.fits.push_back(estimate_order(net, opt));
    result.orders.push_back(result.fits.back().slope);
  }
  result.uniform_n = result.fits.front().moderate_n;
  result.regular = std::all_of(result.orders.begin(), result.orders.end(),
                               [&](double r) { return r >= -result.uniform_n - probe.guard; });
  // Least-squares slope of order against l over the low part of the panel.
  double sl = 0, so = 0, sll = 0, slo = 0, n = 0;
  for (std::size_t k = 0; k < probe.l_grid.size(); ++k) {
    if (probe.l_grid[k] > probe.gap_l_max) continue;
    const double l = probe.l_grid[k];
    sl += l;
    so += result.orders[k];
    sll += l * l;
    slo += l * result.orders[k];
    n += 1.0;
  }
  if (n >= 2.0) result.order_gap = -(n * slo - sl * so) / (n * sll - sl * sl);
  return result;
}

Vector point_delta(const LaplaceBeltrami& torus, std::array<double, 2> x0) {
  const std::size_t p = nearest_node(torus.geometry(), x0);
  Vector out = Vector::Zero(static_cast<Eigen::Index>(torus.size()));
  out[static_cast<Eigen::Index>(p)] = 1.0 / torus.weights()[static_cast<Eigen::Index>(p)];
  return out;
}

Vector line_delta(const LaplaceBeltrami& torus, double a) {
  const Geometry& g = torus.geometry();
  if (g.dim() != 2) throw ValidationError("line delta needs a two-dimensional grid");
  const std::size_t i = nearest_node(g, {a, g.axis(1).origin}) / g.axis(1).n;
  Vector out = Vector::Zero(static_cast<Eigen::Index>(torus.size()));
  out.segment(static_cast<Eigen::Index>(i * g.axis(1).n), static_cast<Eigen::Index>(g.axis(1).n))
      .setConstant(1.0 / g.axis(0).spacing);
  return out;
}

std::vector<PanelEntry> wavefront_panel(const Regularizer& reg, const ConeProbe& probe) {
  const LaplaceBeltrami& op = reg.op();
  require_torus(op);
  // Raised-cosine bump peaked at the base point: analytic with frequencies of
  // length at most sqrt(2) in units of the torus lattice.
  const Geometry& g = op.geometry();
  Vector smooth(static_cast<Eigen::Index>(op.size()));
  for (std::size_t p = 0; p < op.size(); ++p) {
    const auto x = g.point(p);
    double v = 1.0;
    for (int a = 0; a < 2; ++a) v *= 0.5 * (1.0 + std::cos(2.0 * kPi * (x[a] - probe.base[a]) / g.axis(a).length()));
    smooth[static_cast<Eigen::Index>(p)] = v;
  }
  struct Input {
    const char* name;
    Vector values;
    bool conormal_regular;
    bool tangential_regular;
  };
  const std::vector<Input> inputs{
      {"smooth_bump", smooth, true, true},
      {"delta_point", point_delta(op, probe.base), false, false},
      {"delta_line", line_delta(op, probe.base[0]), false, true},
  };
  std::vector<PanelEntry> out;
  for (const auto& in : inputs) {
    FieldNet net;
    net.eps = probe.eps;
    for (double e : probe.eps) net.fields.push_back(reg.apply(in.values, e));
    for (int d = 0; d < 2; ++d) {
      ConeProbe p = probe;
      p.direction = d == 0 ? std::array<double, 2>{1.0, 0.0} : std::array<double, 2>{0.0, 1.0};
      out.push_back({in.name, d == 0 ? "conormal" : "tangential", d == 0 ? in.conormal_regular : in.tangential_regular,
                     cone_decay(op, net, p)});
    }
  }
  return out;
}

}  // namespace wavemollify
