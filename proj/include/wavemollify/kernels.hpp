#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "wavemollify/quadrature.hpp"

namespace wavemollify {

// Smooth transition from 0 (t <= 0) to 1 (t >= 1) built from the
// exp(-1/t) partition of unity. All derivatives vanish at both ends.
double smooth_step(double t);

// Even plateau function F: identically 1 on [-plateau_radius, plateau_radius],
// identically 0 outside (-support_radius, support_radius), smooth in between.
struct PlateauFunction {
  double plateau_radius = 1.0;
  double support_radius = 2.0;

  void validate() const;
  double operator()(double x) const;
};

// Even time cutoff phi_c: 1 on [-c, c], supported in (-2c, 2c).
struct TimeCutoff {
  double c = 1.0;

  void validate() const;
  double operator()(double s) const;
  PlateauFunction as_plateau() const { return {c, 2.0 * c}; }
};

// Samples of the Fourier transform F^(s) = \int F(x) e^{-isx} dx on a uniform
// grid s_k = k * spacing, k >= 0, with band-limited interpolation in between.
// F is real and even, so F^ is real and even and only s >= 0 is stored.
class TabulatedTransform {
 public:
  TabulatedTransform(PlateauFunction source, double spacing, std::vector<double> samples,
                     double tolerance, std::vector<Panel> panels);

  // Interpolated F^(s); throws ValidationError beyond max_s().
  double operator()(double s) const;

  const PlateauFunction& source() const { return source_; }
  double spacing() const { return spacing_; }
  double max_s() const { return spacing_ * static_cast<double>(samples_.size() - kStencil); }
  double tolerance() const { return tolerance_; }
  std::span<const double> samples() const { return samples_; }
  std::span<const Panel> glue_panels() const { return panels_; }

  // \int_from^max_s s^power |F^(s)| ds, by the trapezoid rule on the samples.
  double abs_moment(double from, int power = 0) const;

  // Least-squares decay exponent of the running envelope max_{s'>=s}|F^(s')|
  // against log(1+s) over [from, s_floor], where s_floor is the last sample
  // with envelope above `floor`.
  double fitted_decay_exponent(double from, double floor = 1e-13) const;

  // Two columns "s,Fhat" for s >= 0.
  void write_csv(std::ostream& out) const;

  static constexpr int kStencil = 12;

 private:
  PlateauFunction source_;
  double spacing_;
  std::vector<double> samples_;
  double tolerance_;
  std::vector<Panel> panels_;
};

// Tabulates F^ on [0, max_s] with adaptive Gauss-Legendre panels over the
// glue region; absolute error per sample <= tol.
TabulatedTransform fourier_transform(const PlateauFunction& p, double tol, double max_s);

// Process-wide memo of fourier_transform; returns a table covering at least max_s.
std::shared_ptr<const TabulatedTransform> shared_fourier_transform(const PlateauFunction& p,
                                                                   double tol, double max_s);

// Plateau F, time cutoff phi_c and the tabulated F^ they share.
class KernelPair {
 public:
  // The table covers every sigma needed for eps >= eps_min.
  KernelPair(PlateauFunction plateau = {}, TimeCutoff cutoff = {}, double eps_min = 0x1p-9,
             double tol = 1e-12);

  const PlateauFunction& plateau() const { return plateau_; }
  const TimeCutoff& cutoff() const { return cutoff_; }
  const TabulatedTransform& transform() const { return *transform_; }
  double eps_min() const { return eps_min_; }

  // (F_eps)^(s) = F^(s / eps) / eps.
  double scaled_transform(double s, double eps) const;

 private:
  PlateauFunction plateau_;
  TimeCutoff cutoff_;
  double eps_min_;
  std::shared_ptr<const TabulatedTransform> transform_;
};

enum class CutoffMode {
  kTruncated,  // phi_c as constructed
  kUnit,       // phi_c replaced by 1: plain Fourier inversion, diagnostic only
};

struct MultiplierValue {
  double value = 0.0;
  double tail_bound = 0.0;
};

// (1/2pi) \int_{|sigma| >= c/eps} |F^(sigma)| dsigma.
double tail_bound(double eps, const KernelPair& k);

// eps^n (1/2pi) \int_{|sigma| >= c/eps} |sigma|^n |F^(sigma)| dsigma; bounds the
// n-th moment of the Euclidean mollifier since F^ has vanishing moments.
double moment_tail_bound(int n, double eps, const KernelPair& k);

// m_eps evaluated at many frequencies for one eps. Quadrature nodes and
// weights are built once: sigma in [0, 2c/eps] with composite Gauss-Legendre
// panels no wider than pi/(4 eps freq_max) and pi/(4 support_radius).
class SpectralMultiplier {
 public:
  SpectralMultiplier(const KernelPair& k, double eps, double freq_max,
                     CutoffMode mode = CutoffMode::kTruncated);

  // m_eps(freq) = (1/2pi) \int phi_c(s) (F_eps)^(s) cos(s freq) ds.
  double operator()(double freq) const;
  std::vector<double> evaluate(std::span<const double> freqs) const;

  double eps() const { return eps_; }
  double freq_max() const { return freq_max_; }
  double tail_bound() const { return tail_bound_; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  double eps_;
  double freq_max_;
  double tail_bound_;
  std::vector<double> nodes_;    // eps * sigma_j
  std::vector<double> weights_;  // w_j phi_c(eps sigma_j) F^(sigma_j) / pi
};

// Single evaluation of m_eps(freq) with its tail bound.
MultiplierValue multiplier(double freq, double eps, const KernelPair& k,
                           CutoffMode mode = CutoffMode::kTruncated);

// Uniform 1D sample points origin + i * spacing, i = 0..count-1.
struct LineGrid {
  double origin = 0.0;
  double spacing = 1.0;
  std::size_t count = 0;

  double at(std::size_t i) const { return origin + spacing * static_cast<double>(i); }
};

// mu_eps(x) = phi_c(x) F^(x/eps) / (2 pi eps) sampled on the grid. Requires at
// least 8 samples per unit of eps.
std::vector<double> euclidean_mollifier(double eps, const KernelPair& k, const LineGrid& grid);

}  // namespace wavemollify
