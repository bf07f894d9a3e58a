#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "wavemollify/geometry.hpp"
#include "wavemollify/spectral_basis.hpp"

namespace wavemollify {

enum class DistributionKind { kDelta, kDeltaPrime, kSawtooth, kSmoothBump, kSobolevRandom, kBandLimited, kConstant };

const char* kind_name(DistributionKind k);
DistributionKind parse_kind(const std::string& name);

inline constexpr double kSobolevMargin = 0.02;

struct DistributionSpec {
  DistributionKind kind = DistributionKind::kDelta;
  // (t, x); one-dimensional geometries read only x.
  std::array<double, 2> center{0.0, 0.0};
  // SmoothBump support radius in coordinate units.
  double width = 1.0;
  // SobolevRandom order.
  double s = 0.0;
  // Frequency band sqrt(lambda) <= band. Required for BandLimited; for
  // SobolevRandom 0 means the whole resolved band.
  double band = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SpectralDistribution {
  DistributionSpec spec;
  double nominal_s = 0.0;        // +infinity for smooth inputs
  Vector coefficients;           // basis ordering
  Vector values;                 // grid values
  double support_radius = -1.0;  // coordinate radius about center, -1 if not compact

  void write_csv(std::ostream& out, const SpectralBasis& basis) const;
};

// Delta and DeltaPrime act on the grid through the discrete measure:
// <delta, phi>_W = phi(p0) and <delta', phi>_W = -(phi(p0+h) - phi(p0-h)) / 2h
// along the last axis. Sawtooth and SmoothBump are sampled, SobolevRandom and
// BandLimited are synthesized from coefficients.
SpectralDistribution make_distribution(const DistributionSpec& spec, const LaplaceBeltrami& op,
                                       const SpectralBasis& basis);

// (sum_k (1 + lambda_k)^s c_k^2)^{1/2}, optionally over sqrt(lambda_k) <= band.
double sobolev_norm(const Vector& coefficients, const Vector& eigenvalues, double s, double band = 0.0);
double sobolev_norm(const SpectralBasis& basis, const Vector& values, double s, double band = 0.0);

// Nearest grid node to a physical point (periodic).
std::size_t nearest_node(const Geometry& g, std::array<double, 2> point);

// phi(|t - center|) on a slab grid, phi the plateau {half_width/2, half_width}.
Vector time_bump(const Geometry& slab, double center, double half_width);

// Geometry of the time slice {t} x S carrying h_t = f(t, x)^2 dx^2.
Geometry slice_geometry(const Geometry& slab, std::size_t t_index);

struct Slice {
  std::size_t t_index = 0;
  double t = 0.0;
  Geometry geometry;
  Vector values;
  Vector weights;
};

Slice restrict_to_slice(const LaplaceBeltrami& slab, const Vector& u, std::size_t t_index);

// a(t) b(x) on the slab grid.
Vector tensor_product(const Geometry& slab, const Vector& a, const Vector& b);

}  // namespace wavemollify
