#pragma once

#include <functional>
#include <memory>

#include "wavemollify/eigen.hpp"
#include "wavemollify/geometry.hpp"

namespace wavemollify {

// A weight-orthonormal eigenbasis of -Delta on the grid, in whatever
// ordering the backend finds natural.
class SpectralBasis {
 public:
  virtual ~SpectralBasis() = default;

  virtual std::size_t size() const = 0;
  virtual const Vector& eigenvalues() const = 0;
  // c_k = <u, e_k>_W
  virtual Vector analyze(const Vector& u) const = 0;
  // sum_k c_k e_k
  virtual Vector synthesize(const Vector& c) const = 0;
  // True when the basis spans the whole grid space.
  virtual bool complete() const = 0;

  // g(-Delta) u for a real function g of the eigenvalue.
  Vector apply(const std::function<double(double)>& g, const Vector& u) const;
  // Same, with the multiplier values given per basis index.
  Vector apply_diagonal(const Vector& symbol, const Vector& u) const;
};

// Backed by an explicit EigenSystem.
class EigenBasis final : public SpectralBasis {
 public:
  EigenBasis(EigenSystem es, std::shared_ptr<const Vector> weights);

  std::size_t size() const override { return es_.count(); }
  const Vector& eigenvalues() const override { return es_.values; }
  Vector analyze(const Vector& u) const override;
  Vector synthesize(const Vector& c) const override;
  bool complete() const override { return static_cast<Eigen::Index>(es_.count()) == es_.vectors.rows(); }
  const EigenSystem& system() const { return es_; }

 private:
  EigenSystem es_;
  std::shared_ptr<const Vector> weights_;
};

// Real trigonometric basis for uniform periodic grids, applied with FFTW's
// half-complex transforms. Index layout follows FFTW's R2HC output, so index k
// along an axis is cos(2 pi k i / n) for k <= n/2 and sin(2 pi (n-k) i / n) above.
class FourierBasis final : public SpectralBasis {
 public:
  explicit FourierBasis(const LaplaceBeltrami& op);
  ~FourierBasis() override;
  FourierBasis(const FourierBasis&) = delete;
  FourierBasis& operator=(const FourierBasis&) = delete;

  std::size_t size() const override { return static_cast<std::size_t>(lambda_.size()); }
  const Vector& eigenvalues() const override { return lambda_; }
  Vector analyze(const Vector& u) const override;
  Vector synthesize(const Vector& c) const override;
  bool complete() const override { return true; }

  // Integer wavenumber (signed: negative for sine modes) of basis index k along `axis`.
  int wavenumber(std::size_t index, int axis) const;

 private:
  struct Plans;
  std::array<std::size_t, 2> shape_{};
  int dim_ = 1;
  double weight_ = 1.0;
  Vector lambda_;
  Vector analysis_scale_;
  Vector synthesis_scale_;
  std::unique_ptr<Plans> plans_;
};

// FourierBasis for flat grids, otherwise a complete EigenBasis (cached).
std::unique_ptr<SpectralBasis> make_basis(const LaplaceBeltrami& op, const EigenCache* cache);

}  // namespace wavemollify
