#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wavemollify/geometry.hpp"

namespace wavemollify {

// Lowest eigenpairs of -Delta. Columns of `vectors` are orthonormal in the
// weighted inner product.
struct EigenSystem {
  Vector values;
  Eigen::MatrixXd vectors;
  std::uint64_t fingerprint = 0;
  std::string geometry_text;

  std::size_t count() const { return static_cast<std::size_t>(values.size()); }
  // max_k ||(-Delta) e_k - lambda_k e_k|| / (1 + lambda_k), weighted norm.
  double max_residual(const LaplaceBeltrami& op) const;
  // max |E^T W E - I| entry.
  double orthonormality_error(const Vector& weights) const;
};

struct EigenOptions {
  std::size_t dense_limit = 4096;
  std::size_t block = 16;
  double residual_tol = 1e-9;
  std::uint64_t seed = 20240611;
};

// Dense symmetric solve up to dense_limit unknowns; above that, block
// shift-invert Krylov with full reorthogonalization and a residual recheck.
EigenSystem compute_eigensystem(const LaplaceBeltrami& op, std::size_t count,
                                const EigenOptions& opt = {});

struct CacheEntry {
  std::filesystem::path path;
  std::uint64_t fingerprint = 0;
  std::size_t count = 0;
  std::size_t unknowns = 0;
  std::uintmax_t bytes = 0;
  bool intact = false;
  std::string geometry_text;
  std::string problem;
};

// Binary eigensystem store keyed by geometry fingerprint. Writes go through a
// temporary file and rename under an exclusive lock; reads take a shared lock.
class EigenCache {
 public:
  explicit EigenCache(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  // A stored system for this fingerprint holding at least `count` pairs,
  // truncated to `count`. Corrupted entries are reported as absent.
  std::optional<EigenSystem> load(std::uint64_t fingerprint, std::size_t count) const;
  void store(const EigenSystem& es) const;

  std::vector<CacheEntry> list() const;
  std::size_t purge() const;

  // Default location: $WAVEMOLLIFY_CACHE_DIR, else ./.wavemollify-cache.
  static std::filesystem::path default_dir();

 private:
  std::filesystem::path dir_;
};

// Served from the cache when possible, computed and stored otherwise. A failed
// store only warns.
EigenSystem eigensystem(const LaplaceBeltrami& op, std::size_t count, const EigenCache* cache,
                        const EigenOptions& opt = {});

// Largest eigenvalue the grid resolves faithfully: (k_nyq / 4)^2 with
// k_nyq = pi / (longest edge).
double trusted_threshold(const Geometry& g);

struct WeylFit {
  double exponent = 0.0;
  double r_squared = 0.0;
  std::size_t trusted = 0;
  double threshold = 0.0;
};

// Least-squares slope of log N(lambda) against log lambda over the positive
// eigenvalues below `threshold`, with N at the midpoint of each jump. Needs at
// least 100 of them.
WeylFit weyl_exponent(const Vector& eigenvalues, double threshold);

}  // namespace wavemollify
