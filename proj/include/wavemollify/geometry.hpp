#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace wavemollify {

using Vector = Eigen::VectorXd;

// Named built-in metric coefficient on normalized phases tp, xp in [0, 1):
//   base + amp_t sin(2 pi mode_t tp) + amp_x cos(2 pi mode_x xp)
struct Profile {
  double base = 1.0;
  double amp_t = 0.0;
  double amp_x = 0.0;
  int mode_t = 1;
  int mode_x = 1;

  double operator()(double tp, double xp) const;
  bool is_constant() const { return amp_t == 0.0 && amp_x == 0.0; }
};

enum class Model { kCircle, kFlatTorus, kWarpedSlab, kEuclideanLine };

const char* model_name(Model m);

struct Axis {
  std::size_t n = 0;
  double origin = 0.0;
  double spacing = 1.0;
  double period = 1.0;  // period of the metric profiles along this axis

  double coordinate(std::size_t i) const { return origin + spacing * static_cast<double>(i); }
  double length() const { return spacing * static_cast<double>(n); }
};

// Periodic structured grid carrying a diagonal metric. One-dimensional models
// use axis 0 with metric f(x)^2 dx^2. The slab uses axis 0 for t and axis 1
// for the S^1 coordinate with metric beta dt^2 + f^2 dx^2.
class Geometry {
 public:
  static Geometry circle(std::size_t n, Profile f = {}, double length = 0.0);
  static Geometry flat_torus(std::size_t n0, std::size_t n1, double length0, double length1);
  static Geometry warped_slab(std::size_t n_t, std::size_t n_s, double period_t, double length_s,
                              Profile beta, Profile f);
  static Geometry euclidean_line(double half_length, double spacing);

  Model model() const { return model_; }
  int dim() const { return dim_; }
  const Axis& axis(int a) const { return axes_[static_cast<std::size_t>(a)]; }
  std::size_t size() const;
  std::array<std::size_t, 2> shape() const { return {axes_[0].n, dim_ == 2 ? axes_[1].n : 1}; }

  // Metric coefficients at a physical point. One-dimensional models ignore t.
  double beta(double t, double x) const;
  double f(double t, double x) const;
  const Profile& beta_profile() const { return beta_; }
  const Profile& f_profile() const { return f_; }

  // Coordinates of node p as (t, x); one-dimensional models return (0, x).
  std::array<double, 2> point(std::size_t p) const;

  // Geometry with `cells` extra nodes on both ends of every axis. Metric
  // profiles keep their original periods, so the extension agrees with this
  // geometry on the original cells.
  Geometry padded(std::size_t cells) const;

  // Geometric length of the longest grid edge.
  double max_edge_length() const;
  // Geometric length of the shortest grid edge.
  double min_edge_length() const;

  // Round-trip text form "model=...;n0=...;..."; used in cache headers.
  std::string serialize() const;
  static Geometry deserialize(const std::string& text);

 private:
  Geometry() = default;
  void validate() const;

  Model model_ = Model::kCircle;
  int dim_ = 1;
  std::array<Axis, 2> axes_{};
  Profile beta_{};
  Profile f_{};
};

// Real values on the grid with the node volume weights of the discrete measure.
struct GridFunction {
  Vector values;
  std::shared_ptr<const Vector> weights;

  double inner(const GridFunction& other) const;
  double norm() const;
};

double weighted_inner(const Vector& u, const Vector& v, const Vector& w);
double weighted_norm(const Vector& u, const Vector& w);

// Divergence-form Laplace-Beltrami operator. With node weights W = sqrt(det rho) dV
// and edge conductances K, -Delta = W^{-1} K with K symmetric positive semidefinite.
class LaplaceBeltrami {
 public:
  explicit LaplaceBeltrami(Geometry g);

  const Geometry& geometry() const { return geometry_; }
  std::size_t size() const { return geometry_.size(); }
  const Vector& weights() const { return *weights_; }
  std::shared_ptr<const Vector> shared_weights() const { return weights_; }
  GridFunction function(Vector values) const { return {std::move(values), weights_}; }

  // Delta u (negative semidefinite).
  Vector apply(const Vector& u) const;
  // The part of Delta u coming from differences along one axis.
  Vector apply_axis(int axis, const Vector& u) const;

  // Upper bound on the spectrum of -Delta by Gershgorin's theorem.
  double spectral_bound() const;

  // True when weights and per-axis conductances are uniform, so the
  // discrete Fourier modes diagonalize the operator.
  bool is_flat() const;
  // Uniform per-axis coefficient c_a with (-Delta u)_p = sum_a c_a (2u_p - u_{p+a} - u_{p-a});
  // only meaningful when is_flat().
  double flat_coefficient(int axis) const;

  // K, so that -Delta = W^{-1} K.
  Eigen::SparseMatrix<double> stiffness() const;
  // W^{-1/2} K W^{-1/2}, the symmetric form of -Delta.
  Eigen::SparseMatrix<double> symmetric_form() const;

  // FNV-1a hash of the model description and every assembled coefficient.
  std::uint64_t fingerprint() const { return fingerprint_; }

  // Neighbour of node p along `axis` (+1 or -1 step), periodic.
  std::size_t neighbour(std::size_t p, int axis, int step) const;

 private:
  Geometry geometry_;
  std::shared_ptr<const Vector> weights_;
  std::array<Vector, 2> conductance_;  // edge p -> p + e_a
  std::uint64_t fingerprint_ = 0;
};

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed = 1469598103934665603ull);

}  // namespace wavemollify
