#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "wavemollify/eigen.hpp"
#include "wavemollify/geometry.hpp"
#include "wavemollify/kernels.hpp"
#include "wavemollify/spectral_basis.hpp"

namespace wavemollify {

enum class Engine { kSpectral, kWaveGroup };

const char* engine_name(Engine e);
Engine parse_engine(const std::string& name);

struct RegularizerConfig {
  Engine engine = Engine::kSpectral;
  // Wave-group time steps per unit of eps.
  double nodes_per_unit = 16.0;
  // Step size as a fraction of 2 / sqrt(spectral bound).
  double cfl = 0.5;
  // Extra angular frequency the trapezoid rule in s must resolve beyond
  // b/eps + sqrt(lambda_max); covers the spectrum of phi_c.
  double alias_guard = 320.0;
  double energy_tol = 1e-6;
  // 0 selects the complete basis.
  std::size_t eigencount = 0;
  CutoffMode mode = CutoffMode::kTruncated;
  // Run both engines and fail when they differ by more than cross_tol * ||u||.
  bool cross_check = false;
  double cross_tol = 1e-6;

  void validate() const;
};

struct WaveDiagnostics {
  double step = 0.0;
  std::size_t steps = 0;
  int taylor_terms = 0;
  double theta_max = 0.0;
  double energy_drift = 0.0;
  std::size_t matvecs = 0;
};

struct RunDiagnostics {
  Engine engine = Engine::kSpectral;
  double eps = 0.0;
  double tail_bound = 0.0;
  std::size_t quadrature_nodes = 0;
  WaveDiagnostics wave;
  double cross_engine_residual = -1.0;
};

// Step control for the Taylor-corrected leapfrog
//   w_{n+1} = 2 C w_n - w_{n-1},  C = sum_{j<=J} (-ds^2 A)^j / (2j)!,
// which is a truncation of 2 cos(ds sqrt(A)). J is chosen so the truncated
// series error stays below the roundoff of the accumulated phase.
struct WavePlan {
  double step = 0.0;
  std::size_t steps = 0;
  int taylor_terms = 1;
  double theta_max = 0.0;
};

WavePlan plan_wave(double s_max, double max_step, double spectral_bound, double cfl);

// cos(s sqrt(-Delta)) u0 sampled at s_n = n * step.
class WaveGroup {
 public:
  WaveGroup(const LaplaceBeltrami& op, WavePlan plan, double energy_tol = 1e-6);

  // Calls visit(n, w_n) for n = 0..steps. Throws ConvergenceError with a step
  // report when the discrete energy drifts beyond the tolerance.
  WaveDiagnostics run(const Vector& u0,
                      const std::function<void(std::size_t, const Vector&)>& visit) const;

  const WavePlan& plan() const { return plan_; }

 private:
  Vector apply_c(const Vector& w) const;

  const LaplaceBeltrami* op_;
  WavePlan plan_;
  double energy_tol_;
};

struct WaveTrajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  WaveDiagnostics diagnostics;
};

// Stores the whole trajectory; meant for short runs and tests.
WaveTrajectory wave_propagate(const LaplaceBeltrami& op, const Vector& u0, double s_max,
                              double cfl, double max_step = 1e300);

// T_eps = F_eps(sqrt(-Delta)) through either engine.
class Regularizer {
 public:
  Regularizer(std::shared_ptr<const LaplaceBeltrami> op, KernelPair kernel, RegularizerConfig cfg,
              const EigenCache* cache = nullptr);

  Vector apply(const Vector& u, double eps, RunDiagnostics* diag = nullptr) const;
  Vector apply_spectral(const Vector& u, double eps, RunDiagnostics* diag = nullptr) const;
  Vector apply_wave(const Vector& u, double eps, RunDiagnostics* diag = nullptr) const;

  // m_eps(sqrt(lambda_k)) for every basis index.
  const Vector& symbol(double eps) const;

  const LaplaceBeltrami& op() const { return *op_; }
  std::shared_ptr<const LaplaceBeltrami> shared_op() const { return op_; }
  const KernelPair& kernel() const { return kernel_; }
  const RegularizerConfig& config() const { return cfg_; }
  const SpectralBasis& basis() const;
  WavePlan wave_plan(double eps) const;

 private:
  std::shared_ptr<const LaplaceBeltrami> op_;
  KernelPair kernel_;
  RegularizerConfig cfg_;
  const EigenCache* cache_;
  mutable std::unique_ptr<SpectralBasis> basis_;
  mutable std::map<double, Vector> symbols_;
  mutable std::map<double, std::size_t> symbol_nodes_;
};

// Geodesic distance from the support {p : u_p != 0} to every node. Exact for
// flat and one-dimensional models; a 16-neighbour Dijkstra otherwise.
Vector distance_from_support(const LaplaceBeltrami& op, const Vector& u);

struct SupportReport {
  double radius = 0.0;             // 2c C_D plus the cell margin
  double outside_mass = 0.0;       // ||T u outside|| / ||T u||
  double outside_max = 0.0;        // max |T u| outside / max |T u|
  double localization = -1.0;      // base vs padded on the fattened support, relative
  std::size_t pad_cells = 0;
};

// Requires the fattened support to leave a gap around the periodic domain.
SupportReport support_radius_check(const Regularizer& reg, const Vector& u, double eps,
                                   double margin_cells, bool compare_padded);

// ||T(shift u) - shift(T u)|| / ||u|| for a whole-cell translation of a flat grid.
double isometry_equivariance_check(const Regularizer& reg, const Vector& u, double eps,
                                   std::array<long, 2> shift);

// Periodic whole-cell translation of grid values.
Vector translate(const Geometry& g, const Vector& u, std::array<long, 2> shift);

// (mu_eps * u)(x_i) = h sum_j mu_eps(x_i - x_j) u_j on an EuclideanLine grid,
// offsets taken periodically (minimum image).
Vector euclidean_convolution(const LaplaceBeltrami& line, const Vector& u, double eps, const KernelPair& k);

// ||Delta T u - T Delta u|| / ||Delta u||.
double commute_with_laplacian_check(const Regularizer& reg, const Vector& u, double eps);

std::string diagnostics_json(const RunDiagnostics& d);

}  // namespace wavemollify
