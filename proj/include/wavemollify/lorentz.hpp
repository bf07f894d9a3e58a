#pragma once

#include <map>
#include <memory>
#include <vector>

#include "wavemollify/funcalc.hpp"
#include "wavemollify/nets.hpp"

namespace wavemollify {

// Splitting lambda = -beta dt^2 + h_t of a warped slab, with the Riemannian
// partner rho = beta dt^2 + h_t whose Laplacian is the slab operator.
class LorentzSplit {
 public:
  explicit LorentzSplit(std::shared_ptr<const LaplaceBeltrami> slab);

  const LaplaceBeltrami& op() const { return *op_; }
  std::shared_ptr<const LaplaceBeltrami> shared_op() const { return op_; }
  const Geometry& geometry() const { return op_->geometry(); }

  // (1/sqrt(beta det h)) d_t (sqrt(det h / beta) d_t u), the t-part of Delta_rho.
  Vector theta(const Vector& u) const;
  // The S-part of Delta_rho.
  Vector spatial(const Vector& u) const;
  // Box_lambda = Delta_rho - 2 Theta, assembled as spatial - theta.
  Vector box(const Vector& u) const;
  // Centred difference in t.
  Vector dt(const Vector& u) const;
  // [Theta, Delta_rho] u.
  Vector theta_laplacian_commutator(const Vector& u) const;

  // ||(Box - Delta_rho + 2 Theta) u|| / ||u||.
  double identity_residual(const Vector& u) const;
  // True when beta and f do not depend on t.
  bool is_static() const;

 private:
  std::shared_ptr<const LaplaceBeltrami> op_;
};

// 1 + a cos(2 pi m x / L_S) on the slab grid (x the S coordinate).
Vector cosine_multiplier(const Geometry& slab, double base, double amplitude, int mode = 1);

struct ExperimentResult {
  EpsilonNet net;
  OrderVerdict fit;
  double input_norm = 0.0;     // ||u||_{L^2}
  double sobolev_norm = 0.0;   // ||u||_{H^k} for the order the statement uses
  std::vector<double> ratio;   // net / eps^2
  // Rigorous discrete bound for the Box commutator (empty otherwise):
  // 2 (C1 / 4 pi) ||u||_{H^3} ||phi_c||_inf ||sigma^2 F^||_{L^1} eps^2.
  std::vector<double> bound;
  double c1 = -1.0;            // ||[Theta, Delta_rho]||_{H^3 -> L^2}
  std::vector<RunDiagnostics> diagnostics;
};

struct ExperimentOptions {
  std::vector<double> eps = EpsilonNet::dyadic(2, 7);
  OrderOptions fit;
  // Compute C1 and the proof bound (box commutator only).
  bool proof_bound = false;
};

// Throws ValidationError unless supp u, fattened by the propagation radius 2c
// in t, stays clear of itself across the periodic seam.
void require_time_support(const LorentzSplit& split, const Regularizer& reg, const Vector& u);

// ||T_eps Box u - Box T_eps u||.
ExperimentResult commutator_experiment(const LorentzSplit& split, const Regularizer& reg, const Vector& u,
                                       const ExperimentOptions& opt = {});
// ||T_eps d_t u - d_t T_eps u||.
ExperimentResult dt_commutator_experiment(const LorentzSplit& split, const Regularizer& reg, const Vector& u,
                                          const ExperimentOptions& opt = {});
// ||T_eps (alpha u) - alpha T_eps u||.
ExperimentResult mult_commutator_experiment(const LorentzSplit& split, const Regularizer& reg, const Vector& u,
                                            const Vector& alpha, const ExperimentOptions& opt = {});

// Largest singular value of [Theta, Delta_rho] (1 - Delta_rho)^{-3/2}, by power iteration
// in the eigenbasis of the regularizer.
double theta_commutator_norm(const LorentzSplit& split, const Regularizer& reg, int iterations = 60);

// n evenly spaced time levels in [lo, hi] (fractions of the period).
std::vector<std::size_t> slice_panel(const Geometry& slab, std::size_t n = 17, double lo = 0.25, double hi = 0.75);

// Regularizers on the slice geometries h_t, built on demand.
class SliceRegularizers {
 public:
  SliceRegularizers(const Geometry& slab, KernelPair kernel, RegularizerConfig cfg, const EigenCache* cache = nullptr);
  const Regularizer& at(std::size_t t_index) const;

 private:
  Geometry slab_;
  KernelPair kernel_;
  RegularizerConfig cfg_;
  const EigenCache* cache_;
  mutable std::map<std::size_t, std::unique_ptr<Regularizer>> slices_;
};

struct SliceResult {
  ExperimentResult result;
  std::vector<std::size_t> panel;
  std::vector<std::size_t> argmax;  // worst slice per eps
};

// sup_{t in Z} ||(T_eps u)(t) - T^{h_t}_eps u(t)||_{L^2(S, h_t)}.
SliceResult slice_experiment(const LorentzSplit& split, const Regularizer& reg, const SliceRegularizers& slices,
                             const Vector& u, const std::vector<std::size_t>& panel,
                             const ExperimentOptions& opt = {});

// Association of the restricted slab net with the slice net at one level,
// against a panel of test functions on S.
AssociationVerdict slice_association_check(const LorentzSplit& split, const Regularizer& reg,
                                           const SliceRegularizers& slices, const Vector& u, std::size_t t_index,
                                           const std::vector<Vector>& tests, const ExperimentOptions& opt = {});

// The delta family u(t) = delta_{x0} on every slice: 1 / (f(t, x0) h_x) at x0.
Vector slice_delta_family(const Geometry& slab, double x0);

// Eight plateau bumps on S with centres spread over the circle.
std::vector<Vector> bump_panel(const Geometry& circle, std::size_t count = 8, double width_fraction = 0.2);

}  // namespace wavemollify
