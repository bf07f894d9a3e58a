#include "wavemollify/spectral_basis.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "wavemollify/errors.hpp"

namespace wavemollify {
namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

bool is_sine_slot(std::size_t k, std::size_t n) { return k > n / 2; }
bool is_unpaired(std::size_t k, std::size_t n) { return k == 0 || (n % 2 == 0 && k == n / 2); }

}  // namespace

Vector SpectralBasis::apply(const std::function<double(double)>& g, const Vector& u) const {
  const Vector& lam = eigenvalues();
  Vector symbol(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) symbol[i] = g(lam[i]);
  return apply_diagonal(symbol, u);
}

Vector SpectralBasis::apply_diagonal(const Vector& symbol, const Vector& u) const {
  Vector c = analyze(u);
  c.array() *= symbol.array();
  return synthesize(c);
}

EigenBasis::EigenBasis(EigenSystem es, std::shared_ptr<const Vector> weights)
    : es_(std::move(es)), weights_(std::move(weights)) {
  if (es_.vectors.rows() != weights_->size()) {
    throw ValidationError("eigensystem and weights have different grid sizes");
  }
}

Vector EigenBasis::analyze(const Vector& u) const {
  return es_.vectors.transpose() * (u.array() * weights_->array()).matrix();
}

Vector EigenBasis::synthesize(const Vector& c) const { return es_.vectors * c; }

struct FourierBasis::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  double* buffer = nullptr;
  std::size_t n = 0;

  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    if (buffer) fftw_free(buffer);
  }
};

FourierBasis::FourierBasis(const LaplaceBeltrami& op) : plans_(std::make_unique<Plans>()) {
  if (!op.is_flat()) throw ValidationError("FourierBasis needs uniform weights and conductances");
  const Geometry& g = op.geometry();
  dim_ = g.dim();
  shape_ = g.shape();
  weight_ = op.weights()[0];
  const std::size_t n = g.size();
  plans_->n = n;
  {
    std::lock_guard lock(planner_mutex());
    plans_->buffer = fftw_alloc_real(n);
    if (dim_ == 1) {
      const int len = static_cast<int>(shape_[0]);
      plans_->forward =
          fftw_plan_r2r_1d(len, plans_->buffer, plans_->buffer, FFTW_R2HC, FFTW_ESTIMATE | FFTW_UNALIGNED);
      plans_->backward =
          fftw_plan_r2r_1d(len, plans_->buffer, plans_->buffer, FFTW_HC2R, FFTW_ESTIMATE | FFTW_UNALIGNED);
    } else {
      const int n0 = static_cast<int>(shape_[0]);
      const int n1 = static_cast<int>(shape_[1]);
      plans_->forward = fftw_plan_r2r_2d(n0, n1, plans_->buffer, plans_->buffer, FFTW_R2HC,
                                         FFTW_R2HC, FFTW_ESTIMATE | FFTW_UNALIGNED);
      plans_->backward = fftw_plan_r2r_2d(n0, n1, plans_->buffer, plans_->buffer, FFTW_HC2R,
                                          FFTW_HC2R, FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
  }
  if (!plans_->forward || !plans_->backward) throw Error("FFTW planning failed");

  lambda_.resize(static_cast<Eigen::Index>(n));
  analysis_scale_.resize(static_cast<Eigen::Index>(n));
  synthesis_scale_.resize(static_cast<Eigen::Index>(n));
  const double total = static_cast<double>(n);
  for (std::size_t idx = 0; idx < n; ++idx) {
    double lam = 0.0;
    double a_scale = std::sqrt(weight_ / total);
    double s_scale = 1.0 / std::sqrt(weight_ * total);
    for (int a = 0; a < dim_; ++a) {
      const std::size_t len = shape_[static_cast<std::size_t>(a)];
      const std::size_t k = dim_ == 1 ? idx : (a == 0 ? idx / shape_[1] : idx % shape_[1]);
      const std::size_t freq = is_sine_slot(k, len) ? len - k : k;
      const double theta = 2.0 * std::numbers::pi * static_cast<double>(freq) / static_cast<double>(len);
      lam += op.flat_coefficient(a) * (2.0 - 2.0 * std::cos(theta));
      if (!is_unpaired(k, len)) {
        a_scale *= std::sqrt(2.0);
        s_scale /= std::sqrt(2.0);
      }
      // R2HC stores -sum u sin for sine slots.
      if (is_sine_slot(k, len)) {
        a_scale = -a_scale;
        s_scale = -s_scale;
      }
    }
    lambda_[static_cast<Eigen::Index>(idx)] = lam;
    analysis_scale_[static_cast<Eigen::Index>(idx)] = a_scale;
    synthesis_scale_[static_cast<Eigen::Index>(idx)] = s_scale;
  }
}

FourierBasis::~FourierBasis() = default;

Vector FourierBasis::analyze(const Vector& u) const {
  Vector c = u;
  fftw_execute_r2r(plans_->forward, c.data(), c.data());
  c.array() *= analysis_scale_.array();
  return c;
}

Vector FourierBasis::synthesize(const Vector& c) const {
  Vector u = (c.array() * synthesis_scale_.array()).matrix();
  fftw_execute_r2r(plans_->backward, u.data(), u.data());
  return u;
}

int FourierBasis::wavenumber(std::size_t index, int axis) const {
  const std::size_t len = shape_[static_cast<std::size_t>(axis)];
  const std::size_t k = dim_ == 1 ? index : (axis == 0 ? index / shape_[1] : index % shape_[1]);
  return is_sine_slot(k, len) ? -static_cast<int>(len - k) : static_cast<int>(k);
}

std::unique_ptr<SpectralBasis> make_basis(const LaplaceBeltrami& op, const EigenCache* cache) {
  if (op.is_flat()) return std::make_unique<FourierBasis>(op);
  return std::make_unique<EigenBasis>(eigensystem(op, op.size(), cache), op.shared_weights());
}

}  // namespace wavemollify
