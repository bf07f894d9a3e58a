#include "wavemollify/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <tuple>

#include "wavemollify/errors.hpp"

namespace wavemollify {
namespace {

constexpr double kPi = std::numbers::pi;

// Samples per pi/support_radius; F^ has exponential type support_radius.
constexpr double kOversample = 32.0;

constexpr std::array<double, TabulatedTransform::kStencil> barycentric_weights() {
  std::array<double, TabulatedTransform::kStencil> w{};
  double binom = 1.0;
  const int n = TabulatedTransform::kStencil - 1;
  for (int j = 0; j <= n; ++j) {
    w[j] = (j % 2 == 0) ? binom : -binom;
    binom = binom * (n - j) / (j + 1);
  }
  return w;
}

constexpr auto kBary = barycentric_weights();

}  // namespace

double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  // g(t) / (g(t) + g(1-t)) with g(t) = exp(-1/t), rewritten to avoid 0/0.
  return 1.0 / (1.0 + std::exp(1.0 / t - 1.0 / (1.0 - t)));
}

void PlateauFunction::validate() const {
  if (!(plateau_radius > 0.0) || !(support_radius > plateau_radius) ||
      !std::isfinite(support_radius)) {
    std::ostringstream msg;
    msg << "plateau function needs 0 < plateau_radius < support_radius, got (" << plateau_radius
        << ", " << support_radius << ")";
    throw ValidationError(msg.str());
  }
}

double PlateauFunction::operator()(double x) const {
  const double r = std::abs(x);
  if (r <= plateau_radius) return 1.0;
  if (r >= support_radius) return 0.0;
  return smooth_step((support_radius - r) / (support_radius - plateau_radius));
}

void TimeCutoff::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("time cutoff width c must be positive");
}

double TimeCutoff::operator()(double s) const { return as_plateau()(s); }

TabulatedTransform::TabulatedTransform(PlateauFunction source, double spacing,
                                       std::vector<double> samples, double tolerance,
                                       std::vector<Panel> panels)
    : source_(source),
      spacing_(spacing),
      samples_(std::move(samples)),
      tolerance_(tolerance),
      panels_(std::move(panels)) {
  if (samples_.size() <= static_cast<std::size_t>(kStencil)) {
    throw ValidationError("tabulated transform needs more samples than the stencil width");
  }
}

double TabulatedTransform::operator()(double s) const {
  s = std::abs(s);
  if (s > max_s()) {
    std::ostringstream msg;
    msg << "F^ requested at s=" << s << " beyond tabulated range " << max_s()
        << "; build the kernel with a smaller eps_min";
    throw ValidationError(msg.str());
  }
  const double t = s / spacing_;
  const auto base = static_cast<long>(std::floor(t)) - (kStencil / 2 - 1);
  double num = 0.0;
  double den = 0.0;
  for (int j = 0; j < kStencil; ++j) {
    const long idx = base + j;
    const double f = samples_[static_cast<std::size_t>(std::labs(idx))];
    const double d = t - static_cast<double>(idx);
    if (d == 0.0) return f;
    const double q = kBary[j] / d;
    num += q * f;
    den += q;
  }
  return num / den;
}

double TabulatedTransform::abs_moment(double from, int power) const {
  from = std::max(from, 0.0);
  const double end = max_s();
  if (from >= end) return 0.0;
  auto g = [&](double s, double f) { return std::pow(s, power) * std::abs(f); };
  const auto last = samples_.size() - kStencil;
  auto k = static_cast<std::size_t>(std::ceil(from / spacing_));
  double sum = 0.0;
  const double s_k = spacing_ * static_cast<double>(k);
  if (s_k > from) sum += 0.5 * (s_k - from) * (g(from, (*this)(from)) + g(s_k, samples_[k]));
  for (; k < last; ++k) {
    const double a = spacing_ * static_cast<double>(k);
    sum += 0.5 * spacing_ * (g(a, samples_[k]) + g(a + spacing_, samples_[k + 1]));
  }
  return sum;
}

double TabulatedTransform::fitted_decay_exponent(double from, double floor) const {
  const auto last = samples_.size() - kStencil;
  std::vector<double> envelope(last + 1);
  double running = 0.0;
  for (std::size_t k = last + 1; k-- > 0;) {
    running = std::max(running, std::abs(samples_[k]));
    envelope[k] = running;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t k = 0; k <= last; ++k) {
    const double s = spacing_ * static_cast<double>(k);
    if (s < from || envelope[k] < floor) continue;
    const double x = std::log1p(s);
    const double y = std::log(envelope[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 4) throw ValidationError("decay window holds fewer than 4 samples");
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return -slope;
}

void TabulatedTransform::write_csv(std::ostream& out) const {
  out << "s,Fhat\n";
  out.precision(17);
  for (std::size_t k = 0; k + kStencil < samples_.size(); ++k) {
    out << spacing_ * static_cast<double>(k) << ',' << samples_[k] << '\n';
  }
}

TabulatedTransform fourier_transform(const PlateauFunction& p, double tol, double max_s) {
  p.validate();
  if (!(tol > 0.0)) throw ValidationError("fourier_transform: tol must be positive");
  if (!(max_s > 0.0)) throw ValidationError("fourier_transform: max_s must be positive");

  const double a = p.plateau_radius;
  const double b = p.support_radius;
  const double spacing = kPi / (kOversample * b);
  const auto count = static_cast<std::size_t>(std::ceil(max_s / spacing)) +
                     TabulatedTransform::kStencil + 1;
  const double s_top = spacing * static_cast<double>(count);

  // F^(s) = 2 sin(a s)/s + 2 \int_a^b F(x) cos(s x) dx. The glue integral is
  // split so no panel carries more than 2 radians of phase at s_top.
  const int initial = static_cast<int>(std::ceil((b - a) * s_top / 2.0));
  const std::array<std::function<double(double)>, 2> probes = {
      [&](double x) { return p(x); },
      [&](double x) { return p(x) * std::cos(s_top * x); },
  };
  std::vector<Panel> panels = adaptive_panels(probes, a, b, initial, 0.25 * tol);
  const QuadratureRule rule = composite_gauss_legendre(panels);

  const std::size_t m = rule.size();
  std::vector<double> fw(m), c(m), sn(m), cr(m), sr(m);
  for (std::size_t j = 0; j < m; ++j) {
    fw[j] = 2.0 * rule.weights[j] * p(rule.nodes[j]);
    cr[j] = std::cos(spacing * rule.nodes[j]);
    sr[j] = std::sin(spacing * rule.nodes[j]);
  }

  std::vector<double> samples(count);
  constexpr std::size_t kResync = 256;
  for (std::size_t k = 0; k < count; ++k) {
    const double s = spacing * static_cast<double>(k);
    if (k % kResync == 0) {
      for (std::size_t j = 0; j < m; ++j) {
        c[j] = std::cos(s * rule.nodes[j]);
        sn[j] = std::sin(s * rule.nodes[j]);
      }
    }
    double glue = 0.0;
    for (std::size_t j = 0; j < m; ++j) glue += fw[j] * c[j];
    samples[k] = (k == 0 ? 2.0 * a : 2.0 * std::sin(a * s) / s) + glue;
    for (std::size_t j = 0; j < m; ++j) {
      const double cn = c[j] * cr[j] - sn[j] * sr[j];
      sn[j] = sn[j] * cr[j] + c[j] * sr[j];
      c[j] = cn;
    }
  }
  return TabulatedTransform(p, spacing, std::move(samples), tol, std::move(panels));
}

std::shared_ptr<const TabulatedTransform> shared_fourier_transform(const PlateauFunction& p,
                                                                   double tol, double max_s) {
  static std::mutex mutex;
  static std::map<std::tuple<double, double, double>,
                  std::shared_ptr<const TabulatedTransform>> memo;
  const auto key = std::make_tuple(p.plateau_radius, p.support_radius, tol);
  std::lock_guard lock(mutex);
  auto it = memo.find(key);
  if (it != memo.end() && it->second->max_s() >= max_s) return it->second;
  auto table = std::make_shared<const TabulatedTransform>(fourier_transform(p, tol, max_s));
  memo[key] = table;
  return table;
}

KernelPair::KernelPair(PlateauFunction plateau, TimeCutoff cutoff, double eps_min, double tol)
    : plateau_(plateau), cutoff_(cutoff), eps_min_(eps_min) {
  plateau_.validate();
  cutoff_.validate();
  if (!(eps_min > 0.0 && eps_min <= 1.0)) throw ValidationError("eps_min must lie in (0, 1]");
  const double margin = 64.0 * kPi / (kOversample * plateau_.support_radius);
  transform_ = shared_fourier_transform(plateau_, tol, 2.0 * cutoff_.c / eps_min + margin);
}

double KernelPair::scaled_transform(double s, double eps) const {
  return (*transform_)(s / eps) / eps;
}

double tail_bound(double eps, const KernelPair& k) {
  return k.transform().abs_moment(k.cutoff().c / eps, 0) / kPi;
}

double moment_tail_bound(int n, double eps, const KernelPair& k) {
  return std::pow(eps, n) * k.transform().abs_moment(k.cutoff().c / eps, n) / kPi;
}

SpectralMultiplier::SpectralMultiplier(const KernelPair& k, double eps, double freq_max,
                                       CutoffMode mode)
    : eps_(eps), freq_max_(freq_max) {
  if (!(eps > 0.0 && eps <= 1.0)) throw ValidationError("eps must lie in (0, 1]");
  if (!(freq_max >= 0.0) || !std::isfinite(freq_max)) {
    throw ValidationError("multiplier frequency bound must be finite and non-negative");
  }
  if (eps < k.eps_min() * (1.0 - 1e-12)) {
    throw ValidationError("eps below the kernel's eps_min");
  }
  tail_bound_ = wavemollify::tail_bound(eps, k);
  const TabulatedTransform& fhat = k.transform();
  const double c = k.cutoff().c;
  const double sigma_end =
      mode == CutoffMode::kTruncated ? std::min(2.0 * c / eps, fhat.max_s()) : fhat.max_s();
  double width = kPi / (4.0 * k.plateau().support_radius);
  if (freq_max > 0.0) width = std::min(width, kPi / (4.0 * eps * freq_max));
  const int panels = static_cast<int>(std::ceil(sigma_end / width));
  const QuadratureRule rule = composite_gauss_legendre(0.0, sigma_end, panels);
  nodes_.reserve(rule.size());
  weights_.reserve(rule.size());
  for (std::size_t j = 0; j < rule.size(); ++j) {
    const double sigma = rule.nodes[j];
    const double cut = mode == CutoffMode::kTruncated ? k.cutoff()(eps * sigma) : 1.0;
    if (cut == 0.0) continue;
    nodes_.push_back(eps * sigma);
    weights_.push_back(rule.weights[j] * cut * fhat(sigma) / kPi);
  }
}

double SpectralMultiplier::operator()(double freq) const {
  if (freq < 0.0 || freq > freq_max_ * (1.0 + 1e-12) + 1e-300) {
    std::ostringstream msg;
    msg << "multiplier frequency " << freq << " outside [0, " << freq_max_ << "]";
    throw ValidationError(msg.str());
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < nodes_.size(); ++j) sum += weights_[j] * std::cos(nodes_[j] * freq);
  return sum;
}

std::vector<double> SpectralMultiplier::evaluate(std::span<const double> freqs) const {
  std::vector<double> sorted(freqs.begin(), freqs.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<double> values(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) values[i] = (*this)(sorted[i]);
  std::vector<double> out(freqs.size());
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    const auto pos = std::lower_bound(sorted.begin(), sorted.end(), freqs[i]) - sorted.begin();
    out[i] = values[static_cast<std::size_t>(pos)];
  }
  return out;
}

MultiplierValue multiplier(double freq, double eps, const KernelPair& k, CutoffMode mode) {
  if (!(freq >= 0.0)) throw ValidationError("multiplier frequency must be non-negative");
  const SpectralMultiplier m(k, eps, freq, mode);
  return {m(freq), m.tail_bound()};
}

std::vector<double> euclidean_mollifier(double eps, const KernelPair& k, const LineGrid& grid) {
  if (!(eps > 0.0 && eps <= 1.0)) throw ValidationError("eps must lie in (0, 1]");
  if (grid.spacing > eps / 8.0) {
    std::ostringstream msg;
    msg << "grid spacing " << grid.spacing << " under-resolves the mollifier; need spacing <= "
        << eps / 8.0;
    throw ValidationError(msg.str());
  }
  if (eps < k.eps_min() * (1.0 - 1e-12)) throw ValidationError("eps below the kernel's eps_min");
  std::vector<double> mu(grid.count);
  for (std::size_t i = 0; i < grid.count; ++i) {
    const double x = grid.at(i);
    const double cut = k.cutoff()(x);
    mu[i] = cut == 0.0 ? 0.0 : cut * k.transform()(x / eps) / (2.0 * kPi * eps);
  }
  return mu;
}

}  // namespace wavemollify
