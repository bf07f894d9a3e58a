#include "wavemollify/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "wavemollify/errors.hpp"

namespace wavemollify {
namespace {

using Gauss = boost::math::quadrature::gauss<double, kPanelOrder>;

}  // namespace

double QuadratureRule::integrate(const std::function<double(double)>& g) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) sum += weights[i] * g(nodes[i]);
  return sum;
}

void append_gauss_legendre(const Panel& panel, QuadratureRule& rule) {
  const double mid = 0.5 * (panel.lo + panel.hi);
  const double half = 0.5 * panel.width();
  const auto& abscissa = Gauss::abscissa();
  const auto& weight = Gauss::weights();
  // Boost stores the non-negative half of a symmetric rule; 16 is even so
  // there is no centre node.
  for (std::size_t i = 0; i < abscissa.size(); ++i) {
    rule.nodes.push_back(mid - half * abscissa[i]);
    rule.weights.push_back(half * weight[i]);
    rule.nodes.push_back(mid + half * abscissa[i]);
    rule.weights.push_back(half * weight[i]);
  }
}

QuadratureRule composite_gauss_legendre(double lo, double hi, int count) {
  QuadratureRule rule;
  count = std::max(count, 1);
  rule.nodes.reserve(static_cast<std::size_t>(count) * kPanelOrder);
  rule.weights.reserve(static_cast<std::size_t>(count) * kPanelOrder);
  const double width = (hi - lo) / count;
  for (int i = 0; i < count; ++i) {
    append_gauss_legendre({lo + i * width, i + 1 == count ? hi : lo + (i + 1) * width}, rule);
  }
  return rule;
}

QuadratureRule composite_gauss_legendre(std::span<const Panel> panels) {
  QuadratureRule rule;
  rule.nodes.reserve(panels.size() * kPanelOrder);
  rule.weights.reserve(panels.size() * kPanelOrder);
  for (const Panel& p : panels) append_gauss_legendre(p, rule);
  return rule;
}

double integrate_panel(const std::function<double(double)>& g, const Panel& panel) {
  const double mid = 0.5 * (panel.lo + panel.hi);
  const double half = 0.5 * panel.width();
  const auto& abscissa = Gauss::abscissa();
  const auto& weight = Gauss::weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < abscissa.size(); ++i) {
    sum += weight[i] * (g(mid - half * abscissa[i]) + g(mid + half * abscissa[i]));
  }
  return half * sum;
}

std::vector<Panel> adaptive_panels(
    std::span<const std::function<double(double)>> probes, double lo, double hi,
    int initial_count, double tol, int max_depth) {
  if (!(hi > lo)) throw ValidationError("adaptive_panels: empty interval");
  if (!(tol > 0.0)) throw ValidationError("adaptive_panels: tolerance must be positive");

  struct Pending {
    Panel panel;
    int depth;
  };
  const double total = hi - lo;
  std::deque<Pending> work;
  initial_count = std::max(initial_count, 1);
  const double width = total / initial_count;
  for (int i = 0; i < initial_count; ++i) {
    work.push_back({{lo + i * width, i + 1 == initial_count ? hi : lo + (i + 1) * width}, 0});
  }

  std::vector<Panel> accepted;
  while (!work.empty()) {
    Pending item = work.front();
    work.pop_front();
    const Panel& p = item.panel;
    const double mid = 0.5 * (p.lo + p.hi);
    const double allowed = tol * p.width() / total;
    double worst = 0.0;
    for (const auto& g : probes) {
      const double coarse = integrate_panel(g, p);
      const double fine = integrate_panel(g, {p.lo, mid}) + integrate_panel(g, {mid, p.hi});
      worst = std::max(worst, std::abs(coarse - fine));
    }
    if (worst <= allowed) {
      accepted.push_back(p);
      continue;
    }
    if (item.depth >= max_depth) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "adaptive quadrature did not converge on panel [" << p.lo << ", " << p.hi
          << "]: error estimate " << worst << " exceeds " << allowed;
      throw ConvergenceError(msg.str());
    }
    work.push_back({{p.lo, mid}, item.depth + 1});
    work.push_back({{mid, p.hi}, item.depth + 1});
  }
  std::sort(accepted.begin(), accepted.end(),
            [](const Panel& a, const Panel& b) { return a.lo < b.lo; });
  return accepted;
}

}  // namespace wavemollify
