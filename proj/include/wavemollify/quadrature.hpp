#pragma once

#include <functional>
#include <span>
#include <vector>

namespace wavemollify {

// A closed interval [lo, hi] used as one quadrature panel.
struct Panel {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
};

// Flattened nodes and weights of a composite rule.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
  double integrate(const std::function<double(double)>& g) const;
};

// Number of Gauss-Legendre points used per panel throughout the library.
inline constexpr int kPanelOrder = 16;

// Appends the 16-point Gauss-Legendre rule mapped to `panel`.
void append_gauss_legendre(const Panel& panel, QuadratureRule& rule);

// Composite rule over `count` equal panels covering [lo, hi].
QuadratureRule composite_gauss_legendre(double lo, double hi, int count);

// Composite rule over an explicit panel list.
QuadratureRule composite_gauss_legendre(std::span<const Panel> panels);

// 16-point Gauss-Legendre estimate of the integral of g over one panel.
double integrate_panel(const std::function<double(double)>& g, const Panel& panel);

// Refines an initial uniform partition of [lo, hi] by bisection until every
// panel passes the two-level test |G(P) - G(P_left) - G(P_right)| <= share of
// `tol` for each probe integrand. Throws ConvergenceError naming the worst
// panel when `max_depth` bisections are not enough.
std::vector<Panel> adaptive_panels(
    std::span<const std::function<double(double)>> probes, double lo, double hi,
    int initial_count, double tol, int max_depth = 40);

}  // namespace wavemollify
