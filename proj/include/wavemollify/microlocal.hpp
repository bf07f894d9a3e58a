#pragma once

#include <array>
#include <string>
#include <vector>

#include "wavemollify/funcalc.hpp"
#include "wavemollify/nets.hpp"

namespace wavemollify {

struct ConeProbe {
  std::array<double, 2> base{3.14159265358979323846, 3.14159265358979323846};
  std::array<double, 2> direction{1.0, 0.0};
  double half_angle = 0.39269908169872414;  // pi / 8
  // Plateau window {radius/2, radius} about the base point.
  double window_radius = 2.5;
  std::vector<int> l_grid{0, 1, 2, 3, 4, 5, 6};
  // Orders decrease at least this fast per unit l for a singular direction.
  int gap_l_max = 4;
  double guard = 0.2;
  std::vector<double> eps = EpsilonNet::dyadic(2, 5);

  void validate() const;
};

struct ConeDecay {
  std::vector<EpsilonNet> nets;   // one per l
  std::vector<OrderVerdict> fits;
  std::vector<double> orders;     // fitted slope per l
  int uniform_n = 0;              // moderateness order at l = 0
  bool regular = false;           // every order >= -uniform_n - guard
  double order_gap = 0.0;         // -d(order)/dl over l <= gap_l_max
};

// Window phi on the torus grid; throws if its support crosses the periodic seam.
Vector cone_window(const Geometry& torus, const ConeProbe& probe);

// For each l: eps -> sup over xi in the cone, 0 < |xi| <= Nyquist/2, of
// (1 + |xi|)^l |(phi u_eps)^(xi)|, with the transform taken as the grid
// Riemann sum of the continuous one.
ConeDecay cone_decay(const LaplaceBeltrami& torus, const FieldNet& u_net, const ConeProbe& probe);

// delta_{x0} and the line {x_0 = a} on a torus, as grid functions.
Vector point_delta(const LaplaceBeltrami& torus, std::array<double, 2> x0);
Vector line_delta(const LaplaceBeltrami& torus, double a);

struct PanelEntry {
  std::string input;
  std::string direction;
  bool classical_regular = false;
  ConeDecay decay;
};

// Smooth bump, point delta and delta line {x_0 = base_0}, each probed at the
// base point in the conormal (1,0) and tangential (0,1) directions.
std::vector<PanelEntry> wavefront_panel(const Regularizer& reg, const ConeProbe& probe);

}  // namespace wavemollify
