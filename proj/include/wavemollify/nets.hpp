#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "wavemollify/geometry.hpp"

namespace wavemollify {

// Scalar measurements on a strictly decreasing eps grid.
struct EpsilonNet {
  std::string label;
  std::vector<double> eps;
  std::vector<double> values;

  // 2^-from, ..., 2^-to.
  static std::vector<double> dyadic(int from, int to);

  void validate() const;
  void write_csv(std::ostream& out) const;
  std::size_t size() const { return eps.size(); }
};

enum class NetClass { kModerate, kNegligible, kOrder };

const char* class_name(NetClass c);

inline constexpr int kUnbounded = std::numeric_limits<int>::max();

struct OrderOptions {
  // Use samples with eps in [eps_lo, eps_hi].
  double eps_lo = 0.0;
  double eps_hi = 1.0;
  // Values at or below the floor count as zero (engine tolerance).
  double noise_floor = 0.0;
  double guard = 0.25;
  double negligible_r2 = 0.98;
};

struct OrderVerdict {
  double slope = 0.0;        // ||x_eps|| ~ eps^slope
  double intercept = 0.0;    // log2 of the prefactor
  double r_squared = 1.0;
  double eps_lo = 0.0;
  double eps_hi = 0.0;
  std::size_t samples = 0;
  bool floor_hit = false;
  // Minimum of the consecutive-sample slopes over the small-eps half; used
  // for super-polynomial nets whose log-log graph is curved.
  double tail_slope = 0.0;
  NetClass cls = NetClass::kOrder;
  int moderate_n = 0;        // smallest N >= 0 with slope >= -N - guard
  int negligible_m = -1;     // largest m with O(eps^m), kUnbounded for all m
  bool tail_rule = false;    // negligible_m came from tail_slope

  std::string describe() const;
};

// Least-squares slope of log2(value) against log2(eps) with the classification:
// Moderate(N) when the slope is below -guard; NegligibleUpTo(m) when m >= 1 and
// either R^2 >= negligible_r2 (m from the slope) or the local slopes increase
// toward small eps (m from tail_slope); Order(r) otherwise. Nets that fall under the noise floor
// with fewer than 4 usable samples are NegligibleUpTo(infinity).
OrderVerdict estimate_order(const EpsilonNet& net, const OrderOptions& opt = {});

// Net of grid functions sampled on the same eps grid as a scalar net.
struct FieldNet {
  std::vector<double> eps;
  std::vector<Vector> fields;
};

struct AssociationVerdict {
  std::vector<OrderVerdict> per_test;
  std::vector<EpsilonNet> pairings;
  double worst_slope = 0.0;
  bool associated = false;
};

// For each test function chi, the net |<A_eps - B_eps, chi>_W| must tend to 0.
// A pairing net passes when it is identically below the floor, or when its
// slope is at least `min_slope` and its last value is below its first.
AssociationVerdict association_check(const FieldNet& a, const FieldNet& b,
                                     const std::vector<Vector>& tests, const Vector& weights,
                                     const OrderOptions& opt = {}, double min_slope = 0.25);

struct SobolevDetection {
  OrderVerdict fit;
  int dim = 1;
  // Contrapositive bound: ||T_eps u||^2 = O(eps^r) allows u in H^k only for
  // some k > r - dim/2; this is the certified lower constraint on regularity.
  double implied_floor = 0.0;
};

SobolevDetection sobolev_detect(const EpsilonNet& squared_norms, int dim, const OrderOptions& opt = {});

}  // namespace wavemollify
