#include "wavemollify/nets.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "wavemollify/errors.hpp"

namespace wavemollify {

std::vector<double> EpsilonNet::dyadic(int from, int to) {
  if (from < 0 || to < from) throw ValidationError("dyadic eps range needs 0 <= from <= to");
  std::vector<double> out;
  for (int j = from; j <= to; ++j) out.push_back(std::ldexp(1.0, -j));
  return out;
}

void EpsilonNet::validate() const {
  if (eps.size() != values.size()) throw ValidationError("net '" + label + "': eps/value size mismatch");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0 && eps[i] <= 1.0)) throw ValidationError("net '" + label + "': eps outside (0, 1]");
    if (i > 0 && !(eps[i] < eps[i - 1])) throw ValidationError("net '" + label + "': eps must decrease");
    if (!(values[i] >= 0.0) || !std::isfinite(values[i])) {
      throw ValidationError("net '" + label + "': measurements must be finite and non-negative");
    }
  }
}

void EpsilonNet::write_csv(std::ostream& out) const {
  out << "eps,value\n";
  out.precision(17);
  for (std::size_t i = 0; i < eps.size(); ++i) out << eps[i] << ',' << values[i] << '\n';
}

const char* class_name(NetClass c) {
  switch (c) {
    case NetClass::kModerate: return "moderate";
    case NetClass::kNegligible: return "negligible";
    case NetClass::kOrder: return "order";
  }
  return "unknown";
}

std::string OrderVerdict::describe() const {
  std::ostringstream out;
  out.precision(4);
  switch (cls) {
    case NetClass::kModerate: out << "Moderate(" << moderate_n << ")"; break;
    case NetClass::kNegligible:
      out << "NegligibleUpTo(";
      if (negligible_m == kUnbounded) out << "inf";
      else out << negligible_m;
      out << ")";
      break;
    case NetClass::kOrder: out << "Order(" << slope << ")"; break;
  }
  out << " slope=" << slope << " R2=" << r_squared << " n=" << samples;
  return out.str();
}

OrderVerdict estimate_order(const EpsilonNet& net, const OrderOptions& opt) {
  net.validate();
  OrderVerdict v;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < net.size(); ++i) {
    if (net.eps[i] < opt.eps_lo || net.eps[i] > opt.eps_hi) continue;
    if (net.values[i] <= opt.noise_floor) {
      v.floor_hit = true;
      continue;
    }
    xs.push_back(std::log2(net.eps[i]));
    ys.push_back(std::log2(net.values[i]));
  }
  v.samples = xs.size();
  if (!xs.empty()) {
    v.eps_hi = std::exp2(xs.front());
    v.eps_lo = std::exp2(xs.back());
  }
  if (xs.size() < 4) {
    if (v.floor_hit) {
      v.cls = NetClass::kNegligible;
      v.negligible_m = kUnbounded;
      v.slope = std::numeric_limits<double>::infinity();
      v.tail_slope = v.slope;
      return v;
    }
    throw ValidationError("order estimate for '" + net.label + "' needs at least 4 usable samples");
  }
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    syy += ys[i] * ys[i];
  }
  const double vxx = n * sxx - sx * sx;
  const double vxy = n * sxy - sx * sy;
  const double vyy = n * syy - sy * sy;
  v.slope = vxy / vxx;
  v.intercept = (sy - v.slope * sx) / n;
  v.r_squared = vyy > 0.0 ? vxy * vxy / (vxx * vyy) : 1.0;

  // Consecutive-sample slopes, ordered from large to small eps.
  std::vector<double> local;
  for (std::size_t i = 1; i < xs.size(); ++i) local.push_back((ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]));
  bool convex = true;
  for (std::size_t i = 1; i < local.size(); ++i) convex = convex && local[i] >= local[i - 1] - opt.guard;
  v.tail_slope = std::numeric_limits<double>::infinity();
  for (std::size_t i = local.size() / 2; i < local.size(); ++i) v.tail_slope = std::min(v.tail_slope, local[i]);

  v.moderate_n = v.slope >= -opt.guard ? 0 : static_cast<int>(std::ceil(-v.slope - opt.guard));
  double effective = -1.0;
  if (v.r_squared >= opt.negligible_r2) {
    effective = v.slope;
  } else if (convex) {
    // Curved upward in log-log: the net decays faster and faster.
    v.tail_rule = true;
    effective = v.tail_slope;
  }
  if (effective >= 1.0 - opt.guard) {
    v.negligible_m = static_cast<int>(std::floor(effective + opt.guard));
  }
  if (v.slope < -opt.guard) v.cls = NetClass::kModerate;
  else if (v.negligible_m >= 1) v.cls = NetClass::kNegligible;
  else v.cls = NetClass::kOrder;
  return v;
}

AssociationVerdict association_check(const FieldNet& a, const FieldNet& b,
                                     const std::vector<Vector>& tests, const Vector& weights,
                                     const OrderOptions& opt, double min_slope) {
  if (a.eps != b.eps || a.fields.size() != b.fields.size() || a.fields.size() != a.eps.size()) {
    throw ValidationError("association check: nets sampled on different eps grids");
  }
  for (std::size_t i = 0; i < a.fields.size(); ++i) {
    if (a.fields[i].size() != weights.size() || b.fields[i].size() != weights.size()) {
      throw ValidationError("association check: grid mismatch");
    }
  }
  AssociationVerdict out;
  out.associated = true;
  out.worst_slope = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < tests.size(); ++t) {
    if (tests[t].size() != weights.size()) throw ValidationError("association check: test function grid mismatch");
    EpsilonNet net;
    net.label = "pairing " + std::to_string(t);
    net.eps = a.eps;
    for (std::size_t i = 0; i < a.fields.size(); ++i) {
      net.values.push_back(std::abs(weighted_inner(a.fields[i] - b.fields[i], tests[t], weights)));
    }
    OrderVerdict v = estimate_order(net, opt);
    const bool all_zero = std::all_of(net.values.begin(), net.values.end(),
                                      [&](double x) { return x <= opt.noise_floor; });
    bool ok = all_zero;
    if (!ok && v.samples >= 4) {
      ok = v.slope >= min_slope && net.values.back() < net.values.front();
    } else if (!ok) {
      ok = v.negligible_m == kUnbounded;
    }
    if (all_zero) v.slope = std::numeric_limits<double>::infinity();
    out.worst_slope = std::min(out.worst_slope, v.slope);
    out.associated = out.associated && ok;
    out.per_test.push_back(v);
    out.pairings.push_back(std::move(net));
  }
  return out;
}

SobolevDetection sobolev_detect(const EpsilonNet& squared_norms, int dim, const OrderOptions& opt) {
  SobolevDetection d;
  d.fit = estimate_order(squared_norms, opt);
  d.dim = dim;
  d.implied_floor = d.fit.slope - 0.5 * dim;
  return d;
}

}  // namespace wavemollify
