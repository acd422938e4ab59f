#pragma once

// Gradients of scalar losses with respect to every control point, and a
// central finite-difference checker for them.
//
// A loss function is any callable usable as both
//   double  fn(const VesselParams<double>&)
//   ad::Var fn(const VesselParams<ad::Var>&)
// (a generic lambda over the params type is the usual form).

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "vessel/ad.hpp"
#include "vessel/error.hpp"
#include "vessel/params.hpp"

namespace vessel {

struct ParamGradient {
  std::vector<Vec3d> d_centerline;
  std::vector<double> d_radius;
  std::vector<std::vector<double>> d_adjustments;

  std::vector<double> flat() const {
    std::vector<double> out;
    for (const auto& c : d_centerline) {
      out.push_back(c.x);
      out.push_back(c.y);
      out.push_back(c.z);
    }
    out.insert(out.end(), d_radius.begin(), d_radius.end());
    for (const auto& row : d_adjustments) out.insert(out.end(), row.begin(), row.end());
    return out;
  }
};

struct GradientResult {
  double loss = 0.0;
  ParamGradient grad;
};

template <class LossFn>
GradientResult gradient(const Params& params, LossFn&& loss_fn) {
  ad::Tape tape;
  const auto vp = map_params<ad::Var>(params, [&](double x) { return ad::Var::leaf(x, tape); });
  const ad::Var loss = loss_fn(vp);
  if (!std::isfinite(loss.value())) throw NumericError("loss", "forward value is not finite");

  GradientResult res;
  res.loss = loss.value();
  std::vector<double> adj;
  if (!loss.is_constant()) adj = tape.backward(loss.id());
  auto read = [&](const ad::Var& v) {
    const double g = adj.empty() ? 0.0 : adj[static_cast<std::size_t>(v.id())];
    if (!std::isfinite(g)) throw NumericError("backward", "non-finite gradient");
    return g;
  };
  for (const auto& c : vp.centerline_cp) res.grad.d_centerline.push_back({read(c.x), read(c.y), read(c.z)});
  for (const auto& r : vp.radius_cp) res.grad.d_radius.push_back(read(r));
  for (const auto& row : vp.adjustment_cp) {
    std::vector<double> g;
    for (const auto& a : row) g.push_back(read(a));
    res.grad.d_adjustments.push_back(std::move(g));
  }
  return res;
}

struct FdCoordinate {
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double numeric_refined = 0.0;  // at h/4, when re-checked
  bool flagged = false;          // nearest-element switch suspected
  bool passed = false;
};

struct FdReport {
  std::size_t n_coordinates = 0;
  std::size_t n_passed = 0;
  std::size_t n_flagged = 0;
  double max_rel_error = 0.0;
  std::vector<FdCoordinate> coordinates;

  double pass_fraction() const {
    return n_coordinates == 0 ? 1.0 : static_cast<double>(n_passed) / static_cast<double>(n_coordinates);
  }
  std::vector<FdCoordinate> failures() const {
    std::vector<FdCoordinate> out;
    for (const auto& c : coordinates)
      if (!c.passed) out.push_back(c);
    return out;
  }
};

inline double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

/// Central differences per coordinate. A coordinate failing at h is re-checked
/// at h/4; if the error shrinks with a consistent sign it is flagged as a
/// nearest-element switch and judged on the refined estimate. A refined error
/// already inside tolerance counts as consistent whatever its sign.
template <class LossFn>
FdReport finite_difference_check(const Params& params, LossFn&& loss_fn, double h, double rel_tol, double abs_tol) {
  if (!(h > 0.0)) throw ArgumentError("finite difference step must be positive");
  const auto analytic = gradient(params, loss_fn).grad.flat();
  const auto base = flatten(params);
  auto central = [&](std::size_t i, double step) {
    auto plus = base, minus = base;
    plus[i] += step;
    minus[i] -= step;
    const double fp = loss_fn(unflatten(plus, params));
    const double fm = loss_fn(unflatten(minus, params));
    return (fp - fm) / (2.0 * step);
  };
  auto ok = [&](double a, double n) { return std::abs(a - n) <= abs_tol || relative_error(a, n) <= rel_tol; };

  FdReport rep;
  rep.n_coordinates = base.size();
  for (std::size_t i = 0; i < base.size(); ++i) {
    FdCoordinate c;
    c.index = i;
    c.analytic = analytic[i];
    c.numeric = central(i, h);
    c.passed = ok(c.analytic, c.numeric);
    if (!c.passed) {
      c.numeric_refined = central(i, h / 4.0);
      const double e0 = c.numeric - c.analytic;
      const double e1 = c.numeric_refined - c.analytic;
      const bool consistent = ok(c.analytic, c.numeric_refined) || (e0 > 0.0) == (e1 > 0.0);
      c.flagged = std::abs(e1) < std::abs(e0) && consistent;
      if (c.flagged) {
        ++rep.n_flagged;
        c.passed = ok(c.analytic, c.numeric_refined);
      }
    }
    const double used = c.flagged ? c.numeric_refined : c.numeric;
    if (std::abs(c.analytic - used) > abs_tol) rep.max_rel_error = std::max(rep.max_rel_error, relative_error(c.analytic, used));
    rep.n_passed += c.passed ? 1 : 0;
    rep.coordinates.push_back(c);
  }
  return rep;
}

}  // namespace vessel
