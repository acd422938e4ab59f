#pragma once

// Clamped uniform cubic B-splines.
//
// The curve is evaluated with the uniform cubic segment matrix over the
// control polygon with its first and last points repeated three times, which
// makes the curve interpolate both end control points. A control polygon of M
// points therefore has M + 1 segments and t in [0,1] spreads over them
// linearly.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "vessel/error.hpp"
#include "vessel/vec.hpp"

namespace vessel {

namespace spline_detail {

// Linear combination helpers so one implementation serves scalars, 3D points
// and P-dimensional adjustment vectors.
template <class P>
struct PointOps {
  static P zero_like(const P&) { return P(0.0); }
  static void axpy(P& acc, double w, const P& p) { acc += p * w; }
};

template <class T>
struct PointOps<Vec3<T>> {
  static Vec3<T> zero_like(const Vec3<T>&) { return {T(0.0), T(0.0), T(0.0)}; }
  static void axpy(Vec3<T>& acc, double w, const Vec3<T>& p) {
    acc.x += p.x * w;
    acc.y += p.y * w;
    acc.z += p.z * w;
  }
};

template <class T>
struct PointOps<std::vector<T>> {
  static std::vector<T> zero_like(const std::vector<T>& p) { return std::vector<T>(p.size(), T(0.0)); }
  static void axpy(std::vector<T>& acc, double w, const std::vector<T>& p) {
    for (std::size_t i = 0; i < p.size(); ++i) acc[i] += p[i] * w;
  }
};

}  // namespace spline_detail

/// Cubic segment matrix rows applied to [u^3, u^2, u, 1].
inline std::array<double, 4> cubic_segment_weights(double u) {
  const double u2 = u * u;
  const double u3 = u2 * u;
  return {(-u3 + 3.0 * u2 - 3.0 * u + 1.0) / 6.0, (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0,
          (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0, u3 / 6.0};
}

/// Basis weights of one parameter value, merged onto original control points.
struct BasisRow {
  std::array<std::size_t, 4> index{};
  std::array<double, 4> weight{};
  std::size_t count = 0;
};

inline BasisRow basis_row(std::size_t n_control, double t) {
  if (n_control < 4) throw ArgumentError("cubic B-spline needs at least 4 control points");
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("spline parameter " + std::to_string(t) + " outside [0,1]");
  BasisRow row;
  if (t == 0.0 || t == 1.0) {
    row.index[0] = t == 0.0 ? 0 : n_control - 1;
    row.weight[0] = 1.0;
    row.count = 1;
    return row;
  }
  const std::size_t segments = n_control + 1;
  const double x = t * static_cast<double>(segments);
  const std::size_t seg = std::min(static_cast<std::size_t>(x), segments - 1);
  const auto w = cubic_segment_weights(x - static_cast<double>(seg));
  for (std::size_t j = 0; j < 4; ++j) {
    // Extended polygon entry seg+j maps to original index seg+j-2, clamped.
    const long e = static_cast<long>(seg + j) - 2;
    const std::size_t idx = static_cast<std::size_t>(std::clamp<long>(e, 0, static_cast<long>(n_control) - 1));
    std::size_t slot = 0;
    while (slot < row.count && row.index[slot] != idx) ++slot;
    if (slot == row.count) {
      row.index[slot] = idx;
      row.weight[slot] = 0.0;
      ++row.count;
    }
    row.weight[slot] += w[j];
  }
  return row;
}

template <class Point>
class SplineCurve {
 public:
  SplineCurve() = default;
  explicit SplineCurve(std::vector<Point> control_points) : cp_(std::move(control_points)) {
    if (cp_.size() < 4) {
      throw ArgumentError("cubic B-spline needs at least 4 control points, got " + std::to_string(cp_.size()));
    }
  }

  const std::vector<Point>& control_points() const { return cp_; }
  std::size_t size() const { return cp_.size(); }

 private:
  std::vector<Point> cp_;
};

template <class Point>
Point apply_row(const BasisRow& row, const std::vector<Point>& cp) {
  using Ops = spline_detail::PointOps<Point>;
  if (row.count == 1 && row.weight[0] == 1.0) return cp[row.index[0]];
  Point acc = Ops::zero_like(cp[0]);
  for (std::size_t i = 0; i < row.count; ++i) Ops::axpy(acc, row.weight[i], cp[row.index[i]]);
  return acc;
}

/// Matrix-form evaluation at t in [0,1].
template <class Point>
Point eval(const SplineCurve<Point>& curve, double t) {
  return apply_row(basis_row(curve.size(), t), curve.control_points());
}

/// Independent evaluation by de Boor's recursion on the uniform knot vector
/// of the end-tripled control polygon. Used as an oracle for eval().
template <class Point>
Point eval_de_boor(const SplineCurve<Point>& curve, double t) {
  using Ops = spline_detail::PointOps<Point>;
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("spline parameter outside [0,1]");
  const auto& cp = curve.control_points();
  std::vector<Point> ext;
  ext.reserve(cp.size() + 4);
  ext.push_back(cp.front());
  ext.push_back(cp.front());
  ext.insert(ext.end(), cp.begin(), cp.end());
  ext.push_back(cp.back());
  ext.push_back(cp.back());

  constexpr int p = 3;
  const int n = static_cast<int>(ext.size());  // knots u_i = i, i = 0..n+p
  const double x = p + t * (n - p);
  int k = std::min(static_cast<int>(std::floor(x)), n - 1);

  std::vector<Point> d(ext.begin() + (k - p), ext.begin() + k + 1);
  for (int r = 1; r <= p; ++r) {
    for (int j = p; j >= r; --j) {
      const double left = static_cast<double>(j + k - p);
      const double right = static_cast<double>(j + 1 + k - r);
      const double alpha = (x - left) / (right - left);
      Point blended = Ops::zero_like(d[0]);
      Ops::axpy(blended, 1.0 - alpha, d[static_cast<std::size_t>(j - 1)]);
      Ops::axpy(blended, alpha, d[static_cast<std::size_t>(j)]);
      d[static_cast<std::size_t>(j)] = blended;
    }
  }
  return d[p];
}

template <class Point>
struct SampledCurve {
  std::vector<Point> samples;
  std::vector<double> params;
};

/// Precomputed basis rows for S equidistant parameters.
class SamplingMatrix {
 public:
  SamplingMatrix(std::size_t n_control, std::size_t n_samples) : n_control_(n_control) {
    if (n_samples < 2) throw ArgumentError("need at least 2 samples");
    rows_.reserve(n_samples);
    params_.reserve(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
      const double t = i + 1 == n_samples ? 1.0 : static_cast<double>(i) / static_cast<double>(n_samples - 1);
      params_.push_back(t);
      rows_.push_back(basis_row(n_control, t));
    }
  }

  std::size_t n_control() const { return n_control_; }
  std::size_t n_samples() const { return rows_.size(); }
  const std::vector<BasisRow>& rows() const { return rows_; }
  const std::vector<double>& params() const { return params_; }

  template <class Point>
  std::vector<Point> apply(const std::vector<Point>& cp) const {
    if (cp.size() != n_control_) throw ArgumentError("control point count does not match sampling matrix");
    std::vector<Point> out;
    out.reserve(rows_.size());
    for (const auto& r : rows_) out.push_back(apply_row(r, cp));
    return out;
  }

  /// Sum of each control point's weights over all samples.
  std::vector<double> column_sums() const {
    std::vector<double> s(n_control_, 0.0);
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.count; ++i) s[r.index[i]] += r.weight[i];
    }
    return s;
  }

 private:
  std::size_t n_control_;
  std::vector<BasisRow> rows_;
  std::vector<double> params_;
};

/// Samples at t_i = i / (S - 1).
template <class Point>
SampledCurve<Point> sample_uniform(const SplineCurve<Point>& curve, std::size_t n_samples) {
  if (n_samples < 2) throw ArgumentError("sample_uniform needs S >= 2");
  SamplingMatrix m(curve.size(), n_samples);
  return {m.apply(curve.control_points()), m.params()};
}

/// c[i-1] - 2 c[i] + c[i+1] for i = 1..S-2.
template <class Point>
std::vector<Point> second_differences(const std::vector<Point>& samples) {
  using Ops = spline_detail::PointOps<Point>;
  if (samples.size() < 3) throw ArgumentError("second differences need at least 3 samples");
  std::vector<Point> out;
  out.reserve(samples.size() - 2);
  for (std::size_t i = 1; i + 1 < samples.size(); ++i) {
    Point d = Ops::zero_like(samples[i]);
    Ops::axpy(d, 1.0, samples[i - 1]);
    Ops::axpy(d, -2.0, samples[i]);
    Ops::axpy(d, 1.0, samples[i + 1]);
    out.push_back(d);
  }
  return out;
}

}  // namespace vessel
