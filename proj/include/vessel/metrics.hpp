#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "vessel/error.hpp"
#include "vessel/grid.hpp"
#include "vessel/mesh.hpp"
#include "vessel/vec.hpp"

namespace vessel {

/// 2|a & b| / (|a| + |b|), 1 when both are empty.
inline double dice_score(const BinaryGrid& a, const BinaryGrid& b) {
  if (!(a.shape() == b.shape())) throw ArgumentError("dice_score: grid shapes differ");
  std::size_t inter = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i] != 0, y = b[i] != 0;
    na += x;
    nb += y;
    inter += x && y;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

/// Distance from every point of `from` to its nearest point of `to`.
inline std::vector<double> nearest_distances(const std::vector<Vec3d>& from, const std::vector<Vec3d>& to) {
  std::vector<double> out;
  out.reserve(from.size());
  for (const auto& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to) best = std::min(best, squared_norm(p - q));
    out.push_back(std::sqrt(best));
  }
  return out;
}

/// Symmetric mean of the two mean nearest-neighbour distances.
inline double chamfer(const std::vector<Vec3d>& a, const std::vector<Vec3d>& b) {
  if (a.empty() || b.empty()) throw ArgumentError("chamfer: empty point list");
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  return 0.5 * (mean(nearest_distances(a, b)) + mean(nearest_distances(b, a)));
}

/// Percentile with linear interpolation between order statistics.
inline double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw ArgumentError("percentile of an empty list");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

/// 95th percentile of the pooled directed distances a->b and b->a.
inline double hd95(const std::vector<Vec3d>& a, const std::vector<Vec3d>& b) {
  if (a.empty() || b.empty()) throw ArgumentError("hd95: empty point list");
  auto pooled = nearest_distances(a, b);
  const auto back = nearest_distances(b, a);
  pooled.insert(pooled.end(), back.begin(), back.end());
  return percentile(std::move(pooled), 95.0);
}

inline double hausdorff(const std::vector<Vec3d>& a, const std::vector<Vec3d>& b) {
  const auto ab = nearest_distances(a, b);
  const auto ba = nearest_distances(b, a);
  return std::max(*std::max_element(ab.begin(), ab.end()), *std::max_element(ba.begin(), ba.end()));
}

struct EvalReport {
  double dice = 0.0;
  double hd95 = 0.0;
  double chamfer = 0.0;
  bool has_centerline = false;
  bool has_mesh = false;
  MeshQuality mesh_quality;
};

}  // namespace vessel
