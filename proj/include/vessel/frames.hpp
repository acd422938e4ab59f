#pragma once

// Centerline tangents, propagated cross-section frames and cross-section
// surface points.

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "vessel/error.hpp"
#include "vessel/vec.hpp"

namespace vessel {

/// Lower bound applied to r + a_k when generating surface points.
inline constexpr double kMinRadius = 1e-3;

template <class T>
struct CrossSectionSet {
  std::vector<Vec3<T>> centers;
  std::vector<Vec3<T>> tangents;
  std::vector<Vec3<T>> v_i;
  std::vector<Vec3<T>> v_j;
  std::vector<T> radii;
  std::vector<std::vector<T>> adjustments;  // S x P

  std::size_t size() const { return centers.size(); }
};

/// Forward differences, normalized; the last tangent repeats the previous one.
template <class T>
std::vector<Vec3<T>> tangents(const std::vector<Vec3<T>>& centers) {
  if (centers.size() < 2) throw ArgumentError("tangents need at least 2 centerline points");
  std::vector<Vec3<T>> out;
  out.reserve(centers.size());
  for (std::size_t n = 0; n + 1 < centers.size(); ++n) {
    const Vec3<T> d = centers[n + 1] - centers[n];
    const double len = norm(values(d));
    if (!(len > 1e-9)) {
      throw DegenerateError("degenerate centerline: points " + std::to_string(n) + " and " + std::to_string(n + 1) +
                            " coincide");
    }
    out.push_back(normalized(d));
  }
  out.push_back(out.back());
  return out;
}

/// Generating vectors for every tangent.
///
/// The first v_i is (0,0,1) x t_0, or (0,1,0) x t_0 when t_0 is parallel to
/// the z axis. Each later v_i is the previous one crossed with the new tangent
/// and crossed back, t_n x (v_i x t_n), i.e. the previous vector projected onto
/// the new cross-section plane. v_j = t_n x v_i. Everything is normalized.
template <class T>
std::pair<std::vector<Vec3<T>>, std::vector<Vec3<T>>> propagate_frames(const std::vector<Vec3<T>>& tangents) {
  if (tangents.empty()) throw ArgumentError("propagate_frames needs at least one tangent");
  std::vector<Vec3<T>> vi, vj;
  vi.reserve(tangents.size());
  vj.reserve(tangents.size());

  Vec3<T> seed{T(0.0), T(0.0), T(1.0)};
  Vec3<T> first = cross(seed, tangents[0]);
  if (norm(values(first)) < 1e-6) {
    seed = Vec3<T>{T(0.0), T(1.0), T(0.0)};
    first = cross(seed, tangents[0]);
  }
  vi.push_back(normalized(first));
  vj.push_back(normalized(cross(tangents[0], vi[0])));

  for (std::size_t n = 1; n < tangents.size(); ++n) {
    const Vec3<T> c = cross(vi[n - 1], tangents[n]);
    if (norm(values(c)) < 1e-9) {
      throw DegenerateError("frame degeneracy at cross-section " + std::to_string(n) +
                            ": tangent parallel to generating vector");
    }
    vi.push_back(normalized(cross(tangents[n], c)));
    vj.push_back(normalized(cross(tangents[n], vi[n])));
  }
  return {std::move(vi), std::move(vj)};
}

/// Clamped radial extent max(r + a, kMinRadius); the clamp has zero gradient.
template <class T>
T clamped_extent(const T& r, const T& a) {
  T rho = r + a;
  if (value(rho) < kMinRadius) return T(kMinRadius);
  return rho;
}

/// S*P surface points, row n*P + k:
/// c^n + rho cos(2 pi k / P) v_i^n + rho sin(2 pi k / P) v_j^n.
template <class T>
std::vector<Vec3<T>> cross_section_points(const CrossSectionSet<T>& cs, int P) {
  if (P < 3) throw ArgumentError("need at least 3 radial directions, got " + std::to_string(P));
  const std::size_t S = cs.size();
  if (cs.v_i.size() != S || cs.v_j.size() != S || cs.radii.size() != S || cs.adjustments.size() != S) {
    throw ArgumentError("cross-section set fields have inconsistent lengths");
  }
  std::vector<double> cs_cos(static_cast<std::size_t>(P)), cs_sin(static_cast<std::size_t>(P));
  for (int k = 0; k < P; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / P;
    cs_cos[static_cast<std::size_t>(k)] = std::cos(angle);
    cs_sin[static_cast<std::size_t>(k)] = std::sin(angle);
  }
  std::vector<Vec3<T>> pts;
  pts.reserve(S * static_cast<std::size_t>(P));
  for (std::size_t n = 0; n < S; ++n) {
    if (cs.adjustments[n].size() != static_cast<std::size_t>(P)) {
      throw ArgumentError("adjustment row " + std::to_string(n) + " does not have P entries");
    }
    for (int k = 0; k < P; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      const T rho = clamped_extent(cs.radii[n], cs.adjustments[n][kk]);
      const T a = rho * cs_cos[kk];
      const T b = rho * cs_sin[kk];
      pts.push_back(cs.centers[n] + cs.v_i[n] * a + cs.v_j[n] * b);
    }
  }
  return pts;
}

}  // namespace vessel
