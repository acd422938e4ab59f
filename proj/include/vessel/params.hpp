#pragma once

// Vessel parameters (B-spline control points) and the params -> cross-sections
// -> mesh chain, generic over the scalar type so it runs on doubles and on
// ad::Var alike.

#include <string>
#include <vector>

#include "vessel/bspline.hpp"
#include "vessel/error.hpp"
#include "vessel/frames.hpp"
#include "vessel/mesh.hpp"
#include "vessel/vec.hpp"

namespace vessel {

template <class T>
struct VesselParams {
  std::vector<Vec3<T>> centerline_cp;
  std::vector<T> radius_cp;
  std::vector<std::vector<T>> adjustment_cp;  // N_a rows of P values
  int P = 10;

  std::size_t n_coordinates() const {
    return 3 * centerline_cp.size() + radius_cp.size() + adjustment_cp.size() * static_cast<std::size_t>(P);
  }

  void validate() const {
    if (centerline_cp.size() < 4) throw ArgumentError("need at least 4 centerline control points");
    if (radius_cp.size() < 4) throw ArgumentError("need at least 4 radius control points");
    if (adjustment_cp.size() < 4) throw ArgumentError("need at least 4 adjustment control points");
    if (P < 3) throw ArgumentError("need at least 3 radial directions");
    for (const auto& row : adjustment_cp) {
      if (row.size() != static_cast<std::size_t>(P)) throw ArgumentError("adjustment control point without P entries");
    }
  }

  friend bool operator==(const VesselParams&, const VesselParams&) = default;
};

using Params = VesselParams<double>;

/// Flat coordinate order: centerline (x,y,z per point), radius, adjustments
/// row by row.
inline std::vector<double> flatten(const Params& p) {
  std::vector<double> out;
  out.reserve(p.n_coordinates());
  for (const auto& c : p.centerline_cp) {
    out.push_back(c.x);
    out.push_back(c.y);
    out.push_back(c.z);
  }
  for (double r : p.radius_cp) out.push_back(r);
  for (const auto& row : p.adjustment_cp) out.insert(out.end(), row.begin(), row.end());
  return out;
}

template <class T, class U>
VesselParams<T> map_params(const VesselParams<U>& p, auto&& fn) {
  VesselParams<T> out;
  out.P = p.P;
  for (const auto& c : p.centerline_cp) out.centerline_cp.push_back({fn(c.x), fn(c.y), fn(c.z)});
  for (const auto& r : p.radius_cp) out.radius_cp.push_back(fn(r));
  for (const auto& row : p.adjustment_cp) {
    std::vector<T> r;
    for (const auto& a : row) r.push_back(fn(a));
    out.adjustment_cp.push_back(std::move(r));
  }
  return out;
}

inline Params unflatten(const std::vector<double>& flat, const Params& like) {
  if (flat.size() != like.n_coordinates()) throw ArgumentError("flat coordinate count mismatch");
  std::size_t i = 0;
  return map_params<double>(like, [&](double) { return flat[i++]; });
}

/// Samples every spline at S equidistant parameters and builds frames.
template <class T>
CrossSectionSet<T> cross_sections(const VesselParams<T>& p, std::size_t S) {
  CrossSectionSet<T> cs;
  cs.centers = SamplingMatrix(p.centerline_cp.size(), S).apply(p.centerline_cp);
  cs.radii = SamplingMatrix(p.radius_cp.size(), S).apply(p.radius_cp);
  cs.adjustments = SamplingMatrix(p.adjustment_cp.size(), S).apply(p.adjustment_cp);
  cs.tangents = tangents(cs.centers);
  auto [vi, vj] = propagate_frames(cs.tangents);
  cs.v_i = std::move(vi);
  cs.v_j = std::move(vj);
  return cs;
}

template <class T>
TriangleMesh<T> vessel_mesh(const VesselParams<T>& p, std::size_t S) {
  const auto cs = cross_sections(p, S);
  const auto ring = cross_section_points(cs, p.P);
  return build_vessel_mesh(ring, static_cast<int>(S), p.P, cs.centers.front(), cs.centers.back());
}

template <class T>
std::vector<Vec3<T>> sample_centerline(const VesselParams<T>& p, std::size_t S) {
  return SamplingMatrix(p.centerline_cp.size(), S).apply(p.centerline_cp);
}

}  // namespace vessel
