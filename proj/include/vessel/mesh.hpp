#pragma once

// Vessel triangle mesh construction, watertightness validation, and quality
// measures.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "vessel/error.hpp"
#include "vessel/vec.hpp"

namespace vessel {

using Face = std::array<int, 3>;

template <class T>
struct TriangleMesh {
  std::vector<Vec3<T>> vertices;
  std::vector<Face> faces;
};

using Mesh = TriangleMesh<double>;

template <class T>
Mesh mesh_values(const TriangleMesh<T>& m) {
  Mesh out;
  out.faces = m.faces;
  out.vertices.reserve(m.vertices.size());
  for (const auto& v : m.vertices) out.vertices.push_back(values(v));
  return out;
}

/// Ring vertex (n, k) is n*P + k; the start cap center is P*S and the end cap
/// center P*S + 1. Faces are wound counter-clockwise seen from outside when
/// the rings turn counter-clockwise about the centerline direction.
inline std::vector<Face> vessel_mesh_faces(int S, int P) {
  if (S < 2) throw ArgumentError("vessel mesh needs at least 2 cross-sections");
  if (P < 3) throw ArgumentError("vessel mesh needs at least 3 radial directions");
  std::vector<Face> faces;
  faces.reserve(static_cast<std::size_t>(2 * P * S));
  auto id = [P](int n, int k) { return n * P + (k % P); };
  for (int n = 0; n + 1 < S; ++n) {
    for (int k = 0; k < P; ++k) {
      // Quad (k,n) (k,n+1) (k+1,n+1) (k+1,n), split along (k,n)-(k+1,n+1).
      faces.push_back({id(n, k), id(n + 1, k + 1), id(n + 1, k)});
      faces.push_back({id(n, k), id(n, k + 1), id(n + 1, k + 1)});
    }
  }
  const int start = P * S;
  const int end = P * S + 1;
  for (int k = 0; k < P; ++k) {
    faces.push_back({start, id(0, k + 1), id(0, k)});
    faces.push_back({end, id(S - 1, k), id(S - 1, k + 1)});
  }
  return faces;
}

/// Builds the closed vessel surface from S*P ring points (row n*P + k) and the
/// first and last centerline points.
template <class T>
TriangleMesh<T> build_vessel_mesh(const std::vector<Vec3<T>>& ring_points, int S, int P, const Vec3<T>& first_center,
                                  const Vec3<T>& last_center) {
  if (S < 2 || P < 3) throw ArgumentError("vessel mesh needs S >= 2 and P >= 3");
  if (ring_points.size() != static_cast<std::size_t>(S) * static_cast<std::size_t>(P)) {
    throw ArgumentError("ring point count does not equal S*P");
  }
  TriangleMesh<T> mesh;
  mesh.vertices = ring_points;
  mesh.vertices.push_back(first_center);
  mesh.vertices.push_back(last_center);
  mesh.faces = vessel_mesh_faces(S, P);
  return mesh;
}

struct EdgeDiagnostic {
  int a = 0, b = 0;        // undirected, a < b
  int face_count = 0;      // incident faces
  bool same_direction = false;
};

struct WatertightReport {
  bool ok = true;
  std::vector<EdgeDiagnostic> problems;
};

/// True iff every undirected edge has exactly two incident faces that use it
/// in opposite directions.
inline WatertightReport validate_watertight(const std::vector<Face>& faces) {
  struct Use {
    int count = 0;
    int forward = 0;  // uses as a -> b with a < b
  };
  std::map<std::pair<int, int>, Use> edges;
  for (const auto& f : faces) {
    for (int e = 0; e < 3; ++e) {
      const int u = f[static_cast<std::size_t>(e)];
      const int v = f[static_cast<std::size_t>((e + 1) % 3)];
      auto& use = edges[{std::min(u, v), std::max(u, v)}];
      ++use.count;
      if (u < v) ++use.forward;
    }
  }
  WatertightReport rep;
  for (const auto& [key, use] : edges) {
    const bool opposite = use.count == 2 && use.forward == 1;
    if (!opposite) {
      rep.ok = false;
      rep.problems.push_back({key.first, key.second, use.count, use.count == 2 && use.forward != 1});
    }
  }
  return rep;
}

template <class T>
WatertightReport validate_watertight(const TriangleMesh<T>& mesh) {
  return validate_watertight(mesh.faces);
}

inline std::size_t count_edges(const std::vector<Face>& faces) {
  std::map<std::pair<int, int>, int> edges;
  for (const auto& f : faces) {
    for (int e = 0; e < 3; ++e) {
      const int u = f[static_cast<std::size_t>(e)];
      const int v = f[static_cast<std::size_t>((e + 1) % 3)];
      edges[{std::min(u, v), std::max(u, v)}] = 1;
    }
  }
  return edges.size();
}

template <class T>
long euler_characteristic(const TriangleMesh<T>& mesh) {
  return static_cast<long>(mesh.vertices.size()) - static_cast<long>(count_edges(mesh.faces)) +
         static_cast<long>(mesh.faces.size());
}

/// Enclosed volume by the divergence theorem; positive for outward winding.
inline double signed_volume(const Mesh& mesh) {
  double v = 0.0;
  for (const auto& f : mesh.faces) {
    const auto& a = mesh.vertices[static_cast<std::size_t>(f[0])];
    const auto& b = mesh.vertices[static_cast<std::size_t>(f[1])];
    const auto& c = mesh.vertices[static_cast<std::size_t>(f[2])];
    v += dot(a, cross(b, c));
  }
  return v / 6.0;
}

struct MeshQuality {
  double min_angle_deg = 0.0;
  double max_aspect_ratio = 0.0;
  std::size_t n_vertices = 0;
  std::size_t n_faces = 0;
};

/// Aspect ratio = longest edge * perimeter / (4 sqrt(3) * area); 1 for an
/// equilateral triangle.
inline double triangle_aspect_ratio(const Vec3d& a, const Vec3d& b, const Vec3d& c) {
  const double la = distance(b, c), lb = distance(c, a), lc = distance(a, b);
  const double area = 0.5 * norm(cross(b - a, c - a));
  if (!(area > 0.0)) throw DegenerateError("zero-area face");
  return std::max({la, lb, lc}) * (la + lb + lc) / (4.0 * std::sqrt(3.0) * area);
}

inline double triangle_min_angle_deg(const Vec3d& a, const Vec3d& b, const Vec3d& c) {
  auto angle = [](const Vec3d& p, const Vec3d& q, const Vec3d& r) {
    const Vec3d u = q - p, v = r - p;
    return std::atan2(norm(cross(u, v)), dot(u, v));
  };
  const double m = std::min({angle(a, b, c), angle(b, c, a), angle(c, a, b)});
  return m * 180.0 / std::numbers::pi;
}

inline MeshQuality mesh_quality(const Mesh& mesh) {
  MeshQuality q;
  q.n_vertices = mesh.vertices.size();
  q.n_faces = mesh.faces.size();
  q.min_angle_deg = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
    const auto& f = mesh.faces[i];
    const auto& a = mesh.vertices[static_cast<std::size_t>(f[0])];
    const auto& b = mesh.vertices[static_cast<std::size_t>(f[1])];
    const auto& c = mesh.vertices[static_cast<std::size_t>(f[2])];
    if (!(norm(cross(b - a, c - a)) > 0.0)) throw DegenerateError("zero-area face " + std::to_string(i));
    q.max_aspect_ratio = std::max(q.max_aspect_ratio, triangle_aspect_ratio(a, b, c));
    q.min_angle_deg = std::min(q.min_angle_deg, triangle_min_angle_deg(a, b, c));
  }
  if (mesh.faces.empty()) q.min_angle_deg = 0.0;
  return q;
}

}  // namespace vessel
