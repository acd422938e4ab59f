#pragma once

// Exact signed distance to a watertight triangle mesh (positive inside) and
// the binary rasterizer built on it. Non-differentiable; serves as ground
// truth for the slice-wise soft voxelizer and for synthetic data.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "vessel/error.hpp"
#include "vessel/grid.hpp"
#include "vessel/mesh.hpp"
#include "vessel/vec.hpp"

namespace vessel {

/// Closest point on the closed triangle abc (Voronoi-region walk).
inline Vec3d closest_point_on_triangle(const Vec3d& p, const Vec3d& a, const Vec3d& b, const Vec3d& c) {
  const Vec3d ab = b - a, ac = c - a, ap = p - a;
  const double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3d bp = p - b;
  const double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));

  const Vec3d cp = p - c;
  const double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
  }
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

inline double point_triangle_distance(const Vec3d& p, const Vec3d& a, const Vec3d& b, const Vec3d& c) {
  const double area2 = norm(cross(b - a, c - a));
  const double scale = std::max({squared_norm(b - a), squared_norm(c - a), squared_norm(c - b)});
  if (!(area2 > 1e-14 * scale) || scale == 0.0) throw DegenerateError("degenerate triangle");
  return distance(p, closest_point_on_triangle(p, a, b, c));
}

struct SdfOptions {
  bool brute_force = false;  // skip the BVH (oracle testing)
};

/// Signed distance queries against one mesh. The mesh is validated once.
class MeshSdf {
 public:
  explicit MeshSdf(Mesh mesh, SdfOptions opts = {}) : mesh_(std::move(mesh)), opts_(opts) {
    const auto rep = validate_watertight(mesh_);
    if (!rep.ok) {
      throw TopologyError("mesh is not watertight (" + std::to_string(rep.problems.size()) + " bad edges)");
    }
    for (std::size_t i = 0; i < mesh_.faces.size(); ++i) {
      const auto& [a, b, c] = tri(i);
      const double area2 = norm(cross(b - a, c - a));
      if (!(area2 > 0.0)) throw DegenerateError("zero-area face " + std::to_string(i));
    }
    if (!opts_.brute_force) build_bvh();
  }

  const Mesh& mesh() const { return mesh_; }

  double unsigned_distance(const Vec3d& p) const {
    if (opts_.brute_force || nodes_.empty()) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < mesh_.faces.size(); ++i) best = std::min(best, face_distance(p, i));
      return best;
    }
    return bvh_distance(p);
  }

  /// Parity of crossings of the ray from p toward +x.
  bool inside(const Vec3d& p) const {
    const auto hits = ray_hits(p.y, p.z);
    int n = 0;
    for (double x : hits) n += (x > p.x);
    return (n % 2) == 1;
  }

  double operator()(const Vec3d& p) const {
    const double d = unsigned_distance(p);
    if (d == 0.0) return 0.0;
    return inside(p) ? d : -d;
  }

  /// x coordinates where the +x ray through (y, z) crosses the surface,
  /// after the deterministic perturbation of degenerate rays.
  std::vector<double> ray_hits(double y, double z) const {
    constexpr double kEps = 1e-7;
    constexpr int kRetries = 16;
    for (int attempt = 0; attempt <= kRetries; ++attempt) {
      const double py = y + kEps * attempt * 0.7548776662466927;
      const double pz = z + kEps * attempt * 0.5698402909980532;
      std::vector<double> hits;
      bool degenerate = false;
      for (std::size_t i = 0; i < mesh_.faces.size() && !degenerate; ++i) {
        const auto& [a, b, c] = tri(i);
        const double e0 = edge_fn(a, b, py, pz), e1 = edge_fn(b, c, py, pz), e2 = edge_fn(c, a, py, pz);
        const bool pos = e0 > kTol || e1 > kTol || e2 > kTol;
        const bool neg = e0 < -kTol || e1 < -kTol || e2 < -kTol;
        if (pos && neg) continue;
        if (std::abs(e0) <= kTol || std::abs(e1) <= kTol || std::abs(e2) <= kTol) {
          degenerate = true;
          break;
        }
        const double s = e0 + e1 + e2;
        // Barycentric weights: e1 belongs to a, e2 to b, e0 to c.
        hits.push_back((e1 * a.x + e2 * b.x + e0 * c.x) / s);
      }
      if (!degenerate) return hits;
    }
    throw DegenerateError("ray parity test stayed degenerate after perturbation retries");
  }

 private:
  static constexpr double kTol = 1e-12;

  struct Node {
    std::array<double, 3> lo, hi;
    int left = -1, right = -1;  // children, or -1 for leaves
    int first = 0, count = 0;   // leaf range into order_
  };

  struct TriRef {
    const Vec3d& a;
    const Vec3d& b;
    const Vec3d& c;
  };

  TriRef tri(std::size_t i) const {
    const auto& f = mesh_.faces[i];
    return {mesh_.vertices[static_cast<std::size_t>(f[0])], mesh_.vertices[static_cast<std::size_t>(f[1])],
            mesh_.vertices[static_cast<std::size_t>(f[2])]};
  }

  double face_distance(const Vec3d& p, std::size_t i) const {
    const auto& [a, b, c] = tri(i);
    return distance(p, closest_point_on_triangle(p, a, b, c));
  }

  static double edge_fn(const Vec3d& a, const Vec3d& b, double y, double z) {
    return (b.y - a.y) * (z - a.z) - (b.z - a.z) * (y - a.y);
  }

  void build_bvh() {
    const std::size_t n = mesh_.faces.size();
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0);
    centroids_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& [a, b, c] = tri(i);
      centroids_[i] = (a + b + c) * (1.0 / 3.0);
    }
    nodes_.reserve(2 * n);
    build_node(0, static_cast<int>(n));
  }

  int build_node(int first, int count) {
    Node node;
    node.lo = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
               std::numeric_limits<double>::infinity()};
    node.hi = {-node.lo[0], -node.lo[1], -node.lo[2]};
    for (int i = first; i < first + count; ++i) {
      const auto& f = mesh_.faces[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])];
      for (int v : f) {
        const auto& p = mesh_.vertices[static_cast<std::size_t>(v)];
        for (int d = 0; d < 3; ++d) {
          node.lo[static_cast<std::size_t>(d)] = std::min(node.lo[static_cast<std::size_t>(d)], p[d]);
          node.hi[static_cast<std::size_t>(d)] = std::max(node.hi[static_cast<std::size_t>(d)], p[d]);
        }
      }
    }
    const int idx = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (count <= 4) {
      nodes_[static_cast<std::size_t>(idx)].first = first;
      nodes_[static_cast<std::size_t>(idx)].count = count;
      return idx;
    }
    int axis = 0;
    double extent = -1.0;
    for (int d = 0; d < 3; ++d) {
      const double e = node.hi[static_cast<std::size_t>(d)] - node.lo[static_cast<std::size_t>(d)];
      if (e > extent) {
        extent = e;
        axis = d;
      }
    }
    const int mid = first + count / 2;
    std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                     [&](int x, int y) {
                       return centroids_[static_cast<std::size_t>(x)][axis] < centroids_[static_cast<std::size_t>(y)][axis];
                     });
    const int l = build_node(first, mid - first);
    const int r = build_node(mid, first + count - mid);
    nodes_[static_cast<std::size_t>(idx)].left = l;
    nodes_[static_cast<std::size_t>(idx)].right = r;
    return idx;
  }

  static double box_distance2(const Node& n, const Vec3d& p) {
    double d2 = 0.0;
    for (int d = 0; d < 3; ++d) {
      const double lo = n.lo[static_cast<std::size_t>(d)], hi = n.hi[static_cast<std::size_t>(d)];
      const double e = p[d] < lo ? lo - p[d] : (p[d] > hi ? p[d] - hi : 0.0);
      d2 += e * e;
    }
    return d2;
  }

  double bvh_distance(const Vec3d& p) const {
    double best = std::numeric_limits<double>::infinity();
    double best2 = best;
    int stack[128];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& n = nodes_[static_cast<std::size_t>(stack[--top])];
      if (box_distance2(n, p) >= best2) continue;
      if (n.left < 0) {
        for (int i = n.first; i < n.first + n.count; ++i) {
          const double d = face_distance(p, static_cast<std::size_t>(order_[static_cast<std::size_t>(i)]));
          if (d < best) {
            best = d;
            best2 = d * d;
          }
        }
        continue;
      }
      const Node& l = nodes_[static_cast<std::size_t>(n.left)];
      const Node& r = nodes_[static_cast<std::size_t>(n.right)];
      const double dl = box_distance2(l, p), dr = box_distance2(r, p);
      if (dl < dr) {
        stack[top++] = n.right;
        stack[top++] = n.left;
      } else {
        stack[top++] = n.left;
        stack[top++] = n.right;
      }
    }
    return best;
  }

  Mesh mesh_;
  SdfOptions opts_;
  std::vector<Node> nodes_;
  std::vector<int> order_;
  std::vector<Vec3d> centroids_;
};

/// Signed distance at p, positive inside. Validates the mesh on every call;
/// use MeshSdf for batches.
inline double exact_sdf(const Mesh& mesh, const Vec3d& p, SdfOptions opts = {}) { return MeshSdf(mesh, opts)(p); }

struct Bounds3 {
  Vec3d lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity()};
  Vec3d hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity()};
};

inline Bounds3 mesh_bounds(const Mesh& mesh) {
  Bounds3 b;
  for (const auto& v : mesh.vertices) {
    for (int d = 0; d < 3; ++d) {
      b.lo[d] = std::min(b.lo[d], v[d]);
      b.hi[d] = std::max(b.hi[d], v[d]);
    }
  }
  return b;
}

struct RasterizeOptions {
  bool allow_partial = false;  // clip instead of rejecting meshes leaving the grid
  bool brute_force = false;    // evaluate exact_sdf per voxel instead of per ray
};

/// Binary grid with voxel = 1 iff the exact signed distance at its center is
/// positive. Rays along +x are shared per (y, z) row.
inline BinaryGrid rasterize_exact(const Mesh& mesh, GridShape shape, RasterizeOptions opts = {}) {
  if (!shape.valid()) throw ArgumentError("grid shape must be positive");
  const Bounds3 b = mesh_bounds(mesh);
  if (!opts.allow_partial) {
    for (int d = 0; d < 3; ++d) {
      if (b.lo[d] < 0.0 || b.hi[d] > shape[d]) throw BoundsError("mesh does not fit inside the voxel grid");
    }
  }
  MeshSdf sdf(mesh, {opts.brute_force});
  BinaryGrid grid(shape, 0);
  if (opts.brute_force) {
    for (int k = 0; k < shape.nz; ++k)
      for (int j = 0; j < shape.ny; ++j)
        for (int i = 0; i < shape.nx; ++i) grid(i, j, k) = sdf(voxel_center(i, j, k)) > 0.0 ? 1 : 0;
    return grid;
  }
  const int jlo = std::max(0, static_cast<int>(std::floor(b.lo.y - 0.5)));
  const int jhi = std::min(shape.ny - 1, static_cast<int>(std::ceil(b.hi.y - 0.5)));
  const int klo = std::max(0, static_cast<int>(std::floor(b.lo.z - 0.5)));
  const int khi = std::min(shape.nz - 1, static_cast<int>(std::ceil(b.hi.z - 0.5)));
  for (int k = klo; k <= khi; ++k) {
    for (int j = jlo; j <= jhi; ++j) {
      auto hits = sdf.ray_hits(j + 0.5, k + 0.5);
      if (hits.empty()) continue;
      std::sort(hits.begin(), hits.end());
      for (int i = 0; i < shape.nx; ++i) {
        const double x = i + 0.5;
        const auto after = hits.end() - std::upper_bound(hits.begin(), hits.end(), x);
        if (after % 2 == 1) {
          // A center exactly on the surface has distance 0 and stays outside.
          if (std::binary_search(hits.begin(), hits.end(), x) && sdf.unsigned_distance(voxel_center(i, j, k)) == 0.0)
            continue;
          grid(i, j, k) = 1;
        }
      }
    }
  }
  return grid;
}

}  // namespace vessel
