#pragma once

// Slice-wise soft voxelization of a watertight triangle mesh.
//
// For every voxel-center plane along the chosen axis the mesh is cut into
// closed polygons. A voxel's value is sigmoid(s * d / tau), where d is the
// in-plane distance from the voxel center to the nearest polygon segment and
// s is +1 inside (even-odd rule) and -1 outside. Only voxels inside the mesh
// bounding box grown by `margin` are computed; all others are exactly 0.
//
// Gradients: the nearest segment and the inside bit are held fixed; the
// derivative flows through the point-to-segment distance into the two edge
// crossings that span the segment and from there into the mesh vertices.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "vessel/error.hpp"
#include "vessel/grid.hpp"
#include "vessel/mesh.hpp"
#include "vessel/sdf.hpp"
#include "vessel/vec.hpp"

namespace vessel {

/// Unique undirected edges and the edges of every face. Construction fails
/// unless each edge belongs to exactly two faces.
struct MeshTopology {
  std::vector<std::array<int, 2>> edges;
  std::vector<std::array<int, 3>> face_edges;

  explicit MeshTopology(const std::vector<Face>& faces) {
    std::map<std::pair<int, int>, int> ids;
    std::vector<int> uses;
    face_edges.reserve(faces.size());
    for (const auto& f : faces) {
      std::array<int, 3> fe{};
      for (int e = 0; e < 3; ++e) {
        const int u = f[static_cast<std::size_t>(e)];
        const int v = f[static_cast<std::size_t>((e + 1) % 3)];
        const std::pair<int, int> key{std::min(u, v), std::max(u, v)};
        auto [it, inserted] = ids.try_emplace(key, static_cast<int>(edges.size()));
        if (inserted) {
          edges.push_back({key.first, key.second});
          uses.push_back(0);
        }
        ++uses[static_cast<std::size_t>(it->second)];
        fe[static_cast<std::size_t>(e)] = it->second;
      }
      face_edges.push_back(fe);
    }
    for (std::size_t i = 0; i < uses.size(); ++i) {
      if (uses[i] != 2) {
        throw TopologyError("mesh is not watertight: edge (" + std::to_string(edges[i][0]) + "," +
                            std::to_string(edges[i][1]) + ") has " + std::to_string(uses[i]) + " faces");
      }
    }
  }
};

/// In-plane coordinate axes (u, v) so that (u, v, axis) is right-handed.
inline std::array<int, 2> plane_axes(Axis a) {
  switch (a) {
    case Axis::X:
      return {1, 2};
    case Axis::Y:
      return {2, 0};
    case Axis::Z:
      return {0, 1};
  }
  return {0, 1};
}

/// Perturbation applied to vertices lying exactly on a slice plane.
inline constexpr double kOnPlaneShift = 1e-6;

/// A crossing of mesh edge (va, vb) with the plane. `ha`, `hb` are the signed
/// heights of the endpoints above the plane (after perturbation) and
/// t = ha / (ha - hb) locates the crossing along the edge.
struct SliceNode {
  int edge = -1;
  int va = -1, vb = -1;
  double ha = 0.0, hb = 0.0;
  double t = 0.0;
  Vec2d pos;
};

struct SliceIntersection {
  Axis axis = Axis::Z;
  double coord = 0.0;
  std::vector<SliceNode> points;
  std::vector<std::array<int, 2>> edges;   // directed: outer contours CCW in (u, v)
  std::vector<std::vector<int>> polygons;  // closed point-index cycles
};

/// Partitions a graph in which every node has degree 2 into its cycles.
/// A cycle starts along the first listed edge leaving its start node, so
/// consistently directed edge lists produce consistently wound cycles.
inline std::vector<std::vector<int>> extract_polygons(std::size_t n_points,
                                                      const std::vector<std::array<int, 2>>& edges) {
  std::vector<std::array<int, 2>> nbr(n_points, {-1, -1});
  std::vector<int> degree(n_points, 0);
  std::vector<int> out_edge(n_points, -1);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const int a = edges[e][0], b = edges[e][1];
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= n_points || static_cast<std::size_t>(b) >= n_points || a == b) {
      throw DegenerateError("malformed slice: invalid edge " + std::to_string(e));
    }
    for (int x : {a, b}) {
      auto& d = degree[static_cast<std::size_t>(x)];
      if (d < 2) nbr[static_cast<std::size_t>(x)][static_cast<std::size_t>(d)] = (x == a ? b : a);
      ++d;
    }
    if (out_edge[static_cast<std::size_t>(a)] < 0) out_edge[static_cast<std::size_t>(a)] = b;
  }
  for (std::size_t i = 0; i < n_points; ++i) {
    if (degree[i] != 2) {
      throw DegenerateError("malformed slice: point " + std::to_string(i) + " has degree " + std::to_string(degree[i]));
    }
  }
  std::vector<bool> seen(n_points, false);
  std::vector<std::vector<int>> cycles;
  for (std::size_t s = 0; s < n_points; ++s) {
    if (seen[s]) continue;
    std::vector<int> cyc;
    int prev = static_cast<int>(s);
    int cur = out_edge[s] >= 0 ? out_edge[s] : nbr[s][0];
    cyc.push_back(static_cast<int>(s));
    seen[s] = true;
    while (cur != static_cast<int>(s)) {
      if (seen[static_cast<std::size_t>(cur)]) throw DegenerateError("malformed slice: cycles overlap");
      seen[static_cast<std::size_t>(cur)] = true;
      cyc.push_back(cur);
      const auto& nb = nbr[static_cast<std::size_t>(cur)];
      const int next = nb[0] == prev ? nb[1] : nb[0];
      prev = cur;
      cur = next;
    }
    cycles.push_back(std::move(cyc));
  }
  return cycles;
}

/// Intersection of the mesh with the plane {x[axis] = coord}.
inline SliceIntersection slice_mesh(const Mesh& mesh, const MeshTopology& topo, Axis axis, double coord) {
  const int ax = index_of(axis);
  const auto [iu, iv] = plane_axes(axis);
  SliceIntersection si;
  si.axis = axis;
  si.coord = coord;

  auto height = [&](int v) {
    const double h = mesh.vertices[static_cast<std::size_t>(v)][ax] - coord;
    return std::abs(h) < 1e-12 ? kOnPlaneShift : h;
  };

  std::vector<int> node_of_edge(topo.edges.size(), -1);
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    const int a = topo.edges[e][0], b = topo.edges[e][1];
    const double ha = height(a), hb = height(b);
    if ((ha > 0.0) == (hb > 0.0)) continue;
    SliceNode n;
    n.edge = static_cast<int>(e);
    n.va = a;
    n.vb = b;
    n.ha = ha;
    n.hb = hb;
    n.t = ha / (ha - hb);
    const auto& p = mesh.vertices[static_cast<std::size_t>(a)];
    const auto& q = mesh.vertices[static_cast<std::size_t>(b)];
    n.pos = {p[iu] + n.t * (q[iu] - p[iu]), p[iv] + n.t * (q[iv] - p[iv])};
    node_of_edge[e] = static_cast<int>(si.points.size());
    si.points.push_back(n);
  }
  if (si.points.empty()) return si;

  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    int found[2];
    int nfound = 0;
    for (int e : topo.face_edges[f]) {
      const int node = node_of_edge[static_cast<std::size_t>(e)];
      if (node >= 0) {
        if (nfound == 2) throw DegenerateError("degenerate slice: face crosses the plane three times");
        found[nfound++] = node;
      }
    }
    if (nfound == 0) continue;
    if (nfound != 2) throw DegenerateError("degenerate slice: face with a single crossing");
    // Orient along axis x face-normal so outer contours run CCW in (u, v).
    const auto& fa = mesh.vertices[static_cast<std::size_t>(mesh.faces[f][0])];
    const auto& fb = mesh.vertices[static_cast<std::size_t>(mesh.faces[f][1])];
    const auto& fc = mesh.vertices[static_cast<std::size_t>(mesh.faces[f][2])];
    const Vec3d nrm = cross(fb - fa, fc - fa);
    Vec3d axis_dir{0.0, 0.0, 0.0};
    axis_dir[ax] = 1.0;
    const Vec3d along = cross(axis_dir, nrm);
    const Vec2d dir{along[iu], along[iv]};
    const Vec2d seg = si.points[static_cast<std::size_t>(found[1])].pos - si.points[static_cast<std::size_t>(found[0])].pos;
    if (dot(seg, dir) >= 0.0) {
      si.edges.push_back({found[0], found[1]});
    } else {
      si.edges.push_back({found[1], found[0]});
    }
  }
  si.polygons = extract_polygons(si.points.size(), si.edges);
  return si;
}

inline SliceIntersection slice_mesh(const Mesh& mesh, Axis axis, double coord) {
  const MeshTopology topo(mesh.faces);
  return slice_mesh(mesh, topo, axis, coord);
}

/// Inclusive pixel index range in a slice plane (u, v).
struct Rect2 {
  int u_lo = 0, u_hi = -1, v_lo = 0, v_hi = -1;
  int width() const { return std::max(0, u_hi - u_lo + 1); }
  int height() const { return std::max(0, v_hi - v_lo + 1); }
};

/// Nearest-segment bookkeeping for one pixel.
struct PixelSample {
  double distance = std::numeric_limits<double>::infinity();
  bool inside = false;
  int node_a = -1, node_b = -1;  // segment endpoints (slice node indices)
  double s = 0.0;                // closest point = a + s (b - a)
};

struct SliceRaster {
  Rect2 rect;
  std::vector<std::uint8_t> occupancy;  // row-major, u fastest
  std::vector<double> distance;         // +inf when the slice is empty
  std::vector<PixelSample> samples;
};

namespace voxelizer_detail {

struct Segment {
  int a, b;
  double au, av, du, dv, inv_len2;
};

inline std::vector<Segment> polygon_segments(const SliceIntersection& si) {
  std::vector<Segment> segs;
  for (const auto& poly : si.polygons) {
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const int a = poly[i], b = poly[(i + 1) % poly.size()];
      const Vec2d pa = si.points[static_cast<std::size_t>(a)].pos;
      const Vec2d pb = si.points[static_cast<std::size_t>(b)].pos;
      const double du = pb.u - pa.u, dv = pb.v - pa.v;
      const double l2 = du * du + dv * dv;
      segs.push_back({a, b, pa.u, pa.v, du, dv, l2 > 0.0 ? 1.0 / l2 : 0.0});
    }
  }
  return segs;
}

// Even-odd crossing test (pnpoly) fused with the nearest-segment search.
inline PixelSample sample_pixel(const std::vector<Segment>& segs, double pu, double pv) {
  PixelSample px;
  double best2 = std::numeric_limits<double>::infinity();
  bool inside = false;
  for (const auto& sg : segs) {
    const double ru = pu - sg.au, rv = pv - sg.av;
    double s = (ru * sg.du + rv * sg.dv) * sg.inv_len2;
    s = s < 0.0 ? 0.0 : (s > 1.0 ? 1.0 : s);
    const double eu = ru - s * sg.du, ev = rv - s * sg.dv;
    const double d2 = eu * eu + ev * ev;
    if (d2 < best2) {
      best2 = d2;
      px.node_a = sg.a;
      px.node_b = sg.b;
      px.s = s;
    }
    const double bv = sg.av + sg.dv;
    if ((sg.av > pv) != (bv > pv) && pu < sg.du * (pv - sg.av) / sg.dv + sg.au) inside = !inside;
  }
  px.inside = inside;
  px.distance = std::sqrt(best2);
  return px;
}

}  // namespace voxelizer_detail

/// Occupancy and in-plane distance for every pixel of `bbox` grown by
/// `margin`. Pixel (a, b) has its center at (a + 0.5, b + 0.5).
inline SliceRaster rasterize_slice(const SliceIntersection& si, Rect2 bbox, int margin) {
  SliceRaster r;
  r.rect = {bbox.u_lo - margin, bbox.u_hi + margin, bbox.v_lo - margin, bbox.v_hi + margin};
  const std::size_t n = static_cast<std::size_t>(r.rect.width()) * static_cast<std::size_t>(r.rect.height());
  r.occupancy.assign(n, 0);
  r.distance.assign(n, std::numeric_limits<double>::infinity());
  r.samples.assign(n, PixelSample{});
  const auto segs = voxelizer_detail::polygon_segments(si);
  if (segs.empty()) return r;
  std::size_t idx = 0;
  for (int b = r.rect.v_lo; b <= r.rect.v_hi; ++b) {
    for (int a = r.rect.u_lo; a <= r.rect.u_hi; ++a, ++idx) {
      const auto px = voxelizer_detail::sample_pixel(segs, a + 0.5, b + 0.5);
      r.samples[idx] = px;
      r.occupancy[idx] = px.inside ? 1 : 0;
      r.distance[idx] = px.distance;
    }
  }
  return r;
}

/// Margin (voxels) for which pruned sigmoid values stay below 1e-12.
inline int default_margin(double tau) { return static_cast<int>(std::ceil(tau * std::log(1e12) - 1e-9)); }

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

struct VoxelizeOptions {
  double tau = 0.1;
  std::optional<int> margin;  // default_margin(tau) when unset
  Axis axis = Axis::X;
  int threads = 1;
  std::optional<SliceMask> mask;  // compute only voxels on labeled slices
};

struct SoftVoxelization {
  VoxelGrid<double> grid;
  VoxelBox bbox;  // computed region (mesh bounds + margin, clipped)
  int margin = 3;
  double tau = 0.1;
  Axis axis = Axis::X;
};

/// Voxel index range whose centers lie within the mesh bounds grown by margin.
inline VoxelBox margin_box(const Mesh& mesh, GridShape shape, int margin) {
  const Bounds3 b = mesh_bounds(mesh);
  VoxelBox box;
  for (int d = 0; d < 3; ++d) {
    const auto dd = static_cast<std::size_t>(d);
    box.lo[dd] = std::max(0, static_cast<int>(std::ceil(b.lo[d] - margin - 0.5)));
    box.hi[dd] = std::min(shape[d] - 1, static_cast<int>(std::floor(b.hi[d] + margin - 0.5)));
  }
  return box;
}

/// Forward soft voxelization that keeps what the backward pass needs.
class SoftVoxelizer {
 public:
  SoftVoxelizer(const Mesh& mesh, GridShape shape, const VoxelizeOptions& opts)
      : mesh_(mesh), topo_(mesh.faces), opts_(opts) {
    if (!(opts.tau > 0.0)) throw ArgumentError("tau must be positive");
    if (!shape.valid()) throw ArgumentError("grid shape must be positive");
    for (const auto& v : mesh.vertices) {
      if (!all_finite(v)) throw NumericError("voxelization", "non-finite mesh vertex");
    }
    result_.tau = opts.tau;
    result_.margin = opts.margin.value_or(default_margin(opts.tau));
    if (result_.margin < 0) throw ArgumentError("margin must be non-negative");
    result_.axis = opts.axis;
    result_.grid = VoxelGrid<double>(shape, 0.0);
    result_.bbox = margin_box(mesh, shape, result_.margin);
    run_forward();
  }

  const SoftVoxelization& result() const { return result_; }
  const Mesh& mesh() const { return mesh_; }

  /// Slice-wise in-plane distance per voxel (+inf where not computed).
  VoxelGrid<double> distance_grid() const {
    VoxelGrid<double> g(result_.grid.shape(), std::numeric_limits<double>::infinity());
    for (const auto& sl : slices_)
      for (const auto& rec : sl.records) g[rec.voxel] = rec.distance;
    return g;
  }

  /// Slice-wise even-odd occupancy per voxel (0 where not computed).
  BinaryGrid occupancy_grid() const {
    BinaryGrid g(result_.grid.shape(), 0);
    for (const auto& sl : slices_)
      for (const auto& rec : sl.records) g[rec.voxel] = rec.inside ? 1 : 0;
    return g;
  }

  /// Voxels whose value was actually computed (inside the region, on a
  /// non-empty slice and allowed by the mask).
  std::vector<std::size_t> computed_voxels() const {
    std::vector<std::size_t> out;
    for (const auto& sl : slices_)
      for (const auto& rec : sl.records) out.push_back(rec.voxel);
    return out;
  }

  /// Chain rule from per-voxel value gradients to mesh vertex gradients.
  std::vector<Vec3d> backward(const VoxelGrid<double>& value_grad) const {
    if (!(value_grad.shape() == result_.grid.shape())) throw ArgumentError("gradient grid shape mismatch");
    const int ax = index_of(result_.axis);
    const auto [iu, iv] = plane_axes(result_.axis);
    std::vector<Vec3d> vgrad(mesh_.vertices.size(), Vec3d{});
    std::vector<Vec2d> node_grad;
    for (const auto& sl : slices_) {
      node_grad.assign(sl.si.points.size(), Vec2d{});
      for (const auto& rec : sl.records) {
        const double g = value_grad[rec.voxel] * rec.dvalue_dd;
        if (g == 0.0) continue;
        // d(distance)/d(a) = -(1 - s) n, d/d(b) = -s n.
        const Vec2d n{rec.nu, rec.nv};
        node_grad[static_cast<std::size_t>(rec.node_a)] =
            node_grad[static_cast<std::size_t>(rec.node_a)] - n * (g * (1.0 - rec.s));
        node_grad[static_cast<std::size_t>(rec.node_b)] = node_grad[static_cast<std::size_t>(rec.node_b)] - n * (g * rec.s);
      }
      for (std::size_t i = 0; i < sl.si.points.size(); ++i) {
        const Vec2d g = node_grad[i];
        if (g.u == 0.0 && g.v == 0.0) continue;
        const SliceNode& nd = sl.si.points[i];
        const auto& p = mesh_.vertices[static_cast<std::size_t>(nd.va)];
        const auto& q = mesh_.vertices[static_cast<std::size_t>(nd.vb)];
        const double du = q[iu] - p[iu], dv = q[iv] - p[iv];
        const double gt = g.u * du + g.v * dv;
        const double den = (nd.ha - nd.hb) * (nd.ha - nd.hb);
        auto& gp = vgrad[static_cast<std::size_t>(nd.va)];
        auto& gq = vgrad[static_cast<std::size_t>(nd.vb)];
        gp[iu] += g.u * (1.0 - nd.t);
        gp[iv] += g.v * (1.0 - nd.t);
        gq[iu] += g.u * nd.t;
        gq[iv] += g.v * nd.t;
        gp[ax] += gt * (-nd.hb / den);
        gq[ax] += gt * (nd.ha / den);
      }
    }
    return vgrad;
  }

 private:
  struct Record {
    std::size_t voxel;
    int node_a, node_b;
    double s;
    double nu, nv;       // unit vector from closest point to the voxel center
    double dvalue_dd;    // d(value)/d(distance)
    double distance;
    bool inside;
  };

  struct Slice {
    int index = 0;
    SliceIntersection si;
    std::vector<Record> records;
  };

  void run_forward() {
    const VoxelBox& box = result_.bbox;
    if (box.empty()) return;
    const int ax = index_of(result_.axis);
    const auto [iu, iv] = plane_axes(result_.axis);
    const auto shape = result_.grid.shape();

    std::optional<std::vector<bool>> keep;
    int mask_axis = 0;
    if (opts_.mask) {
      mask_axis = index_of(opts_.mask->axis);
      keep = opts_.mask->lookup(shape[mask_axis]);
    }

    for (int s = box.lo[static_cast<std::size_t>(ax)]; s <= box.hi[static_cast<std::size_t>(ax)]; ++s) {
      if (keep && mask_axis == ax && !(*keep)[static_cast<std::size_t>(s)]) continue;
      slices_.push_back(Slice{s, {}, {}});
    }

    const int nthreads = std::max(1, opts_.threads);
    auto work = [&](std::size_t first) {
      for (std::size_t n = first; n < slices_.size(); n += static_cast<std::size_t>(nthreads)) {
        process_slice(slices_[n], ax, iu, iv, keep ? &*keep : nullptr, mask_axis);
      }
    };
    if (nthreads == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < nthreads; ++t) pool.emplace_back(work, static_cast<std::size_t>(t));
      for (auto& th : pool) th.join();
    }
  }

  void process_slice(Slice& sl, int ax, int iu, int iv, const std::vector<bool>* keep, int mask_axis) {
    const VoxelBox& box = result_.bbox;
    sl.si = slice_mesh(mesh_, topo_, result_.axis, sl.index + 0.5);
    const auto segs = voxelizer_detail::polygon_segments(sl.si);
    if (segs.empty()) return;
    auto& grid = result_.grid;
    const double tau = result_.tau;
    int ijk[3];
    ijk[ax] = sl.index;
    for (int b = box.lo[static_cast<std::size_t>(iv)]; b <= box.hi[static_cast<std::size_t>(iv)]; ++b) {
      ijk[iv] = b;
      for (int a = box.lo[static_cast<std::size_t>(iu)]; a <= box.hi[static_cast<std::size_t>(iu)]; ++a) {
        ijk[iu] = a;
        if (keep && !(*keep)[static_cast<std::size_t>(ijk[mask_axis])]) continue;
        const double pu = a + 0.5, pv = b + 0.5;
        const auto px = voxelizer_detail::sample_pixel(segs, pu, pv);
        const double sign = px.inside ? 1.0 : -1.0;
        const double val = sigmoid(sign * px.distance / tau);
        const std::size_t vox = grid.index(ijk[0], ijk[1], ijk[2]);
        grid[vox] = val;

        Record rec{vox, px.node_a, px.node_b, px.s, 0.0, 0.0, 0.0, px.distance, px.inside};
        if (px.distance > 0.0) {
          const Vec2d pa = sl.si.points[static_cast<std::size_t>(px.node_a)].pos;
          const Vec2d pb = sl.si.points[static_cast<std::size_t>(px.node_b)].pos;
          const Vec2d c = pa + (pb - pa) * px.s;
          rec.nu = (pu - c.u) / px.distance;
          rec.nv = (pv - c.v) / px.distance;
          rec.dvalue_dd = val * (1.0 - val) * sign / tau;
        }
        sl.records.push_back(rec);
      }
    }
  }

  Mesh mesh_;
  MeshTopology topo_;
  VoxelizeOptions opts_;
  SoftVoxelization result_;
  std::vector<Slice> slices_;
};

/// Soft voxelization sigmoid(SDF_slice / tau) with bbox + margin pruning.
inline SoftVoxelization soft_voxelize(const Mesh& mesh, GridShape shape, const VoxelizeOptions& opts = {}) {
  return SoftVoxelizer(mesh, shape, opts).result();
}

/// Thresholds a soft grid at 0.5.
inline BinaryGrid harden(const VoxelGrid<double>& soft) {
  BinaryGrid out(soft.shape(), 0);
  for (std::size_t i = 0; i < soft.size(); ++i) out[i] = soft[i] > 0.5 ? 1 : 0;
  return out;
}

}  // namespace vessel
