#pragma once

// Synthetic vessels with known parameters, slice-wise center-of-mass
// centerlines and sparse slice masks.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vessel/error.hpp"
#include "vessel/grid.hpp"
#include "vessel/params.hpp"
#include "vessel/sdf.hpp"

namespace vessel {

enum class CaseKind { Straight, Arc, Helix, VaryingRadius, Elliptic };

inline CaseKind parse_case_kind(const std::string& s) {
  if (s == "straight") return CaseKind::Straight;
  if (s == "arc") return CaseKind::Arc;
  if (s == "helix") return CaseKind::Helix;
  if (s == "varying_radius") return CaseKind::VaryingRadius;
  if (s == "elliptic") return CaseKind::Elliptic;
  throw ArgumentError("unknown case kind '" + s + "' (straight, arc, helix, varying_radius, elliptic)");
}

inline std::string to_string(CaseKind k) {
  switch (k) {
    case CaseKind::Straight:
      return "straight";
    case CaseKind::Arc:
      return "arc";
    case CaseKind::Helix:
      return "helix";
    case CaseKind::VaryingRadius:
      return "varying_radius";
    case CaseKind::Elliptic:
      return "elliptic";
  }
  return "?";
}

struct SynthOptions {
  int n_centerline = 16;
  int n_radius = 8;
  int P = 32;
  std::size_t sections = 128;
  std::size_t gt_samples = 512;
  double helix_radius = 10.0;  // at 64^3, scaled with the grid
  double helix_pitch = 48.0;
  bool jitter = false;
};

struct SyntheticCase {
  CaseKind kind = CaseKind::Straight;
  Params true_params;
  std::size_t sections = 128;
  BinaryGrid segmentation;
  std::vector<Vec3d> centerline_gt;
  std::vector<Vec3d> preliminary_centerline;
  std::array<Vec3d, 2> endpoints;
  std::optional<SliceMask> slice_mask;
};

/// One point per occupied slice: the centroid of that slice's voxel centers.
inline std::vector<Vec3d> extract_preliminary_centerline(const BinaryGrid& seg, Axis axis = Axis::Z) {
  const auto shape = seg.shape();
  const int ax = index_of(axis);
  std::vector<Vec3d> sum(static_cast<std::size_t>(shape[ax]), Vec3d{});
  std::vector<std::size_t> count(static_cast<std::size_t>(shape[ax]), 0);
  for (int k = 0; k < shape.nz; ++k)
    for (int j = 0; j < shape.ny; ++j)
      for (int i = 0; i < shape.nx; ++i) {
        if (!seg(i, j, k)) continue;
        const int ijk[3] = {i, j, k};
        const auto s = static_cast<std::size_t>(ijk[ax]);
        sum[s] = sum[s] + voxel_center(i, j, k);
        ++count[s];
      }
  std::vector<Vec3d> out;
  for (std::size_t s = 0; s < sum.size(); ++s) {
    if (count[s] > 0) out.push_back(sum[s] / static_cast<double>(count[s]));
  }
  if (out.empty()) throw InputError("segmentation is empty");
  return out;
}

/// First and last occupied slices plus every stride-th slice in between,
/// stride = round(1 / keep_fraction).
inline SliceMask sparsify_slices(const BinaryGrid& seg, double keep_fraction, Axis axis = Axis::Z) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) throw ArgumentError("keep_fraction must be in (0, 1]");
  const auto shape = seg.shape();
  const int ax = index_of(axis);
  int first = -1, last = -1;
  for (int k = 0; k < shape.nz; ++k)
    for (int j = 0; j < shape.ny; ++j)
      for (int i = 0; i < shape.nx; ++i) {
        if (!seg(i, j, k)) continue;
        const int ijk[3] = {i, j, k};
        first = first < 0 ? ijk[ax] : std::min(first, ijk[ax]);
        last = std::max(last, ijk[ax]);
      }
  SliceMask m;
  m.axis = axis;
  m.keep_fraction = keep_fraction;
  if (keep_fraction == 1.0) {
    for (int s = 0; s < shape[ax]; ++s) m.slices.push_back(s);
    return m;
  }
  if (first < 0) return m;
  const int stride = std::max(1, static_cast<int>(std::lround(1.0 / keep_fraction)));
  for (int s = first; s <= last; s += stride) m.slices.push_back(s);
  if (m.slices.back() != last) m.slices.push_back(last);
  return m;
}

namespace synth_detail {

struct Profile {
  std::vector<Vec3d> centerline;  // control points
  std::vector<double> radius;
  double ellipticity = 0.0;  // relative amplitude of the cos(2 theta) adjustment
};

inline std::vector<double> linspace01(int n) {
  std::vector<double> s(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = static_cast<double>(i) / (n - 1);
  return s;
}

inline Profile make_profile(CaseKind kind, GridShape shape, std::mt19937_64& rng, const SynthOptions& o) {
  const double f = std::min({shape.nx, shape.ny, shape.nz}) / 64.0;
  const Vec3d c0{shape.nx / 2.0, shape.ny / 2.0, shape.nz / 2.0};
  std::uniform_real_distribution<double> jit(-1.0, 1.0);
  const Vec3d off{jit(rng) * f, jit(rng) * f, jit(rng) * f};
  const auto s_c = linspace01(o.n_centerline);
  const auto s_r = linspace01(o.n_radius);
  constexpr double pi = std::numbers::pi;
  Profile p;
  auto radius = [&](auto&& fn) {
    for (double s : s_r) p.radius.push_back(fn(s) * f);
  };

  switch (kind) {
    case CaseKind::Straight: {
      const double tx = 0.1 * jit(rng), ty = 0.1 * jit(rng);
      const double L = 40.0 * f;
      for (double s : s_c) p.centerline.push_back(c0 + off + Vec3d{tx * (s - 0.5) * L, ty * (s - 0.5) * L, (s - 0.5) * L});
      radius([](double) { return 5.0; });
      break;
    }
    case CaseKind::Arc: {
      const double R = 30.0 * f;
      const double half = (40.0 + 4.0 * jit(rng)) * pi / 180.0;
      const double xs = R * (1.0 - std::cos(half)) / 2.0;
      for (double s : s_c) {
        const double phi = (2.0 * s - 1.0) * half;
        p.centerline.push_back(c0 + off + Vec3d{R * (1.0 - std::cos(phi)) - xs, 0.0, R * std::sin(phi)});
      }
      radius([](double) { return 4.0; });
      break;
    }
    case CaseKind::Helix: {
      const double Rh = o.helix_radius * f, pitch = o.helix_pitch * f;
      const double phase = pi * jit(rng);
      for (double s : s_c) {
        const double th = 2.0 * pi * s + phase;
        p.centerline.push_back(c0 + off + Vec3d{Rh * std::cos(th), Rh * std::sin(th), pitch * (s - 0.5)});
      }
      radius([](double s) { return 4.5 + 1.5 * s; });
      break;
    }
    case CaseKind::VaryingRadius: {
      const double L = 44.0 * f, bend = 4.0 * f;
      for (double s : s_c) p.centerline.push_back(c0 + off + Vec3d{bend * std::sin(pi * s), 0.0, (s - 0.5) * L});
      radius([](double s) { return 5.0 + 2.0 * std::cos(2.0 * pi * s); });
      break;
    }
    case CaseKind::Elliptic: {
      const double L = 40.0 * f;
      for (double s : s_c) p.centerline.push_back(c0 + Vec3d{off.x, off.y, (s - 0.5) * L});
      radius([](double) { return 5.0; });
      p.ellipticity = 0.35;
      break;
    }
  }
  return p;
}

// Voxels with |sdf| < 0.5 flip with probability 0.2.
inline void jitter_boundary(BinaryGrid& seg, const Mesh& mesh, std::mt19937_64& rng) {
  const MeshSdf sdf(mesh);
  std::bernoulli_distribution flip(0.2);
  const auto b = mesh_bounds(mesh);
  const auto shape = seg.shape();
  for (int k = std::max(0, static_cast<int>(b.lo.z) - 1); k < std::min(shape.nz, static_cast<int>(b.hi.z) + 2); ++k)
    for (int j = std::max(0, static_cast<int>(b.lo.y) - 1); j < std::min(shape.ny, static_cast<int>(b.hi.y) + 2); ++j)
      for (int i = std::max(0, static_cast<int>(b.lo.x) - 1); i < std::min(shape.nx, static_cast<int>(b.hi.x) + 2); ++i) {
        if (std::abs(sdf(voxel_center(i, j, k))) < 0.5 && flip(rng)) seg(i, j, k) = seg(i, j, k) ? 0 : 1;
      }
}

}  // namespace synth_detail

/// Builds a case. The stored preliminary centerline is the Z center-of-mass
/// polyline with its ends replaced by the true endpoints; points from slices
/// cut by a tilted end cap are dropped.
inline SyntheticCase make_case(CaseKind kind, GridShape shape, unsigned long long seed, const SynthOptions& o = {}) {
  if (!shape.valid()) throw ArgumentError("grid shape must be positive");
  if (kind != CaseKind::Straight && std::min({shape.nx, shape.ny, shape.nz}) < 32) {
    throw ArgumentError("non-straight synthetic cases need a grid of at least 32^3");
  }
  std::mt19937_64 rng(seed);
  const auto prof = synth_detail::make_profile(kind, shape, rng, o);

  SyntheticCase c;
  c.kind = kind;
  c.sections = o.sections;
  auto& tp = c.true_params;
  tp.P = o.P;
  tp.centerline_cp = prof.centerline;
  tp.radius_cp = prof.radius;
  tp.adjustment_cp.assign(static_cast<std::size_t>(o.n_radius), std::vector<double>(static_cast<std::size_t>(o.P), 0.0));
  if (prof.ellipticity != 0.0) {
    for (std::size_t a = 0; a < tp.adjustment_cp.size(); ++a) {
      for (int k = 0; k < o.P; ++k) {
        const double theta = 2.0 * std::numbers::pi * k / o.P;
        tp.adjustment_cp[a][static_cast<std::size_t>(k)] = prof.ellipticity * tp.radius_cp[a] * std::cos(2.0 * theta);
      }
    }
  }

  const Mesh mesh = vessel_mesh(tp, o.sections);
  const auto b = mesh_bounds(mesh);
  if (b.lo.x < 0.5 || b.lo.y < 0.5 || b.lo.z < 0.5 || b.hi.x > shape.nx - 0.5 || b.hi.y > shape.ny - 0.5 ||
      b.hi.z > shape.nz - 0.5) {
    throw BoundsError("synthetic vessel exceeds the grid");
  }
  c.segmentation = rasterize_exact(mesh, shape);
  if (o.jitter) synth_detail::jitter_boundary(c.segmentation, mesh, rng);

  c.centerline_gt = sample_centerline(tp, o.gt_samples);
  c.endpoints = {tp.centerline_cp.front(), tp.centerline_cp.back()};

  // Slices cut by a tilted end cap see a partial cross-section.
  const auto cs = cross_sections(tp, o.sections);
  auto cap_extent = [&](std::size_t n) {
    const double tz = std::abs(cs.tangents[n].z);
    return clamped_extent(cs.radii[n], 0.0) * std::sqrt(std::max(0.0, 1.0 - tz * tz)) + 0.5;
  };
  const double z_first = c.endpoints[0].z, z_last = c.endpoints[1].z;
  const double ext_first = cap_extent(0), ext_last = cap_extent(o.sections - 1);
  const double dir = z_last >= z_first ? 1.0 : -1.0;
  std::vector<Vec3d> inner;
  for (const auto& p : extract_preliminary_centerline(c.segmentation, Axis::Z)) {
    if (dir * (p.z - z_first) > ext_first && dir * (z_last - p.z) > ext_last) inner.push_back(p);
  }
  if (dir < 0) std::reverse(inner.begin(), inner.end());
  c.preliminary_centerline.push_back(c.endpoints[0]);
  c.preliminary_centerline.insert(c.preliminary_centerline.end(), inner.begin(), inner.end());
  c.preliminary_centerline.push_back(c.endpoints[1]);
  return c;
}

}  // namespace vessel
