#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "vessel/vessel.hpp"

namespace vessel::testing {

// Closed axis-aligned box, outward winding.
inline Mesh box_mesh(Vec3d lo, Vec3d hi) {
  Mesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.push_back({(i & 1) ? hi.x : lo.x, (i & 2) ? hi.y : lo.y, (i & 4) ? hi.z : lo.z});
  }
  const int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
  for (const auto& q : quads) {
    m.faces.push_back({q[0], q[1], q[2]});
    m.faces.push_back({q[0], q[2], q[3]});
  }
  return m;
}

// Latitude-longitude sphere, outward winding.
inline Mesh sphere_mesh(Vec3d c, double r, int n_lat = 48, int n_lon = 96) {
  Mesh m;
  m.vertices.push_back(c + Vec3d{0, 0, r});
  for (int i = 1; i < n_lat; ++i) {
    const double th = std::numbers::pi * i / n_lat;
    for (int j = 0; j < n_lon; ++j) {
      const double ph = 2.0 * std::numbers::pi * j / n_lon;
      m.vertices.push_back(c + Vec3d{r * std::sin(th) * std::cos(ph), r * std::sin(th) * std::sin(ph), r * std::cos(th)});
    }
  }
  m.vertices.push_back(c + Vec3d{0, 0, -r});
  const int south = static_cast<int>(m.vertices.size()) - 1;
  auto id = [&](int i, int j) { return 1 + (i - 1) * n_lon + (j % n_lon); };
  for (int j = 0; j < n_lon; ++j) m.faces.push_back({0, id(1, j), id(1, j + 1)});
  for (int i = 1; i + 1 < n_lat; ++i) {
    for (int j = 0; j < n_lon; ++j) {
      m.faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  for (int j = 0; j < n_lon; ++j) m.faces.push_back({south, id(n_lat - 1, j + 1), id(n_lat - 1, j)});
  return m;
}

// Torus about the z axis.
inline Mesh torus_mesh(Vec3d c, double R, double r, int nu = 48, int nv = 24) {
  Mesh m;
  for (int i = 0; i < nu; ++i) {
    const double u = 2.0 * std::numbers::pi * i / nu;
    for (int j = 0; j < nv; ++j) {
      const double v = 2.0 * std::numbers::pi * j / nv;
      const double rho = R + r * std::cos(v);
      m.vertices.push_back(c + Vec3d{rho * std::cos(u), rho * std::sin(u), r * std::sin(v)});
    }
  }
  auto id = [&](int i, int j) { return (i % nu) * nv + (j % nv); };
  for (int i = 0; i < nu; ++i) {
    for (int j = 0; j < nv; ++j) {
      m.faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return m;
}

// Straight tube params from a to b with constant radius r.
inline Params straight_params(Vec3d a, Vec3d b, double r, int n_c = 6, int n_r = 4, int P = 10) {
  Params p;
  p.P = P;
  for (int i = 0; i < n_c; ++i) p.centerline_cp.push_back(a + (b - a) * (static_cast<double>(i) / (n_c - 1)));
  p.radius_cp.assign(static_cast<std::size_t>(n_r), r);
  p.adjustment_cp.assign(static_cast<std::size_t>(n_r), std::vector<double>(static_cast<std::size_t>(P), 0.0));
  return p;
}

// Random smooth tube inside [margin, n - margin]^3.
inline Params random_tube(std::mt19937_64& rng, int n, int P = 10) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double lo = 0.3 * n, hi = 0.7 * n;
  Params p;
  p.P = P;
  const Vec3d a{lo + (hi - lo) * u(rng), lo + (hi - lo) * u(rng), 0.2 * n};
  const Vec3d b{lo + (hi - lo) * u(rng), lo + (hi - lo) * u(rng), 0.8 * n};
  for (int i = 0; i < 6; ++i) {
    const double s = i / 5.0;
    Vec3d c = a + (b - a) * s;
    if (i > 0 && i < 5) c = c + Vec3d{0.08 * n * (u(rng) - 0.5), 0.08 * n * (u(rng) - 0.5), 0.0};
    p.centerline_cp.push_back(c);
  }
  for (int i = 0; i < 5; ++i) p.radius_cp.push_back(0.06 * n + 0.04 * n * u(rng));
  p.adjustment_cp.assign(5, std::vector<double>(static_cast<std::size_t>(P), 0.0));
  for (auto& row : p.adjustment_cp)
    for (auto& a : row) a = 0.3 * (u(rng) - 0.5);
  return p;
}

}  // namespace vessel::testing
