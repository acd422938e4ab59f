#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace vessel;
using namespace vessel::testing;

TEST(Sdf, AboveCentroid) {
  const Vec3d a{0, 0, 0}, b{3, 0, 0}, c{0, 3, 0};
  const Vec3d g = (a + b + c) / 3.0;
  EXPECT_NEAR(point_triangle_distance(g + Vec3d{0, 0, 2.5}, a, b, c), 2.5, 1e-12);
  EXPECT_NEAR(point_triangle_distance(g - Vec3d{0, 0, 0.75}, a, b, c), 0.75, 1e-12);
}

TEST(Sdf, AtVertex) {
  const Vec3d a{1, 2, 3}, b{4, 2, 3}, c{1, 5, 7};
  EXPECT_EQ(point_triangle_distance(a, a, b, c), 0.0);
  EXPECT_EQ(point_triangle_distance(c, a, b, c), 0.0);
}

TEST(Sdf, DenseSamplingOracle) {
  // Barycentric lattice including edges and vertices; the distance is
  // stationary at the minimizer, so lattice error is second order.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  constexpr int n = 1500;
  for (int trial = 0; trial < 12; ++trial) {
    const Vec3d a{u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng)}, c{u(rng), u(rng), u(rng)};
    const Vec3d p{2 * u(rng), 2 * u(rng), 2 * u(rng)};
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; i + j <= n; ++j) {
        best = std::min(best, distance(p, a + (b - a) * (double(i) / n) + (c - a) * (double(j) / n)));
      }
    }
    const double d = point_triangle_distance(p, a, b, c);
    EXPECT_LE(d, best + 1e-12);
    EXPECT_NEAR(d, best, 1e-4);
  }
}

TEST(Sdf, BoxSigns) {
  const MeshSdf sdf(box_mesh({0, 0, 0}, {10, 10, 10}));
  EXPECT_NEAR(sdf({5, 5, 5}), 5.0, 1e-12);
  EXPECT_NEAR(sdf({15, 5, 5}), -5.0, 1e-12);
  EXPECT_NEAR(sdf({1, 5, 5}), 1.0, 1e-12);
  EXPECT_NEAR(sdf({11, 11, 5}), -std::sqrt(2.0), 1e-12);
}

TEST(Sdf, TubeInteriorDistance) {
  // Axis along x, P = 64: inscribed polygon error r(1 - cos(pi/64)) ~ 6e-3.
  const auto m = vessel_mesh(straight_params({2, 20, 20}, {42, 20, 20}, 5.0, 6, 4, 64), 64);
  const MeshSdf sdf(m);
  for (double ang : {0.0, 0.7, 2.1, 4.0}) {
    const Vec3d p{22, 20 + 3 * std::cos(ang), 20 + 3 * std::sin(ang)};
    EXPECT_NEAR(sdf(p), 2.0, 0.05);
  }
}

TEST(Sdf, BvhMatchesBruteForce) {
  std::mt19937_64 rng(4);
  const auto m = vessel_mesh(random_tube(rng, 32), 32);
  const MeshSdf fast(m), slow(m, {.brute_force = true});
  std::uniform_real_distribution<double> u(0.0, 32.0);
  for (int i = 0; i < 500; ++i) {
    const Vec3d p{u(rng), u(rng), u(rng)};
    EXPECT_NEAR(fast(p), slow(p), 1e-12);
  }
}

TEST(Sdf, RejectsOpenMesh) {
  auto m = box_mesh({0, 0, 0}, {1, 1, 1});
  m.faces.pop_back();
  EXPECT_THROW(MeshSdf{m}, TopologyError);
}

TEST(Sdf, RasterizeBox) {
  const auto g = rasterize_exact(box_mesh({2, 2, 2}, {6, 6, 6}), {8, 8, 8});
  EXPECT_EQ(count_foreground(g), 64u);
  for (int k = 0; k < 8; ++k)
    for (int j = 0; j < 8; ++j)
      for (int i = 0; i < 8; ++i) {
        const bool in = i >= 2 && i < 6 && j >= 2 && j < 6 && k >= 2 && k < 6;
        EXPECT_EQ(g(i, j, k) != 0, in);
      }
}

TEST(Sdf, RasterizeOutsideGridRejected) {
  EXPECT_THROW(rasterize_exact(box_mesh({20, 20, 20}, {30, 30, 30}), {8, 8, 8}), BoundsError);
  const auto partial = rasterize_exact(box_mesh({4, 4, 4}, {30, 30, 30}), {8, 8, 8}, {.allow_partial = true});
  EXPECT_EQ(count_foreground(partial), 64u);
}

TEST(Sdf, SphereVolume) {
  const auto g = rasterize_exact(sphere_mesh({16, 16, 16}, 10.0), {32, 32, 32});
  const double want = 4.0 / 3.0 * std::numbers::pi * 1000.0;
  EXPECT_NEAR(static_cast<double>(count_foreground(g)), want, 0.02 * want);
}

TEST(Sdf, RayRasterMatchesPointwise) {
  std::mt19937_64 rng(9);
  const auto m = vessel_mesh(random_tube(rng, 24), 24);
  const auto a = rasterize_exact(m, {24, 24, 24});
  const auto b = rasterize_exact(m, {24, 24, 24}, {.brute_force = true});
  EXPECT_EQ(a, b);
}
