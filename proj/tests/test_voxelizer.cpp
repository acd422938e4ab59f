#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace vessel;
using namespace vessel::testing;

TEST(Voxelizer, CubeSliceIsOneSquare) {
  // Each side face is two triangles, so the loop has 8 vertices.
  const auto si = slice_mesh(box_mesh({0, 0, 0}, {1, 1, 1}), Axis::Z, 0.5);
  EXPECT_EQ(si.points.size(), 8u);
  EXPECT_EQ(si.edges.size(), 8u);
  ASSERT_EQ(si.polygons.size(), 1u);
  EXPECT_EQ(si.polygons[0].size(), 8u);
  for (const auto& q : si.points) {
    EXPECT_TRUE(q.pos.u == 0.0 || q.pos.u == 1.0 || q.pos.v == 0.0 || q.pos.v == 1.0);
  }
}

TEST(Voxelizer, MissingPlaneIsEmpty) {
  const auto si = slice_mesh(box_mesh({0, 0, 0}, {1, 1, 1}), Axis::Z, 3.0);
  EXPECT_TRUE(si.points.empty());
  EXPECT_TRUE(si.polygons.empty());
}

TEST(Voxelizer, TorusGivesTwoLoops) {
  const auto si = slice_mesh(torus_mesh({16, 16, 16}, 8.0, 3.0), Axis::Y, 16.3);
  EXPECT_EQ(si.polygons.size(), 2u);
}

TEST(Voxelizer, CycleExtraction) {
  const auto sq = extract_polygons(4, {{{0, 1}}, {{1, 2}}, {{2, 3}}, {{3, 0}}});
  ASSERT_EQ(sq.size(), 1u);
  EXPECT_EQ(sq[0].size(), 4u);
  const auto two = extract_polygons(6, {{{0, 1}}, {{1, 2}}, {{2, 0}}, {{3, 4}}, {{4, 5}}, {{5, 3}}});
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0].size(), 3u);
  EXPECT_EQ(two[1].size(), 3u);
}

TEST(Voxelizer, SquareDistance) {
  // Square (2,2)-(6,6) in the xy plane; voxel (4,4) has center (4.5,4.5).
  const Mesh m = box_mesh({2, 2, 0.2}, {6, 6, 7.8});
  SoftVoxelizer vox(m, {8, 8, 8}, {.tau = 0.1, .margin = 3, .axis = Axis::Z});
  const auto d = vox.distance_grid();
  const auto occ = vox.occupancy_grid();
  EXPECT_NEAR(d(4, 4, 4), 1.5, 1e-12);
  EXPECT_EQ(occ(4, 4, 4), 1);
  EXPECT_NEAR(d(1, 4, 4), 0.5, 1e-12);
  EXPECT_NEAR(d(0, 4, 4), 1.5, 1e-12);
  EXPECT_EQ(occ(1, 4, 4), 0);
}

TEST(Voxelizer, SigmoidValues) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(30.0), 1.0, 1e-9);
  EXPECT_NEAR(sigmoid(-30.0), 0.0, 1e-9);
  EXPECT_GT(sigmoid(-800.0), -1e-300);
}

TEST(Voxelizer, OnSegmentIsHalf) {
  // Voxel centers at x = 2.5 lie on the face x = 2.5.
  const Mesh m = box_mesh({2.5, 1, 1}, {6, 6, 6});
  const auto g = soft_voxelize(m, {8, 8, 8}, {.axis = Axis::Z}).grid;
  EXPECT_NEAR(g(2, 3, 3), 0.5, 1e-6);
  EXPECT_NEAR(g(4, 3, 3), 1.0 / (1.0 + std::exp(-15.0)), 1e-9);
}

TEST(Voxelizer, DeepInteriorSaturates) {
  const Mesh m = box_mesh({1, 1, 1}, {15, 15, 15});
  const auto g = soft_voxelize(m, {16, 16, 16}, {.axis = Axis::X}).grid;
  // Distance 3 from the nearest side at tau 0.1.
  EXPECT_NEAR(g(3, 8, 8), 1.0, 1e-9);
}

TEST(Voxelizer, AxisCycle) {
  EXPECT_EQ(next_axis(Axis::X), Axis::Y);
  EXPECT_EQ(next_axis(Axis::Y), Axis::Z);
  EXPECT_EQ(next_axis(Axis::Z), Axis::X);
}

TEST(Voxelizer, DefaultMargin) {
  EXPECT_EQ(default_margin(0.1), 3);
  EXPECT_EQ(default_margin(0.2), 6);
  EXPECT_LT(std::exp(-default_margin(0.37) / 0.37), 1e-12 + 1e-15);
}

TEST(Voxelizer, MatchesOracleOnRandomTubes) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 3; ++trial) {
    const Mesh m = vessel_mesh(random_tube(rng, 24), 32);
    const MeshSdf sdf(m);
    for (Axis axis : {Axis::X, Axis::Y, Axis::Z}) {
      SoftVoxelizer vox(m, {24, 24, 24}, {.axis = axis});
      const auto occ = vox.occupancy_grid();
      const auto dist = vox.distance_grid();
      const auto& grid = vox.result().grid;
      for (std::size_t n : vox.computed_voxels()) {
        const int i = static_cast<int>(n % 24), j = static_cast<int>((n / 24) % 24), k = static_cast<int>(n / 576);
        const double s = sdf(voxel_center(i, j, k));
        if (std::abs(s) > 1e-3) EXPECT_EQ(occ[n] != 0, s > 0) << i << ' ' << j << ' ' << k;
        EXPECT_GE(dist[n], std::abs(s) - 1e-9);
      }
      const auto box = vox.result().bbox;
      for (int k = 0; k < 24; ++k)
        for (int j = 0; j < 24; ++j)
          for (int i = 0; i < 24; ++i)
            if (!box.contains(i, j, k)) EXPECT_EQ(grid(i, j, k), 0.0);
    }
  }
}

TEST(Voxelizer, SliceMaskRestrictsComputation) {
  const Mesh m = box_mesh({3, 3, 3}, {12, 12, 12});
  SliceMask mask;
  mask.axis = Axis::Z;
  mask.slices = {5, 9};
  const auto g = soft_voxelize(m, {16, 16, 16}, {.axis = Axis::X, .mask = mask}).grid;
  for (int k = 0; k < 16; ++k) {
    double s = 0.0;
    for (int j = 0; j < 16; ++j)
      for (int i = 0; i < 16; ++i) s += g(i, j, k);
    if (k == 5 || k == 9) {
      EXPECT_GT(s, 50.0);
    } else {
      EXPECT_EQ(s, 0.0);
    }
  }
}

TEST(Voxelizer, ThreadedEqualsSerial) {
  std::mt19937_64 rng(2);
  const Mesh m = vessel_mesh(random_tube(rng, 32), 32);
  const auto a = soft_voxelize(m, {32, 32, 32}, {.axis = Axis::Y, .threads = 1}).grid;
  const auto b = soft_voxelize(m, {32, 32, 32}, {.axis = Axis::Y, .threads = 3}).grid;
  EXPECT_EQ(a, b);
}

TEST(Voxelizer, HardenThreshold) {
  VoxelGrid<double> g({3, 1, 1}, std::vector<double>{0.2, 0.5, 0.9});
  const auto h = harden(g);
  EXPECT_EQ(h(0, 0, 0), 0);
  EXPECT_EQ(h(2, 0, 0), 1);
}

TEST(Voxelizer, BackwardMatchesFiniteDifference) {
  // Dice loss of one tube against a fixed target, moved vertex by vertex.
  std::mt19937_64 rng(8);
  const Params tube = random_tube(rng, 24);
  Params wide = tube;
  for (auto& r : wide.radius_cp) r *= 1.25;
  const Mesh m = vessel_mesh(tube, 12);
  const auto target = rasterize_exact(vessel_mesh(wide, 32), {24, 24, 24});
  const VoxelizeOptions opts{.axis = Axis::Z};
  SoftVoxelizer vox(m, {24, 24, 24}, opts);
  const auto grad = vox.backward(dice_loss_gradient(vox.result().grid, target));
  auto loss = [&](const Mesh& mm) { return dice_loss(soft_voxelize(mm, {24, 24, 24}, opts).grid, target); };
  const double h = 1e-5;
  int checked = 0, good = 0;
  for (std::size_t v = 0; v < m.vertices.size(); v += 7) {
    for (int d = 0; d < 3; ++d) {
      Mesh p = m, q = m;
      p.vertices[v][d] += h;
      q.vertices[v][d] -= h;
      const double fd = (loss(p) - loss(q)) / (2 * h);
      ++checked;
      good += std::abs(fd - grad[v][d]) <= 1e-4 || std::abs(fd - grad[v][d]) <= 1e-2 * std::abs(fd);
    }
  }
  EXPECT_GT(dice_loss(vox.result().grid, target), 0.05);
  EXPECT_GE(good, checked * 99 / 100);
}
