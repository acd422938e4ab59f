#include <gtest/gtest.h>

#include "support.hpp"

using namespace vessel;
using vessel::testing::straight_params;

TEST(Synth, StraightForegroundMatchesCylinder) {
  for (unsigned long long seed : {1ull, 2ull, 3ull}) {
    const auto c = make_case(CaseKind::Straight, {64, 64, 64}, seed);
    const double want = std::numbers::pi * 25.0 * 40.0;
    EXPECT_NEAR(static_cast<double>(count_foreground(c.segmentation)), want, 0.03 * want) << seed;
  }
}

TEST(Synth, SameSeedSameCase) {
  for (CaseKind k : {CaseKind::Straight, CaseKind::Helix, CaseKind::Elliptic}) {
    const auto a = make_case(k, {48, 48, 48}, 42);
    const auto b = make_case(k, {48, 48, 48}, 42);
    EXPECT_EQ(a.segmentation, b.segmentation);
    EXPECT_EQ(a.true_params, b.true_params);
    EXPECT_EQ(a.preliminary_centerline, b.preliminary_centerline);
    const auto c = make_case(k, {48, 48, 48}, 43);
    EXPECT_NE(a.true_params, c.true_params);
  }
}

TEST(Synth, AllKindsFitTheGrid) {
  for (CaseKind k : {CaseKind::Straight, CaseKind::Arc, CaseKind::Helix, CaseKind::VaryingRadius, CaseKind::Elliptic}) {
    for (unsigned long long seed : {0ull, 9ull}) {
      const auto c = make_case(k, {64, 64, 64}, seed);
      EXPECT_GT(count_foreground(c.segmentation), 1000u) << to_string(k);
      EXPECT_GE(c.preliminary_centerline.size(), 4u);
      EXPECT_EQ(c.preliminary_centerline.front(), c.endpoints[0]);
      EXPECT_EQ(c.preliminary_centerline.back(), c.endpoints[1]);
      EXPECT_EQ(parse_case_kind(to_string(k)), k);
    }
  }
  EXPECT_THROW(make_case(CaseKind::Helix, {24, 24, 24}, 0), ArgumentError);
  EXPECT_THROW(parse_case_kind("spiral"), ArgumentError);
}

TEST(Synth, EllipticCrossSectionIsElongated) {
  const auto c = make_case(CaseKind::Elliptic, {64, 64, 64}, 2);
  const auto cs = cross_sections(c.true_params, 64);
  const auto pts = cross_section_points(cs, c.true_params.P);
  const std::size_t mid = 32 * static_cast<std::size_t>(c.true_params.P);
  const double r0 = distance(pts[mid], cs.centers[32]);
  const double r90 = distance(pts[mid + static_cast<std::size_t>(c.true_params.P / 4)], cs.centers[32]);
  EXPECT_NEAR(r0 / r90, 1.35 / 0.65, 1e-9);
}

TEST(Synth, CenterlineOfAxisAlignedCylinder) {
  const auto p = straight_params({12.3, 13.7, 3}, {12.3, 13.7, 28}, 4.0, 6, 4, 32);
  const auto seg = rasterize_exact(vessel_mesh(p, 64), {24, 24, 32});
  const auto cl = extract_preliminary_centerline(seg, Axis::Z);
  EXPECT_GT(cl.size(), 20u);
  for (const auto& q : cl) {
    EXPECT_LT(std::hypot(q.x - 12.3, q.y - 13.7), 0.5);
  }
}

TEST(Synth, CenterlineOfTiltedTube) {
  // Tube leaves the grid at both ends so every slice is a full ellipse.
  const double tilt = 20.0 * std::numbers::pi / 180.0;
  const Vec3d dir{std::sin(tilt), 0, std::cos(tilt)};
  const Vec3d mid{20, 20, 20};
  const auto p = straight_params(mid - dir * 30.0, mid + dir * 30.0, 4.0, 6, 4, 32);
  const auto seg = rasterize_exact(vessel_mesh(p, 64), {40, 40, 40}, {.allow_partial = true});
  const auto cl = extract_preliminary_centerline(seg, Axis::Z);
  EXPECT_EQ(cl.size(), 40u);
  for (const auto& q : cl) {
    const Vec3d axis_point = mid + dir * ((q.z - mid.z) / dir.z);
    EXPECT_LT(distance(q, axis_point), 1.0);
  }
}

TEST(Synth, SingleSliceCenterline) {
  BinaryGrid g({8, 8, 8}, 0);
  g(3, 3, 5) = 1;
  g(4, 3, 5) = 1;
  const auto cl = extract_preliminary_centerline(g, Axis::Z);
  ASSERT_EQ(cl.size(), 1u);
  EXPECT_EQ(cl[0], (Vec3d{4.0, 3.5, 5.5}));
  EXPECT_THROW(extract_preliminary_centerline(BinaryGrid({4, 4, 4}, 0)), InputError);
}

TEST(Synth, SparsifyKeepAll) {
  const auto c = make_case(CaseKind::Straight, {32, 32, 32}, 1);
  const auto m = sparsify_slices(c.segmentation, 1.0);
  EXPECT_EQ(m.slices.size(), 32u);
  EXPECT_THROW(sparsify_slices(c.segmentation, 0.0), ArgumentError);
  EXPECT_THROW(sparsify_slices(c.segmentation, 1.5), ArgumentError);
}

TEST(Synth, SparsifyFivePercent) {
  BinaryGrid g({6, 6, 120}, 0);
  for (int k = 10; k < 110; ++k) g(2, 3, k) = 1;
  const auto m = sparsify_slices(g, 0.05);
  EXPECT_GE(m.slices.size(), 5u);
  EXPECT_LE(m.slices.size(), 7u);
  EXPECT_EQ(m.slices.front(), 10);
  EXPECT_EQ(m.slices.back(), 109);
  for (std::size_t i = 1; i + 1 < m.slices.size(); ++i) EXPECT_EQ(m.slices[i] - m.slices[i - 1], 20);
  EXPECT_EQ(m.keep_fraction, 0.05);
  EXPECT_EQ(m.axis, Axis::Z);
}
