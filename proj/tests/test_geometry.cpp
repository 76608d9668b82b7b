#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "aiparse/detection.hpp"
#include "aiparse/geometry.hpp"

using namespace aiparse;

TEST(ComputeOffsets, SymmetricCenter) {
  const auto off = compute_offsets({8, 8, 3}, {0, 0, 16, 16});
  EXPECT_EQ(off, (OffsetVector{8, 8, 8, 8}));
}

TEST(ComputeOffsets, HandSubstitution) {
  const auto off = compute_offsets({10, 10, 3}, {4, 4, 20, 24});
  EXPECT_EQ(off, (OffsetVector{6, 6, 10, 14}));
}

TEST(ComputeOffsets, CornerBoundary) {
  const auto off = compute_offsets({4, 4, 3}, {4, 4, 20, 24});
  EXPECT_EQ(off, (OffsetVector{0, 0, 16, 20}));
}

TEST(ComputeOffsets, RejectsOutside) {
  EXPECT_THROW(compute_offsets({3.9, 10, 3}, {4, 4, 20, 24}), std::invalid_argument);
  EXPECT_THROW(compute_offsets({10, 24.5, 3}, {4, 4, 20, 24}), std::invalid_argument);
}

TEST(ComputeOffsets, SumsToBoxDimensions) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 500; ++i) {
    const Box box{u(rng) * 50, u(rng) * 50, 60 + u(rng) * 50, 60 + u(rng) * 50};
    const Location loc{box.x0 + u(rng) * box.width(), box.y0 + u(rng) * box.height(), 3};
    const auto off = compute_offsets(loc, box);
    EXPECT_NEAR(off.l + off.r, box.width(), 1e-12);
    EXPECT_NEAR(off.t + off.b, box.height(), 1e-12);
    EXPECT_GE(off.min(), 0.0);
  }
}

TEST(Centerness, Examples) {
  EXPECT_DOUBLE_EQ(centerness({8, 8, 8, 8}), 1.0);
  // l=2, r=8 and t=2, b=8: sqrt((2/8) * (2/8)).
  EXPECT_DOUBLE_EQ(centerness({.l = 2, .t = 2, .r = 8, .b = 8}), 0.25);
  // Same numbers in (l,t,r,b) order are a centred location.
  EXPECT_DOUBLE_EQ(centerness({2, 8, 2, 8}), 1.0);
  EXPECT_DOUBLE_EQ(centerness({0, 8, 4, 4}), 0.0);
  EXPECT_DOUBLE_EQ(centerness({0, 0, 0, 0}), 0.0);
}

TEST(Centerness, ScaleInvariantAndBounded) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.01, 40);
  for (int i = 0; i < 500; ++i) {
    const OffsetVector off{u(rng), u(rng), u(rng), u(rng)};
    const double c = centerness(off);
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, 1.0);
    const double s = u(rng);
    EXPECT_NEAR(centerness({off.l * s, off.t * s, off.r * s, off.b * s}), c, 1e-12);
  }
  EXPECT_DOUBLE_EQ(centerness({3, 5, 3, 5}), 1.0);
  EXPECT_LT(centerness({3, 5, 3.001, 5}), 1.0);
}

TEST(BoxIou, Examples) {
  const Box a{0, 0, 10, 10};
  EXPECT_DOUBLE_EQ(box_iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(box_iou(a, {20, 20, 30, 30}), 0.0);
  EXPECT_DOUBLE_EQ(box_iou(a, {5, 0, 15, 10}), 1.0 / 3.0);
  // Touching edges share no area.
  EXPECT_DOUBLE_EQ(box_iou(a, {10, 0, 20, 10}), 0.0);
}

TEST(BoxIou, SymmetricAndOneOnlyForIdentical) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 50);
  for (int i = 0; i < 500; ++i) {
    const Box a{u(rng), u(rng), 60 + u(rng), 60 + u(rng)};
    const Box b{u(rng), u(rng), 60 + u(rng), 60 + u(rng)};
    EXPECT_DOUBLE_EQ(box_iou(a, b), box_iou(b, a));
    if (!(a == b)) EXPECT_LT(box_iou(a, b), 1.0);
  }
}

TEST(Geometry, CellLocationAndStrides) {
  EXPECT_EQ(level_stride(3), 8);
  EXPECT_EQ(level_stride(7), 128);
  EXPECT_THROW(level_stride(2), std::out_of_range);
  const auto loc = cell_location(5, 0, 0);
  EXPECT_DOUBLE_EQ(loc.x, 16.0);
  EXPECT_DOUBLE_EQ(loc.y, 16.0);
  const auto loc2 = cell_location(3, 2, 1);
  EXPECT_DOUBLE_EQ(loc2.x, 12.0);
  EXPECT_DOUBLE_EQ(loc2.y, 20.0);
}

TEST(Geometry, DecodeInvertsEncode) {
  const Box box{3.5, 7.25, 40, 61};
  const Location loc{20, 30, 4};
  EXPECT_EQ(decode_offsets(loc, compute_offsets(loc, box)), box);
}

TEST(Nms, SuppressesOverlapsAndKeepsOrder) {
  std::vector<Detection> dets = {
      {{0, 0, 10, 10}, 0.9, 3}, {{1, 0, 11, 10}, 0.8, 3}, {{50, 50, 60, 60}, 0.7, 3}};
  const auto kept = nms(dets, 0.6);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_DOUBLE_EQ(kept[0].score, 0.9);
  EXPECT_DOUBLE_EQ(kept[1].score, 0.7);
}

TEST(Nms, EqualScoreTieBreakIsOrderInvariant) {
  std::vector<Detection> dets = {{{2, 0, 12, 10}, 0.5, 3}, {{0, 0, 10, 10}, 0.5, 3}, {{0, 1, 10, 11}, 0.5, 3}};
  std::vector<Detection> reversed(dets.rbegin(), dets.rend());
  const auto a = nms(dets, 0.6);
  const auto b = nms(reversed, 0.6);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].box, b[i].box);
  EXPECT_EQ(a[0].box, (Box{0, 0, 10, 10}));
}

TEST(Postprocess, CapsAtMaxDetections) {
  std::vector<Detection> dets;
  for (int i = 0; i < 60; ++i) {
    const double x = (i % 10) * 12.0, y = (i / 10) * 12.0;
    dets.push_back({{x, y, x + 10, y + 10}, 0.9, 3});
  }
  const auto kept = postprocess_detections(dets, 0.05, 0.6, 50, 200, 200);
  EXPECT_EQ(kept.size(), 50u);
}

TEST(Postprocess, ThresholdAndClip) {
  std::vector<Detection> dets = {{{-5, -5, 20, 20}, 0.5, 3}, {{30, 30, 40, 40}, 0.05, 3}};
  const auto kept = postprocess_detections(dets, 0.05, 0.6, 50, 16, 16);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].box, (Box{0, 0, 16, 16}));
}
