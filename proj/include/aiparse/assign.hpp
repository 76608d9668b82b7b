#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "aiparse/geometry.hpp"

namespace aiparse {

/// Regression range (lo, hi] on max(l,t,r,b) for one pyramid level.
struct LevelRange {
  double lo = 0;
  double hi = std::numeric_limits<double>::infinity();
};

using LevelRanges = std::array<LevelRange, kNumLevels>;

/// FCOS ranges at the 800-pixel scale: (0,64], (64,128], (128,256],
/// (256,512], (512,inf).
LevelRanges base_level_ranges();

/// Base ranges multiplied by `scale` (image_size / 800 for desk images).
LevelRanges scaled_level_ranges(double scale);

/// Shape of one pyramid level's grid.
struct LevelShape {
  int level = kMinLevel;
  int height = 0;
  int width = 0;
};

/// Level shapes for an image padded to a multiple of 128.
std::vector<LevelShape> pyramid_shapes(int image_height, int image_width);

struct LevelTargets {
  LevelShape shape;
  /// 1 = person, 0 = background; row-major over the level grid.
  std::vector<std::uint8_t> label;
  std::vector<OffsetVector> offsets;
  std::vector<double> centerness;
  /// Index into gt_boxes, -1 for background.
  std::vector<int> matched;

  std::size_t num_positive() const;
};

struct AssignmentTargets {
  std::vector<LevelTargets> levels;

  std::size_t num_positive() const;
};

/// A location is positive iff it lies strictly inside a box whose max offset
/// falls in the level's range; ties go to the minimum-area box (lowest index
/// on equal area).
AssignmentTargets assign_targets(const std::vector<LevelShape>& shapes,
                                 const std::vector<Box>& gt_boxes, const LevelRanges& ranges);

}  // namespace aiparse
