#include "aiparse/assign.hpp"

#include <algorithm>
#include <stdexcept>

namespace aiparse {

LevelRanges base_level_ranges() {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return {{{0, 64}, {64, 128}, {128, 256}, {256, 512}, {512, inf}}};
}

LevelRanges scaled_level_ranges(double scale) {
  if (!(scale > 0)) throw std::invalid_argument("scaled_level_ranges: scale must be positive");
  LevelRanges ranges = base_level_ranges();
  for (auto& r : ranges) {
    r.lo *= scale;
    r.hi *= scale;
  }
  return ranges;
}

std::vector<LevelShape> pyramid_shapes(int image_height, int image_width) {
  constexpr int kAlign = 1 << kMaxLevel;
  const int h = (image_height + kAlign - 1) / kAlign * kAlign;
  const int w = (image_width + kAlign - 1) / kAlign * kAlign;
  std::vector<LevelShape> shapes;
  for (int level = kMinLevel; level <= kMaxLevel; ++level) {
    shapes.push_back({level, h >> level, w >> level});
  }
  return shapes;
}

std::size_t LevelTargets::num_positive() const {
  return static_cast<std::size_t>(std::count(label.begin(), label.end(), 1));
}

std::size_t AssignmentTargets::num_positive() const {
  std::size_t n = 0;
  for (const auto& l : levels) n += l.num_positive();
  return n;
}

AssignmentTargets assign_targets(const std::vector<LevelShape>& shapes,
                                 const std::vector<Box>& gt_boxes, const LevelRanges& ranges) {
  AssignmentTargets out;
  out.levels.reserve(shapes.size());
  for (const auto& shape : shapes) {
    const LevelRange range = ranges.at(static_cast<std::size_t>(shape.level - kMinLevel));
    const std::size_t n = static_cast<std::size_t>(shape.height) * shape.width;
    LevelTargets t;
    t.shape = shape;
    t.label.assign(n, 0);
    t.offsets.assign(n, {});
    t.centerness.assign(n, 0.0);
    t.matched.assign(n, -1);

    const int stride = level_stride(shape.level);
    for (std::size_t b = 0; b < gt_boxes.size(); ++b) {
      const Box& box = gt_boxes[b];
      // Only cells whose centre can fall inside the box.
      const int col_lo = std::max(0, static_cast<int>(box.x0 / stride - 0.5));
      const int col_hi = std::min(shape.width - 1, static_cast<int>(box.x1 / stride));
      const int row_lo = std::max(0, static_cast<int>(box.y0 / stride - 0.5));
      const int row_hi = std::min(shape.height - 1, static_cast<int>(box.y1 / stride));
      for (int row = row_lo; row <= row_hi; ++row) {
        for (int col = col_lo; col <= col_hi; ++col) {
          const Location loc = cell_location(shape.level, row, col);
          if (!(loc.x > box.x0 && loc.x < box.x1 && loc.y > box.y0 && loc.y < box.y1)) continue;
          const OffsetVector off = compute_offsets(loc, box);
          const double m = off.max();
          if (!(m > range.lo && m <= range.hi)) continue;
          const std::size_t idx = static_cast<std::size_t>(row) * shape.width + col;
          const int prev = t.matched[idx];
          if (prev >= 0 && gt_boxes[static_cast<std::size_t>(prev)].area() <= box.area()) continue;
          t.matched[idx] = static_cast<int>(b);
          t.label[idx] = 1;
          t.offsets[idx] = off;
          t.centerness[idx] = centerness(off);
        }
      }
    }
    out.levels.push_back(std::move(t));
  }
  return out;
}

}  // namespace aiparse
