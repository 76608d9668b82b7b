#pragma once

#include <array>

namespace aiparse {

/// Axis-aligned box in continuous image coordinates. A pixel (col,row)
/// covers [col,col+1) x [row,row+1).
struct Box {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return valid() ? width() * height() : 0.0; }
  bool valid() const;

  bool operator==(const Box&) const = default;
};

/// Distances from a location to the left, top, right and bottom box sides.
struct OffsetVector {
  double l = 0, t = 0, r = 0, b = 0;

  double max() const;
  double min() const;
  bool operator==(const OffsetVector&) const = default;
};

/// Image-plane back-projection of one feature-grid cell.
struct Location {
  double x = 0, y = 0;
  int level = 3;
};

inline constexpr int kMinLevel = 3;
inline constexpr int kMaxLevel = 7;
inline constexpr int kNumLevels = kMaxLevel - kMinLevel + 1;

/// stride(level) = 2^level.
int level_stride(int level);
inline constexpr std::array<int, kNumLevels> kLevelStrides = {8, 16, 32, 64, 128};

/// Cell (row, col) of a level grid maps to (s*(col+0.5), s*(row+0.5)).
Location cell_location(int level, int row, int col);

/// Offsets of `loc` to the sides of `box`. Throws std::invalid_argument if
/// the location lies outside the box (boundary is inside).
OffsetVector compute_offsets(const Location& loc, const Box& box);

/// True iff loc lies in the closed box.
bool contains(const Box& box, double x, double y);

/// sqrt(min(l,r)/max(l,r) * min(t,b)/max(t,b)); 0 for degenerate offsets.
double centerness(const OffsetVector& off);

double box_iou(const Box& a, const Box& b);

/// Inverse of compute_offsets.
Box decode_offsets(const Location& loc, const OffsetVector& off);

Box clip_box(const Box& box, double width, double height);

}  // namespace aiparse
