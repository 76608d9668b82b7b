#include "aiparse/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace aiparse {

bool Box::valid() const {
  return std::isfinite(x0) && std::isfinite(y0) && std::isfinite(x1) && std::isfinite(y1) &&
         x0 < x1 && y0 < y1;
}

double OffsetVector::max() const { return std::max({l, t, r, b}); }
double OffsetVector::min() const { return std::min({l, t, r, b}); }

int level_stride(int level) {
  if (level < kMinLevel || level > kMaxLevel) {
    throw std::out_of_range("level_stride: level " + std::to_string(level) + " outside [3,7]");
  }
  return 1 << level;
}

Location cell_location(int level, int row, int col) {
  const double s = level_stride(level);
  return {s * (col + 0.5), s * (row + 0.5), level};
}

bool contains(const Box& box, double x, double y) {
  return x >= box.x0 && x <= box.x1 && y >= box.y0 && y <= box.y1;
}

OffsetVector compute_offsets(const Location& loc, const Box& box) {
  if (!contains(box, loc.x, loc.y)) {
    std::ostringstream msg;
    msg << "compute_offsets: location (" << loc.x << "," << loc.y << ") outside box (" << box.x0
        << "," << box.y0 << "," << box.x1 << "," << box.y1 << ")";
    throw std::invalid_argument(msg.str());
  }
  return {loc.x - box.x0, loc.y - box.y0, box.x1 - loc.x, box.y1 - loc.y};
}

double centerness(const OffsetVector& off) {
  const double lr_max = std::max(off.l, off.r);
  const double tb_max = std::max(off.t, off.b);
  if (lr_max <= 0 || tb_max <= 0) return 0.0;
  const double ratio = (std::min(off.l, off.r) / lr_max) * (std::min(off.t, off.b) / tb_max);
  return std::sqrt(std::max(ratio, 0.0));
}

double box_iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double ih = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

Box decode_offsets(const Location& loc, const OffsetVector& off) {
  return {loc.x - off.l, loc.y - off.t, loc.x + off.r, loc.y + off.b};
}

Box clip_box(const Box& box, double width, double height) {
  return {std::clamp(box.x0, 0.0, width), std::clamp(box.y0, 0.0, height),
          std::clamp(box.x1, 0.0, width), std::clamp(box.y1, 0.0, height)};
}

}  // namespace aiparse
