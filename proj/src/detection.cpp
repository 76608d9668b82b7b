#include "aiparse/detection.hpp"

#include <algorithm>

namespace aiparse {

bool detection_before(const Detection& a, const Detection& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.box.x0 != b.box.x0) return a.box.x0 < b.box.x0;
  return a.box.y0 < b.box.y0;
}

std::vector<Detection> nms(std::vector<Detection> candidates, double iou_threshold) {
  std::stable_sort(candidates.begin(), candidates.end(), detection_before);
  std::vector<Detection> kept;
  for (const auto& c : candidates) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return box_iou(k.box, c.box) > iou_threshold;
    });
    if (!suppressed) kept.push_back(c);
  }
  return kept;
}

std::vector<Detection> postprocess_detections(std::vector<Detection> candidates, double score_threshold,
                                              double nms_iou, int max_detections, double image_width,
                                              double image_height) {
  std::vector<Detection> valid;
  for (auto& c : candidates) {
    if (!(c.score > score_threshold)) continue;
    c.box = clip_box(c.box, image_width, image_height);
    if (!c.box.valid()) continue;
    valid.push_back(c);
  }
  auto kept = nms(std::move(valid), nms_iou);
  if (static_cast<int>(kept.size()) > max_detections) kept.resize(static_cast<std::size_t>(max_detections));
  return kept;
}

}  // namespace aiparse
