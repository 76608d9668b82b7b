#pragma once

#include <vector>

#include "aiparse/geometry.hpp"

namespace aiparse {

struct Detection {
  Box box;
  double score = 0;
  int level = kMinLevel;
};

/// Orders by descending score, then ascending x0, then ascending y0.
bool detection_before(const Detection& a, const Detection& b);

/// Greedy non-maximum suppression in detection_before order; a candidate
/// is dropped when its IoU with a kept box exceeds `iou_threshold`.
std::vector<Detection> nms(std::vector<Detection> candidates, double iou_threshold);

/// Filters by score > threshold, clips to the image, runs NMS and keeps the
/// `max_detections` best survivors.
std::vector<Detection> postprocess_detections(std::vector<Detection> candidates, double score_threshold,
                                              double nms_iou, int max_detections, double image_width,
                                              double image_height);

}  // namespace aiparse
