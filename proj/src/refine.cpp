#include "aiparse/refine.hpp"

#include <cmath>
#include <stdexcept>

#include "aiparse/metrics.hpp"

namespace aiparse {

double compute_map_miou(const LabelRaster& pred_crop, const LabelRaster& gt_crop) {
  return instance_part_miou(pred_crop, gt_crop);
}

double refinement_loss(double score_pred, double miou_target, double lovasz,
                       const RefineWeights& weights) {
  const double diff = score_pred - miou_target;
  return weights.theta * lovasz + weights.gamma * diff * diff;
}

double fuse_instance_score(double det_score, double miou_score) {
  if (det_score < 0 || miou_score < 0) {
    throw std::invalid_argument("fuse_instance_score: scores must be non-negative");
  }
  return std::sqrt(det_score * miou_score);
}

}  // namespace aiparse
