#pragma once

#include "aiparse/raster.hpp"

namespace aiparse {

/// Loss weights of the refinement head: theta on the mIoU loss, gamma on the
/// score regression.
struct RefineWeights {
  double theta = 2.0;
  double gamma = 1.0;
};

/// Mean IoU over part classes present in either crop; 1 when both crops are
/// all background. Regression target of the re-scoring net.
double compute_map_miou(const LabelRaster& pred_crop, const LabelRaster& gt_crop);

/// theta * lovasz + gamma * (score_pred - miou_target)^2.
double refinement_loss(double score_pred, double miou_target, double lovasz,
                       const RefineWeights& weights = {});

/// Geometric mean of detection confidence and predicted parsing mIoU.
double fuse_instance_score(double det_score, double miou_score);

}  // namespace aiparse
