#pragma once

#include <optional>
#include <vector>

#include "aiparse/metrics.hpp"
#include "aiparse/model.hpp"

namespace aiparse {

/// Pastes instance rasters in ascending score order so the highest score
/// wins on overlaps. Order-independent for distinct scores.
LabelRaster paste_global(const std::vector<InstanceRecord>& instances, int height, int width);

/// Full-image label raster of one RoI: class probabilities (K, R, R) are
/// bilinearly resampled at the centres of the pixels inside `box`, then
/// argmax-ed.
LabelRaster paste_roi(const torch::Tensor& probs, const Box& box, int height, int width);

/// Detect, parse every box, re-score, resize back and paste. The fused score
/// is sqrt(det * miou) when use_miou_score (default: the model config) is
/// on, otherwise the detection score. Instances are sorted by descending
/// score.
ImagePrediction predict(AIParsing& model, const RgbImage& image,
                        std::optional<bool> use_miou_score = std::nullopt);

std::vector<ImagePrediction> predict_all(AIParsing& model, const std::vector<Scene>& scenes,
                                         std::optional<bool> use_miou_score = std::nullopt);

}  // namespace aiparse
