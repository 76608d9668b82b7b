#pragma once

#include <torch/torch.h>

#include <vector>

#include "aiparse/assign.hpp"
#include "aiparse/detection.hpp"

namespace aiparse {

/// Per-level outputs, each list indexed by level (P3 first).
struct DetectionOutputs {
  std::vector<torch::Tensor> class_logits;       // (N, 1, h, w)
  std::vector<torch::Tensor> centerness_logits;  // (N, 1, h, w)
  std::vector<torch::Tensor> regression;         // (N, 4, h, w), (l, t, r, b) in pixels, > 0
};

struct DetectHeadOptions {
  int channels = 64;
  int tower_convs = 2;
  double prior_prob = 0.01;
};

/// Head shared across P3..P7: a classification tower and a box tower, each
/// tower_convs x (conv3x3, GN, ReLU). Centerness is predicted from the box
/// tower. Regression = stride * exp(scale_level * raw).
struct DetectHeadImpl : torch::nn::Module {
  explicit DetectHeadImpl(const DetectHeadOptions& options);
  DetectionOutputs forward(const std::vector<torch::Tensor>& pyramid);

  torch::nn::Sequential cls_tower{nullptr};
  torch::nn::Sequential box_tower{nullptr};
  torch::nn::Conv2d cls_logits{nullptr};
  torch::nn::Conv2d centerness{nullptr};
  torch::nn::Conv2d bbox_pred{nullptr};
  torch::Tensor scales;
};
TORCH_MODULE(DetectHead);

/// Sigmoid focal loss summed over all elements.
torch::Tensor focal_loss_sum(const torch::Tensor& logits, const torch::Tensor& targets, double alpha,
                             double gamma);

/// IoU between boxes given as offsets from a shared location; (P, 4) each.
torch::Tensor offset_iou(const torch::Tensor& pred, const torch::Tensor& target);

/// Mean over rows of -ln(max(IoU, 1e-6)); 0 for no rows.
torch::Tensor iou_loss(const torch::Tensor& pred, const torch::Tensor& target);

/// Mean binary cross-entropy with logits; 0 for no rows.
torch::Tensor centerness_loss(const torch::Tensor& logits, const torch::Tensor& targets);

/// Assignment targets flattened in the same order as flatten_outputs.
struct FlatTargets {
  torch::Tensor labels;      // (M) float 0/1
  torch::Tensor offsets;     // (M, 4)
  torch::Tensor centerness;  // (M)
  torch::Tensor positive;    // (M) bool
};

/// Stacks per-image targets: image-major, then level, then row-major.
FlatTargets flatten_targets(const std::vector<AssignmentTargets>& targets, torch::ScalarType dtype);

struct FlatOutputs {
  torch::Tensor class_logits;       // (M)
  torch::Tensor centerness_logits;  // (M)
  torch::Tensor regression;         // (M, 4)
};

FlatOutputs flatten_outputs(const DetectionOutputs& outputs);

struct DetectionLoss {
  torch::Tensor cls, reg, center, total;
};

struct FocalParams {
  double alpha = 0.25;
  double gamma = 2.0;
};

/// L_det = L_cls + L_reg + L_center. L_cls is normalized by max(1, #pos).
DetectionLoss detection_loss(const DetectionOutputs& outputs, const std::vector<AssignmentTargets>& targets,
                             const FocalParams& focal = {});

struct DecodeParams {
  double score_threshold = 0.05;
  double nms_iou = 0.6;
  int max_detections = 50;
};

/// Decodes image `index` of a batch: score = sigmoid(cls) * sigmoid(ctr),
/// boxes by inverting the offsets around each location, then
/// postprocess_detections against the unpadded image size.
std::vector<Detection> decode_detections(const DetectionOutputs& outputs, int index, int image_width,
                                         int image_height, const DecodeParams& params);

}  // namespace aiparse
