#pragma once

#include <torch/torch.h>

#include "aiparse/refine.hpp"

namespace aiparse {

/// Gradient of the Lovász extension of the Jaccard loss for ground truth
/// sorted by descending error; `gt_sorted` is 0/1.
torch::Tensor lovasz_grad(const torch::Tensor& gt_sorted);

/// Lovász-softmax over one crop: `probs` is (K, P) class probabilities per
/// pixel, `labels` (P) int64. Classes present in labels or in the argmax of
/// probs are averaged; 0 when none are present.
torch::Tensor lovasz_softmax_flat(const torch::Tensor& probs, const torch::Tensor& labels);

/// Mean over RoIs of lovasz_softmax_flat(softmax(logits)); logits
/// (R, K, S, S), labels (R, S, S) int64.
torch::Tensor lovasz_miou_loss(const torch::Tensor& logits, const torch::Tensor& labels);

/// Re-scoring subnetwork: two stride-2 3x3 convolutions and three fully
/// connected layers on (avg-pooled parsing logits ++ RoI feature), sigmoid
/// output. Parsing logits are detached by the caller contract.
struct MiouScoreNetImpl : torch::nn::Module {
  MiouScoreNetImpl(int num_classes, int channels, int roi_size, int hidden = 256);
  /// parsing_logits (R, K, 2S, 2S), roi_features (R, C, S, S) -> (R).
  torch::Tensor forward(const torch::Tensor& parsing_logits, const torch::Tensor& roi_features);

  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
  torch::nn::Linear fc1{nullptr}, fc2{nullptr}, fc3{nullptr};
  int roi_size;
};
TORCH_MODULE(MiouScoreNet);

/// compute_map_miou of argmax(logits) against labels per RoI; (R) doubles.
torch::Tensor map_miou_targets(const torch::Tensor& logits, const torch::Tensor& labels);

}  // namespace aiparse
