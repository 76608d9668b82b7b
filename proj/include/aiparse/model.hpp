#pragma once

#include <torch/torch.h>

#include <vector>

#include "aiparse/backbone.hpp"
#include "aiparse/config.hpp"
#include "aiparse/detect_head.hpp"
#include "aiparse/parse_head.hpp"
#include "aiparse/refine_head.hpp"
#include "aiparse/synth.hpp"

namespace aiparse {

/// Backbone + FPN + detection head + edge-guided parsing head + re-scoring
/// net, built from one Config.
struct AIParsingImpl : torch::nn::Module {
  explicit AIParsingImpl(const Config& cfg);

  /// P3..P7 for a batch padded to a multiple of 128.
  std::vector<torch::Tensor> pyramid(const torch::Tensor& images);

  Config cfg;
  Backbone backbone{nullptr};
  Fpn fpn{nullptr};
  DetectHead detect{nullptr};
  ParseHead parse{nullptr};
  MiouScoreNet score{nullptr};
};
TORCH_MODULE(AIParsing);

/// (3, H, W) float tensor, each channel mapped by (v/255 - 0.5) / 0.25.
torch::Tensor image_to_tensor(const RgbImage& image);

/// (H, W) int64 tensor.
torch::Tensor labels_to_tensor(const LabelRaster& raster);

/// Stacks image_to_tensor over a batch and pads to a multiple of 128.
torch::Tensor batch_images(const std::vector<const RgbImage*>& images);

DecodeParams decode_params(const Config& cfg);

}  // namespace aiparse
