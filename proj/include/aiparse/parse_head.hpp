#pragma once

#include <torch/torch.h>

#include <vector>

#include "aiparse/config.hpp"
#include "aiparse/geometry.hpp"
#include "aiparse/raster.hpp"

namespace aiparse {

/// One gather-excite unit over a square extent: average-pool with kernel =
/// stride = extent (ceil mode), depth-wise 3x3 transform, nearest upsample,
/// sigmoid gate. Returns the gate pre-activation at input resolution.
struct GatherExciteImpl : torch::nn::Module {
  GatherExciteImpl(int channels, int extent);
  torch::Tensor forward(const torch::Tensor& x);

  int extent;
  torch::nn::Conv2d transform{nullptr};
};
TORCH_MODULE(GatherExcite);

/// Global gather-excite unit: five serial depth-wise stride-2 convolutions,
/// then a global average to one descriptor per channel.
struct GlobalGatherExciteImpl : torch::nn::Module {
  explicit GlobalGatherExciteImpl(int channels, int depthwise_layers = 5);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Sequential gather{nullptr};
  torch::nn::Conv2d transform{nullptr};
};
TORCH_MODULE(GlobalGatherExcite);

/// 3x3 conv branch plus x * sigmoid(gate_e) for e in {4, 8, 16, H}, summed.
struct PgecImpl : torch::nn::Module {
  explicit PgecImpl(int channels, std::vector<int> extents = {4, 8, 16});
  torch::Tensor forward(const torch::Tensor& x);

  /// Pre-activations of every gate, local units first then the global one.
  std::vector<torch::Tensor> gates(const torch::Tensor& x);

  torch::nn::Conv2d conv{nullptr};
  torch::nn::ModuleList local;
  GlobalGatherExcite global{nullptr};
};
TORCH_MODULE(Pgec);

/// Pyramid pooling stub: bins {1, 2, 4}, 1x1 reduce, bilinear upsample,
/// concatenate with the input, 1x1 fuse.
struct PspImpl : torch::nn::Module {
  explicit PspImpl(int channels);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::ModuleList reduce;
  torch::nn::Conv2d fuse{nullptr};
};
TORCH_MODULE(Psp);

/// Atrous pyramid stub: 1x1, 3x3 at rates 2 and 4, image pooling; 1x1 fuse.
struct AsppImpl : torch::nn::Module {
  explicit AsppImpl(int channels);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::ModuleList branches;
  torch::nn::Conv2d pool_proj{nullptr};
  torch::nn::Conv2d fuse{nullptr};
};
TORCH_MODULE(Aspp);

/// Embedded-Gaussian non-local block with GroupNorm on the projection:
/// out = x + GN(W * softmax(theta(x)^T phi(x)) g(x)). The GN affine weight
/// starts at zero so the block is the identity at initialization.
struct NonLocalImpl : torch::nn::Module {
  explicit NonLocalImpl(int channels);
  torch::Tensor forward(const torch::Tensor& x);

  /// Row-stochastic attention of shape (N, HW, HW).
  torch::Tensor attention(const torch::Tensor& x);

  torch::nn::Conv2d theta{nullptr}, phi{nullptr}, g{nullptr}, proj{nullptr};
  torch::nn::GroupNorm gn{nullptr};
};
TORCH_MODULE(NonLocal);

struct RoiPrediction {
  torch::Tensor parsing_logits;  // (R, K, 2S, 2S)
  torch::Tensor edge_logits;     // (R, 1, 2S, 2S), undefined when the edge branch is off
};

/// Four shared 3x3 convs (GN after the last when enabled), then sibling
/// parsing and edge branches, each a 2x transposed conv and a 1x1 classifier.
struct PredictionHeadImpl : torch::nn::Module {
  PredictionHeadImpl(int channels, int num_classes, bool use_gn, bool use_edge_branch);
  RoiPrediction forward(const torch::Tensor& x);

  torch::nn::ModuleList convs;
  torch::nn::GroupNorm gn{nullptr};
  torch::nn::ConvTranspose2d parsing_up{nullptr}, edge_up{nullptr};
  torch::nn::Conv2d parsing_out{nullptr}, edge_out{nullptr};
  bool use_gn;
  bool use_edge_branch;
};
TORCH_MODULE(PredictionHead);

struct ParseHeadOptions {
  int channels = 64;
  int num_classes = 7;
  int roi_size = 32;
  bool use_gn = true;
  bool use_edge_branch = true;
  bool use_nonlocal = true;
  ContextModule context = ContextModule::kPgec;
};

struct ParseHeadOutput {
  torch::Tensor roi_features;  // (R, C, S, S) straight from RoIAlign
  RoiPrediction prediction;
};

/// RoIAlign on P3, context module, optional non-local, prediction head.
struct ParseHeadImpl : torch::nn::Module {
  explicit ParseHeadImpl(const ParseHeadOptions& options);
  /// `rois` rows are (batch_index, x0, y0, x1, y1) in image pixels.
  ParseHeadOutput forward(const torch::Tensor& p3, const torch::Tensor& rois);

  ParseHeadOptions options;
  torch::nn::AnyModule context;
  NonLocal nonlocal{nullptr};
  PredictionHead prediction{nullptr};
};
TORCH_MODULE(ParseHead);

/// Mean pixel cross-entropy; targets are (R, S, S) int64.
torch::Tensor parsing_loss(const torch::Tensor& logits, const torch::Tensor& targets);

enum class EdgeReduction {
  /// The weighted sum as written, per RoI; averaged over RoIs.
  kSum,
  /// The per-RoI sum divided by its pixel count; averaged over RoIs.
  kMean,
};

/// Weighted edge cross-entropy with w0 = |Y+|/|Y| on non-edge pixels and
/// w1 = |Y-|/|Y| on edge pixels, computed per RoI. logits (R, 1, S, S) or
/// (R, S, S); targets 0/1 of the same spatial shape.
torch::Tensor edge_loss(const torch::Tensor& logits, const torch::Tensor& targets,
                        EdgeReduction reduction = EdgeReduction::kSum);

struct PredictionLoss {
  torch::Tensor parsing, edge, total;
};

/// L_pred = alpha * L_parsing + beta * L_edge (L_edge = 0 without edge logits).
PredictionLoss prediction_loss(const RoiPrediction& pred, const torch::Tensor& parsing_targets,
                               const torch::Tensor& edge_targets, double alpha, double beta,
                               EdgeReduction reduction = EdgeReduction::kSum);

/// Ground-truth crop of `raster` over `box`, resampled to size x size by
/// nearest neighbour at cell centres; pixels outside the raster read 0.
LabelRaster crop_labels(const LabelRaster& raster, const Box& box, int size);

}  // namespace aiparse
