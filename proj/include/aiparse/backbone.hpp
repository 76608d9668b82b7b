#pragma once

#include <torch/torch.h>

#include <vector>

namespace aiparse {

/// Group count used by every GroupNorm in the model.
int gn_groups(int channels);

/// 3x3 convolution, group normalization, ReLU.
struct ConvGnReluImpl : torch::nn::Module {
  ConvGnReluImpl(int in, int out, int stride);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Conv2d conv{nullptr};
  torch::nn::GroupNorm gn{nullptr};
};
TORCH_MODULE(ConvGnRelu);

/// Stride-2 stem followed by four stride-2 stages of two ConvGnRelu each.
/// The last three stages are C3, C4, C5 at strides 8, 16, 32.
struct BackboneImpl : torch::nn::Module {
  explicit BackboneImpl(int width);
  /// Returns {C3, C4, C5}.
  std::vector<torch::Tensor> forward(const torch::Tensor& images);

  std::vector<int> out_channels() const;

  ConvGnRelu stem{nullptr};
  torch::nn::ModuleList stages;
  int width;
};
TORCH_MODULE(Backbone);

/// Feature pyramid P3..P7: 1x1 laterals with top-down addition and a 3x3
/// output conv on P3..P5, then P6 = conv_s2(P5), P7 = conv_s2(relu(P6)).
struct FpnImpl : torch::nn::Module {
  FpnImpl(const std::vector<int>& in_channels, int channels);
  /// Returns {P3, P4, P5, P6, P7}.
  std::vector<torch::Tensor> forward(const std::vector<torch::Tensor>& c);

  torch::nn::ModuleList laterals;
  torch::nn::ModuleList outputs;
  torch::nn::Conv2d p6{nullptr};
  torch::nn::Conv2d p7{nullptr};
};
TORCH_MODULE(Fpn);

/// Zero-pads (N, C, H, W) on the right and bottom to multiples of `multiple`.
torch::Tensor pad_to_multiple(const torch::Tensor& images, int multiple = 128);

}  // namespace aiparse
