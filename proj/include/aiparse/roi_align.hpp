#pragma once

#include <torch/torch.h>

namespace aiparse {

/// RoIAlign with a hand-written backward.
///
/// `features` is (N, C, H, W); `rois` is (R, 5) rows of
/// (batch_index, x0, y0, x1, y1) in image pixels. A point at image x maps to
/// feature column x * spatial_scale (feature value j lives at x = j /
/// spatial_scale). Each of the out_size x out_size bins averages
/// sampling_ratio^2 bilinear samples; taps outside the feature map read 0.
/// Returns (R, C, out_size, out_size). Gradients flow to `features` only.
torch::Tensor roi_align(const torch::Tensor& features, const torch::Tensor& rois, int out_size,
                        double spatial_scale, int sampling_ratio = 2);

}  // namespace aiparse
