#include "aiparse/refine_head.hpp"

#include <cstring>

#include "aiparse/raster.hpp"

namespace aiparse {
namespace F = torch::nn::functional;

torch::Tensor lovasz_grad(const torch::Tensor& gt_sorted) {
  const auto gts = gt_sorted.sum();
  const auto intersection = gts - gt_sorted.cumsum(0);
  const auto union_ = gts + (1 - gt_sorted).cumsum(0);
  auto jaccard = 1 - intersection / union_;
  if (gt_sorted.size(0) > 1) {
    jaccard = torch::cat({jaccard.slice(0, 0, 1), jaccard.slice(0, 1) - jaccard.slice(0, 0, -1)});
  }
  return jaccard;
}

torch::Tensor lovasz_softmax_flat(const torch::Tensor& probs, const torch::Tensor& labels) {
  const auto predicted = probs.argmax(0);
  std::vector<torch::Tensor> losses;
  for (int64_t c = 0; c < probs.size(0); ++c) {
    const auto fg = (labels == c).to(probs.scalar_type());
    const bool present = fg.sum().item<double>() > 0 || (predicted == c).any().item<bool>();
    if (!present) continue;
    const auto errors = (fg - probs[c]).abs();
    const auto sorted = errors.sort(0, true);
    const auto order = std::get<1>(sorted);
    losses.push_back(torch::dot(std::get<0>(sorted), lovasz_grad(fg.index_select(0, order))));
  }
  if (losses.empty()) return probs.sum() * 0;
  return torch::stack(losses).mean();
}

torch::Tensor lovasz_miou_loss(const torch::Tensor& logits, const torch::Tensor& labels) {
  if (logits.size(0) == 0) return logits.sum() * 0;
  const auto probs = torch::softmax(logits, 1);
  std::vector<torch::Tensor> per_roi;
  for (int64_t r = 0; r < logits.size(0); ++r) {
    per_roi.push_back(lovasz_softmax_flat(probs[r].reshape({probs.size(1), -1}), labels[r].reshape({-1})));
  }
  return torch::stack(per_roi).mean();
}

namespace {

int conv_out(int size) { return (size + 1) / 2; }

}  // namespace

MiouScoreNetImpl::MiouScoreNetImpl(int num_classes, int channels, int roi_size, int hidden)
    : roi_size(roi_size) {
  const int width = 64;
  conv1 = register_module(
      "conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(num_classes + channels, width, 3).stride(2).padding(1)));
  conv2 = register_module("conv2", torch::nn::Conv2d(torch::nn::Conv2dOptions(width, width, 3).stride(2).padding(1)));
  const int s = conv_out(conv_out(roi_size));
  fc1 = register_module("fc1", torch::nn::Linear(width * s * s, hidden));
  fc2 = register_module("fc2", torch::nn::Linear(hidden, hidden));
  fc3 = register_module("fc3", torch::nn::Linear(hidden, 1));
}

torch::Tensor MiouScoreNetImpl::forward(const torch::Tensor& parsing_logits, const torch::Tensor& roi_features) {
  const auto pooled = F::adaptive_avg_pool2d(parsing_logits, F::AdaptiveAvgPool2dFuncOptions(roi_size));
  auto x = torch::cat({pooled, roi_features}, 1);
  x = torch::relu(conv2(torch::relu(conv1(x))));
  x = torch::relu(fc1(x.flatten(1)));
  x = torch::relu(fc2(x));
  return torch::sigmoid(fc3(x)).squeeze(1);
}

torch::Tensor map_miou_targets(const torch::Tensor& logits, const torch::Tensor& labels) {
  const auto pred = logits.argmax(1).to(torch::kUInt8).contiguous();
  const auto gt = labels.to(torch::kUInt8).contiguous();
  const auto r = pred.size(0), h = pred.size(1), w = pred.size(2);
  std::vector<double> out;
  for (int64_t k = 0; k < r; ++k) {
    LabelRaster a(static_cast<int>(h), static_cast<int>(w)), b(static_cast<int>(h), static_cast<int>(w));
    std::memcpy(a.data().data(), pred[k].data_ptr<std::uint8_t>(), h * w);
    std::memcpy(b.data().data(), gt[k].data_ptr<std::uint8_t>(), h * w);
    out.push_back(compute_map_miou(a, b));
  }
  return torch::tensor(out, torch::kDouble);
}

}  // namespace aiparse
