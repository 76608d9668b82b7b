#include "aiparse/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace aiparse {
namespace F = torch::nn::functional;

LabelRaster paste_global(const std::vector<InstanceRecord>& instances, int height, int width) {
  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return instances[a].score < instances[b].score; });
  LabelRaster out(height, width, 0);
  for (std::size_t k : order) {
    const auto& src = instances[k].parsing.data();
    auto& dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
      if (src[i] != 0) dst[i] = src[i];
    }
  }
  return out;
}

LabelRaster paste_roi(const torch::Tensor& probs, const Box& box, int height, int width) {
  LabelRaster out(height, width, 0);
  // Pixels whose centres fall inside the box.
  const int c0 = std::max(0, static_cast<int>(std::ceil(box.x0 - 0.5)));
  const int c1 = std::min(width, static_cast<int>(std::ceil(box.x1 - 0.5)));
  const int r0 = std::max(0, static_cast<int>(std::ceil(box.y0 - 0.5)));
  const int r1 = std::min(height, static_cast<int>(std::ceil(box.y1 - 0.5)));
  if (c1 <= c0 || r1 <= r0) return out;
  const auto xs = (torch::arange(c0, c1, torch::kDouble) + 0.5 - box.x0) / box.width() * 2 - 1;
  const auto ys = (torch::arange(r0, r1, torch::kDouble) + 0.5 - box.y0) / box.height() * 2 - 1;
  const auto grid = torch::stack(torch::meshgrid({ys, xs}, "ij"), -1).flip(-1).unsqueeze(0).to(probs.scalar_type());
  const auto sampled = F::grid_sample(probs.unsqueeze(0), grid,
                                      F::GridSampleFuncOptions()
                                          .mode(torch::kBilinear)
                                          .padding_mode(torch::kBorder)
                                          .align_corners(false));
  const auto labels = sampled[0].argmax(0).to(torch::kUInt8).contiguous();
  const auto acc = labels.accessor<std::uint8_t, 2>();
  for (int r = r0; r < r1; ++r) {
    for (int c = c0; c < c1; ++c) out(r, c) = acc[r - r0][c - c0];
  }
  return out;
}

ImagePrediction predict(AIParsing& model, const RgbImage& image, std::optional<bool> use_miou_score) {
  const Config& cfg = model->cfg;
  const bool fuse = use_miou_score.value_or(cfg.use_miou_score);
  model->eval();
  torch::NoGradGuard guard;
  const int h = image.height(), w = image.width();
  const auto x = batch_images({&image});
  const auto pyr = model->pyramid(x);
  const auto dets = decode_detections(model->detect(pyr), 0, w, h, decode_params(cfg));
  ImagePrediction out;
  if (dets.empty()) {
    out.global_parsing = LabelRaster(h, w, 0);
    return out;
  }
  auto rois = torch::empty({static_cast<int64_t>(dets.size()), 5}, torch::kFloat);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const auto& b = dets[i].box;
    rois[i] = torch::tensor({0.0f, static_cast<float>(b.x0), static_cast<float>(b.y0), static_cast<float>(b.x1),
                             static_cast<float>(b.y1)});
  }
  const auto head = model->parse(pyr[0], rois);
  const auto& logits = head.prediction.parsing_logits;
  const auto probs = torch::softmax(logits, 1);
  const auto miou = model->score(logits, head.roi_features).to(torch::kDouble).contiguous();
  for (std::size_t i = 0; i < dets.size(); ++i) {
    InstanceRecord rec;
    rec.box = dets[i].box;
    rec.det_score = dets[i].score;
    rec.miou_score = std::clamp(miou[i].item<double>(), 0.0, 1.0);
    rec.score = fuse ? fuse_instance_score(rec.det_score, *rec.miou_score) : rec.det_score;
    rec.parsing = paste_roi(probs[i], rec.box, h, w);
    out.instances.push_back(std::move(rec));
  }
  std::stable_sort(out.instances.begin(), out.instances.end(),
                   [](const InstanceRecord& a, const InstanceRecord& b) { return a.score > b.score; });
  out.global_parsing = paste_global(out.instances, h, w);
  return out;
}

std::vector<ImagePrediction> predict_all(AIParsing& model, const std::vector<Scene>& scenes,
                                         std::optional<bool> use_miou_score) {
  std::vector<ImagePrediction> out;
  out.reserve(scenes.size());
  for (const auto& s : scenes) out.push_back(predict(model, s.image, use_miou_score));
  return out;
}

}  // namespace aiparse
