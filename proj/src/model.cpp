#include "aiparse/model.hpp"

namespace aiparse {

AIParsingImpl::AIParsingImpl(const Config& c) : cfg(c) {
  cfg.validate();
  backbone = register_module("backbone", Backbone(cfg.backbone_width));
  fpn = register_module("fpn", Fpn(backbone->out_channels(), cfg.channels));
  detect = register_module("detect", DetectHead(DetectHeadOptions{cfg.channels, cfg.tower_convs, 0.01}));
  ParseHeadOptions p;
  p.channels = cfg.channels;
  p.num_classes = cfg.k_parts;
  p.roi_size = cfg.roi_size;
  p.use_gn = cfg.use_gn;
  p.use_edge_branch = cfg.use_edge_branch;
  p.use_nonlocal = cfg.use_nonlocal;
  p.context = cfg.context_module;
  parse = register_module("parse", ParseHead(p));
  score = register_module("score", MiouScoreNet(cfg.k_parts, cfg.channels, cfg.roi_size));
}

std::vector<torch::Tensor> AIParsingImpl::pyramid(const torch::Tensor& images) {
  return fpn(backbone(pad_to_multiple(images)));
}

torch::Tensor image_to_tensor(const RgbImage& image) {
  const auto h = image.height(), w = image.width();
  auto hwc = torch::from_blob(const_cast<std::uint8_t*>(image.data().data()), {h, w, 3}, torch::kUInt8);
  return (hwc.permute({2, 0, 1}).to(torch::kFloat) / 255.0 - 0.5) / 0.25;
}

torch::Tensor labels_to_tensor(const LabelRaster& raster) {
  auto t = torch::from_blob(const_cast<std::uint8_t*>(raster.data().data()), {raster.height(), raster.width()},
                            torch::kUInt8);
  return t.to(torch::kLong);
}

torch::Tensor batch_images(const std::vector<const RgbImage*>& images) {
  std::vector<torch::Tensor> t;
  for (const auto* im : images) t.push_back(image_to_tensor(*im));
  return pad_to_multiple(torch::stack(t));
}

DecodeParams decode_params(const Config& cfg) {
  return {cfg.score_threshold, cfg.nms_iou, cfg.max_detections};
}

}  // namespace aiparse
