#include "aiparse/detect_head.hpp"

#include <cmath>

#include "aiparse/backbone.hpp"

namespace aiparse {
namespace F = torch::nn::functional;

namespace {

torch::nn::Conv2d head_conv(int in, int out, bool bias) {
  torch::nn::Conv2d c(torch::nn::Conv2dOptions(in, out, 3).padding(1).bias(bias));
  torch::nn::init::normal_(c->weight, 0.0, 0.01);
  if (bias) torch::nn::init::zeros_(c->bias);
  return c;
}

torch::nn::Sequential tower(int channels, int depth) {
  torch::nn::Sequential s;
  for (int i = 0; i < depth; ++i) {
    s->push_back(head_conv(channels, channels, false));
    s->push_back(torch::nn::GroupNorm(gn_groups(channels), channels));
    s->push_back(torch::nn::ReLU());
  }
  return s;
}

}  // namespace

DetectHeadImpl::DetectHeadImpl(const DetectHeadOptions& o) {
  cls_tower = register_module("cls_tower", tower(o.channels, o.tower_convs));
  box_tower = register_module("box_tower", tower(o.channels, o.tower_convs));
  cls_logits = register_module("cls_logits", head_conv(o.channels, 1, true));
  centerness = register_module("centerness", head_conv(o.channels, 1, true));
  bbox_pred = register_module("bbox_pred", head_conv(o.channels, 4, true));
  torch::NoGradGuard guard;
  cls_logits->bias.fill_(-std::log((1 - o.prior_prob) / o.prior_prob));
  scales = register_parameter("scales", torch::ones({kNumLevels}));
}

DetectionOutputs DetectHeadImpl::forward(const std::vector<torch::Tensor>& pyramid) {
  DetectionOutputs out;
  for (std::size_t l = 0; l < pyramid.size(); ++l) {
    const auto c = cls_tower->forward(pyramid[l]);
    const auto b = box_tower->forward(pyramid[l]);
    out.class_logits.push_back(cls_logits(c));
    out.centerness_logits.push_back(centerness(b));
    const double stride = level_stride(kMinLevel + static_cast<int>(l));
    out.regression.push_back(stride * torch::exp(scales[l] * bbox_pred(b)));
  }
  return out;
}

torch::Tensor focal_loss_sum(const torch::Tensor& logits, const torch::Tensor& targets, double alpha,
                             double gamma) {
  const auto p = torch::sigmoid(logits);
  const auto ce = F::binary_cross_entropy_with_logits(
      logits, targets, F::BinaryCrossEntropyWithLogitsFuncOptions().reduction(torch::kNone));
  const auto p_t = p * targets + (1 - p) * (1 - targets);
  auto loss = ce;
  if (gamma != 0) loss = ce * torch::pow(1 - p_t, gamma);
  if (alpha >= 0) loss = (alpha * targets + (1 - alpha) * (1 - targets)) * loss;
  return loss.sum();
}

torch::Tensor offset_iou(const torch::Tensor& pred, const torch::Tensor& target) {
  const auto pl = pred.select(1, 0), pt = pred.select(1, 1), pr = pred.select(1, 2), pb = pred.select(1, 3);
  const auto tl = target.select(1, 0), tt = target.select(1, 1), tr = target.select(1, 2),
             tb = target.select(1, 3);
  const auto pred_area = (pl + pr) * (pt + pb);
  const auto target_area = (tl + tr) * (tt + tb);
  const auto w = torch::min(pl, tl) + torch::min(pr, tr);
  const auto h = torch::min(pt, tt) + torch::min(pb, tb);
  const auto inter = w * h;
  return inter / (pred_area + target_area - inter);
}

torch::Tensor iou_loss(const torch::Tensor& pred, const torch::Tensor& target) {
  if (pred.size(0) == 0) return pred.sum() * 0;
  return -torch::log(offset_iou(pred, target).clamp_min(1e-6)).mean();
}

torch::Tensor centerness_loss(const torch::Tensor& logits, const torch::Tensor& targets) {
  if (logits.size(0) == 0) return logits.sum() * 0;
  return F::binary_cross_entropy_with_logits(logits, targets);
}

FlatTargets flatten_targets(const std::vector<AssignmentTargets>& targets, torch::ScalarType dtype) {
  std::vector<float> labels, offsets, ctr;
  for (const auto& t : targets) {
    for (const auto& level : t.levels) {
      for (std::size_t i = 0; i < level.label.size(); ++i) {
        labels.push_back(level.label[i]);
        const auto& o = level.offsets[i];
        offsets.insert(offsets.end(), {static_cast<float>(o.l), static_cast<float>(o.t), static_cast<float>(o.r),
                                       static_cast<float>(o.b)});
        ctr.push_back(static_cast<float>(level.centerness[i]));
      }
    }
  }
  const auto m = static_cast<int64_t>(labels.size());
  FlatTargets f;
  f.labels = torch::tensor(labels).to(dtype);
  f.offsets = torch::tensor(offsets).reshape({m, 4}).to(dtype);
  f.centerness = torch::tensor(ctr).to(dtype);
  f.positive = f.labels > 0.5;
  return f;
}

FlatOutputs flatten_outputs(const DetectionOutputs& outputs) {
  // Per image, concatenate levels; then concatenate images.
  const auto n = outputs.class_logits.front().size(0);
  std::vector<torch::Tensor> cls, ctr, reg;
  for (int64_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < outputs.class_logits.size(); ++l) {
      cls.push_back(outputs.class_logits[l][i].reshape({-1}));
      ctr.push_back(outputs.centerness_logits[l][i].reshape({-1}));
      reg.push_back(outputs.regression[l][i].reshape({4, -1}).t());
    }
  }
  return {torch::cat(cls), torch::cat(ctr), torch::cat(reg)};
}

DetectionLoss detection_loss(const DetectionOutputs& outputs, const std::vector<AssignmentTargets>& targets,
                             const FocalParams& focal) {
  const auto flat = flatten_outputs(outputs);
  const auto t = flatten_targets(targets, flat.class_logits.scalar_type());
  const auto pos = t.positive.nonzero().squeeze(1);
  const double num_pos = std::max<double>(1.0, static_cast<double>(pos.size(0)));
  DetectionLoss loss;
  loss.cls = focal_loss_sum(flat.class_logits, t.labels, focal.alpha, focal.gamma) / num_pos;
  loss.reg = iou_loss(flat.regression.index_select(0, pos), t.offsets.index_select(0, pos));
  loss.center = centerness_loss(flat.centerness_logits.index_select(0, pos), t.centerness.index_select(0, pos));
  loss.total = loss.cls + loss.reg + loss.center;
  return loss;
}

std::vector<Detection> decode_detections(const DetectionOutputs& outputs, int index, int image_width,
                                         int image_height, const DecodeParams& params) {
  torch::NoGradGuard guard;
  std::vector<Detection> candidates;
  for (std::size_t l = 0; l < outputs.class_logits.size(); ++l) {
    const int level = kMinLevel + static_cast<int>(l);
    const auto score = (torch::sigmoid(outputs.class_logits[l][index][0]) *
                        torch::sigmoid(outputs.centerness_logits[l][index][0]))
                           .to(torch::kDouble)
                           .contiguous();
    const auto reg = outputs.regression[l][index].to(torch::kDouble).contiguous();
    const auto s = score.accessor<double, 2>();
    const auto r = reg.accessor<double, 3>();
    for (int64_t i = 0; i < score.size(0); ++i) {
      for (int64_t j = 0; j < score.size(1); ++j) {
        if (!(s[i][j] > params.score_threshold)) continue;
        const auto loc = cell_location(level, static_cast<int>(i), static_cast<int>(j));
        const OffsetVector off{r[0][i][j], r[1][i][j], r[2][i][j], r[3][i][j]};
        candidates.push_back({decode_offsets(loc, off), s[i][j], level});
      }
    }
  }
  return postprocess_detections(candidates, params.score_threshold, params.nms_iou, params.max_detections,
                                image_width, image_height);
}

}  // namespace aiparse
