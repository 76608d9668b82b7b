#include "aiparse/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <sstream>

#include "aiparse/assign.hpp"

namespace aiparse {

torch::Tensor total_loss(const torch::Tensor& det, const torch::Tensor& pred, const torch::Tensor& refine) {
  const std::pair<const char*, const torch::Tensor*> terms[] = {{"L_det", &det}, {"L_pred", &pred}, {"L_refine", &refine}};
  for (const auto& [name, t] : terms) {
    const double v = t->item<double>();
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "non-finite loss term " << name << " = " << v;
      throw NonFiniteLoss(msg.str());
    }
  }
  return det + pred + refine;
}

Sgd::Sgd(std::vector<std::pair<std::string, torch::Tensor>> params, double momentum, double weight_decay)
    : params_(std::move(params)), buffers_(params_.size()), momentum_(momentum), weight_decay_(weight_decay) {}

void Sgd::zero_grad() {
  for (auto& [name, p] : params_) {
    if (p.grad().defined()) p.mutable_grad().zero_();
  }
}

void Sgd::step(double lr) {
  torch::NoGradGuard guard;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i].second;
    if (!p.grad().defined()) continue;
    auto d = p.grad();
    if (weight_decay_ != 0) d = d + weight_decay_ * p;
    if (momentum_ != 0) {
      if (!buffers_[i].defined()) {
        buffers_[i] = d.clone();
      } else {
        buffers_[i].mul_(momentum_).add_(d);
      }
      d = buffers_[i];
    }
    p.add_(d, -lr);
  }
}

std::map<std::string, torch::Tensor> Sgd::state() const {
  std::map<std::string, torch::Tensor> out;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (buffers_[i].defined()) out["optim/" + params_[i].first] = buffers_[i];
  }
  return out;
}

void Sgd::load_state(const std::map<std::string, torch::Tensor>& tensors) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto it = tensors.find("optim/" + params_[i].first);
    buffers_[i] = it == tensors.end() ? torch::Tensor() : it->second.clone();
  }
}

double learning_rate(const Config& cfg, int epoch, std::int64_t iteration) {
  double lr = cfg.base_lr;
  for (int d : cfg.lr_decay_epochs) {
    if (epoch >= d) lr *= 0.1;
  }
  if (iteration < cfg.warmup_iters) {
    const double a = static_cast<double>(iteration) / cfg.warmup_iters;
    lr *= 1.0 / 3.0 + (2.0 / 3.0) * a;
  }
  return lr;
}

Scene rescale_scene(const Scene& scene, double scale) {
  if (scale == 1.0) return scene;
  const int h = scene.height(), w = scene.width();
  std::vector<int> src_r(h), src_c(w);
  for (int r = 0; r < h; ++r) src_r[r] = static_cast<int>(std::floor((r + 0.5 - h / 2.0) / scale + h / 2.0));
  for (int c = 0; c < w; ++c) src_c[c] = static_cast<int>(std::floor((c + 0.5 - w / 2.0) / scale + w / 2.0));
  Scene out;
  out.seed = scene.seed;
  out.image = RgbImage(h, w);
  for (int r = 0; r < h; ++r) {
    const int sr = std::clamp(src_r[r], 0, h - 1);
    for (int c = 0; c < w; ++c) {
      const int sc = std::clamp(src_c[c], 0, w - 1);
      for (int ch = 0; ch < 3; ++ch) out.image.at(r, c, ch) = scene.image.at(sr, sc, ch);
    }
  }
  for (const auto& inst : scene.instances) {
    GroundTruthInstance g;
    g.parsing = LabelRaster(h, w, 0);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        if (inst.parsing.in_bounds(src_r[r], src_c[c])) g.parsing(r, c) = inst.parsing(src_r[r], src_c[c]);
      }
    }
    out.instances.push_back(std::move(g));
  }
  normalize_instances(out);
  return out;
}

Box jitter_box(const Box& box, double jitter, int width, int height, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-jitter, jitter);
  const double bw = box.width(), bh = box.height();
  Box b{box.x0 + u(rng) * bw, box.y0 + u(rng) * bh, box.x1 + u(rng) * bw, box.y1 + u(rng) * bh};
  b = clip_box(b, width, height);
  if (b.width() < 2 || b.height() < 2) return box;
  return b;
}

const std::vector<std::string>& loss_columns() {
  static const std::vector<std::string> cols = {"L_cls",     "L_reg",  "L_center", "L_det",
                                                "L_parsing", "L_edge", "L_pred",   "L_miou",
                                                "L_score",   "L_refine", "L_total"};
  return cols;
}

namespace {

struct RoiSample {
  int image;
  int instance;
  Box box;
};

std::vector<RoiSample> sample_rois(const Config& cfg, const std::vector<Scene>& batch,
                                   const DetectionOutputs& outputs, std::mt19937_64& rng) {
  std::vector<RoiSample> rois;
  const auto params = decode_params(cfg);
  for (int b = 0; b < static_cast<int>(batch.size()); ++b) {
    const auto& scene = batch[b];
    for (int g = 0; g < static_cast<int>(scene.instances.size()); ++g) {
      for (int k = 0; k < cfg.rois_per_gt; ++k) {
        rois.push_back({b, g, jitter_box(scene.instances[g].box, cfg.roi_jitter, scene.width(), scene.height(), rng)});
      }
    }
    if (cfg.max_detected_rois <= 0 || scene.instances.empty()) continue;
    int taken = 0;
    for (const auto& det : decode_detections(outputs, b, scene.width(), scene.height(), params)) {
      if (taken >= cfg.max_detected_rois) break;
      int best = -1;
      double best_iou = 0.5;
      for (int g = 0; g < static_cast<int>(scene.instances.size()); ++g) {
        const double iou = box_iou(det.box, scene.instances[g].box);
        if (iou >= best_iou) {
          best_iou = iou;
          best = g;
        }
      }
      if (best < 0) continue;
      rois.push_back({b, best, det.box});
      ++taken;
    }
  }
  return rois;
}

double item(const torch::Tensor& t) { return t.item<double>(); }

}  // namespace

BatchLosses compute_batch_losses(AIParsing& model, const std::vector<Scene>& batch, std::mt19937_64& rng) {
  const Config& cfg = model->cfg;
  std::vector<const RgbImage*> images;
  for (const auto& s : batch) images.push_back(&s.image);
  const auto x = batch_images(images);
  const auto pyr = model->pyramid(x);
  const auto det_out = model->detect(pyr);

  const auto shapes = pyramid_shapes(static_cast<int>(x.size(2)), static_cast<int>(x.size(3)));
  std::vector<AssignmentTargets> targets;
  for (const auto& s : batch) {
    std::vector<Box> boxes;
    for (const auto& inst : s.instances) boxes.push_back(inst.box);
    targets.push_back(assign_targets(shapes, boxes, cfg.ranges()));
  }
  BatchLosses out;
  const auto det = detection_loss(det_out, targets, {cfg.focal_alpha, cfg.focal_gamma});
  out.cls = det.cls;
  out.reg = det.reg;
  out.center = det.center;
  out.det = det.total;

  const auto rois = sample_rois(cfg, batch, det_out, rng);
  out.num_rois = static_cast<int>(rois.size());
  const auto zero = torch::zeros({}, x.options());
  if (rois.empty()) {
    out.parsing = out.edge = out.pred = out.miou = out.score = out.refine = zero;
  } else {
    const int out_size = 2 * cfg.roi_size;
    auto roi_t = torch::empty({static_cast<int64_t>(rois.size()), 5}, torch::kFloat);
    auto parsing_t = torch::empty({static_cast<int64_t>(rois.size()), out_size, out_size}, torch::kLong);
    auto edge_t = torch::empty({static_cast<int64_t>(rois.size()), out_size, out_size}, torch::kFloat);
    for (std::size_t i = 0; i < rois.size(); ++i) {
      const auto& r = rois[i];
      const auto b = r.box;
      roi_t[i] = torch::tensor({static_cast<float>(r.image), static_cast<float>(b.x0), static_cast<float>(b.y0),
                                static_cast<float>(b.x1), static_cast<float>(b.y1)});
      const auto crop = crop_labels(batch[r.image].instances[r.instance].parsing, b, out_size);
      parsing_t[i] = labels_to_tensor(crop);
      edge_t[i] = labels_to_tensor(extract_edge_labels(crop)).to(torch::kFloat);
    }
    const auto head = model->parse(pyr[0], roi_t);
    const auto pred =
        prediction_loss(head.prediction, parsing_t, edge_t, cfg.alpha, cfg.beta, EdgeReduction::kMean);
    out.parsing = pred.parsing;
    out.edge = pred.edge;
    out.pred = pred.total;
    const auto& logits = head.prediction.parsing_logits;
    out.miou = cfg.use_miou_loss ? lovasz_miou_loss(logits, parsing_t) : zero;
    if (cfg.use_miou_score) {
      const auto s = model->score(logits.detach(), head.roi_features);
      const auto target = map_miou_targets(logits.detach(), parsing_t).to(s.scalar_type());
      out.score = (s - target).pow(2).mean();
    } else {
      out.score = zero;
    }
    out.refine = cfg.theta * out.miou + cfg.gamma * out.score;
  }
  out.total = total_loss(out.det, out.pred, out.refine);
  return out;
}

StepLosses to_step_losses(const BatchLosses& l) {
  StepLosses s;
  s.cls = item(l.cls);
  s.reg = item(l.reg);
  s.center = item(l.center);
  s.det = item(l.det);
  s.parsing = item(l.parsing);
  s.edge = item(l.edge);
  s.pred = item(l.pred);
  s.miou = item(l.miou);
  s.score = item(l.score);
  s.refine = item(l.refine);
  s.total = s.det + s.pred + s.refine;
  return s;
}

namespace {

std::vector<double> as_row(const StepLosses& s) {
  return {s.cls, s.reg, s.center, s.det, s.parsing, s.edge, s.pred, s.miou, s.score, s.refine, s.total};
}

std::string rng_state(const std::mt19937_64& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

}  // namespace

TrainResult train(const Config& cfg, const std::vector<Scene>& scenes, const TrainOptions& options) {
  cfg.validate();
  if (scenes.empty()) throw std::invalid_argument("train: empty dataset");
  torch::manual_seed(cfg.seed);
  AIParsing model(cfg);
  model->train();
  std::vector<std::pair<std::string, torch::Tensor>> params;
  for (auto& p : model->named_parameters()) params.emplace_back(p.key(), p.value());
  Sgd sgd(params, cfg.momentum, cfg.weight_decay);
  std::mt19937_64 rng(cfg.seed);

  TrainResult result;
  result.epochs.columns = {"epoch", "lr"};
  result.steps.columns = {"step", "epoch", "lr"};
  for (const auto& c : loss_columns()) {
    result.epochs.columns.push_back(c);
    result.steps.columns.push_back(c);
  }

  std::int64_t iteration = 0;
  std::vector<std::size_t> order(scenes.size());
  std::iota(order.begin(), order.end(), 0);
  std::uniform_real_distribution<double> jitter(-cfg.scale_jitter, cfg.scale_jitter);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> sums(loss_columns().size(), 0.0);
    int steps = 0;
    double lr = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::vector<Scene> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i) {
        auto s = rescale_scene(scenes[order[i]], 1.0 + jitter(rng));
        if (s.instances.empty()) s = scenes[order[i]];
        batch.push_back(std::move(s));
      }
      lr = learning_rate(cfg, epoch, iteration);
      StepLosses step;
      try {
        const auto losses = compute_batch_losses(model, batch, rng);
        step = to_step_losses(losses);
        if (step.total > cfg.divergence_threshold) {
          std::ostringstream msg;
          msg << "diverged at epoch " << epoch << " step " << iteration << ": L_total = " << step.total;
          throw NonFiniteLoss(msg.str());
        }
        sgd.zero_grad();
        losses.total.backward();
        sgd.step(lr);
      } catch (const NonFiniteLoss& e) {
        result.diverged = true;
        result.message = e.what();
        if (!options.epoch_log.empty()) result.epochs.write_csv(options.epoch_log);
        if (!options.step_log.empty()) result.steps.write_csv(options.step_log);
        if (options.verbose) std::cerr << "training aborted: " << e.what() << "\n";
        return result;
      }
      auto row = as_row(step);
      for (std::size_t k = 0; k < row.size(); ++k) sums[k] += row[k];
      row.insert(row.begin(), {static_cast<double>(iteration), static_cast<double>(epoch), lr});
      result.steps.append(row);
      ++iteration;
      ++steps;
    }
    std::vector<double> row = {static_cast<double>(epoch), lr};
    for (double s : sums) row.push_back(s / steps);
    result.epochs.append(row);
    result.completed_epochs = epoch + 1;
    if (options.verbose) {
      std::cerr << "epoch " << epoch << " lr " << lr << " L_total " << row.back() << "\n";
    }
    if (!options.checkpoint.empty()) {
      Checkpoint ckpt;
      ckpt.cfg = cfg;
      ckpt.epoch = epoch + 1;
      ckpt.rng_state = rng_state(rng);
      ckpt.tensors = model_state(model);
      for (auto& [k, v] : sgd.state()) ckpt.tensors[k] = v;
      save_checkpoint(ckpt, options.checkpoint);
    }
    if (!options.epoch_log.empty()) result.epochs.write_csv(options.epoch_log);
    if (!options.step_log.empty()) result.steps.write_csv(options.step_log);
  }
  return result;
}

}  // namespace aiparse
