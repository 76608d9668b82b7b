#include "aiparse/parse_head.hpp"

#include <cmath>

#include "aiparse/backbone.hpp"
#include "aiparse/roi_align.hpp"

namespace aiparse {
namespace F = torch::nn::functional;

namespace {

torch::nn::Conv2d conv(int in, int out, int k, int stride = 1, int groups = 1, int dilation = 1) {
  torch::nn::Conv2d c(torch::nn::Conv2dOptions(in, out, k)
                          .stride(stride)
                          .padding(dilation * (k / 2))
                          .dilation(dilation)
                          .groups(groups));
  torch::nn::init::kaiming_normal_(c->weight, 0.0, torch::kFanOut, torch::kReLU);
  torch::nn::init::zeros_(c->bias);
  return c;
}

torch::nn::Conv2d depthwise(int channels, int k, int stride = 1) {
  torch::nn::Conv2d c(torch::nn::Conv2dOptions(channels, channels, k).stride(stride).padding(k / 2).groups(channels));
  torch::nn::init::constant_(c->weight, 1.0 / (k * k));
  torch::nn::init::zeros_(c->bias);
  return c;
}

torch::Tensor resize(const torch::Tensor& x, int64_t h, int64_t w, bool nearest) {
  auto opts = F::InterpolateFuncOptions().size(std::vector<int64_t>{h, w});
  if (nearest) {
    opts.mode(torch::kNearest);
  } else {
    opts.mode(torch::kBilinear).align_corners(false);
  }
  return F::interpolate(x, opts);
}

}  // namespace

GatherExciteImpl::GatherExciteImpl(int channels, int extent) : extent(extent) {
  transform = register_module("transform", depthwise(channels, 3));
}

torch::Tensor GatherExciteImpl::forward(const torch::Tensor& x) {
  const auto pooled = F::avg_pool2d(x, F::AvgPool2dFuncOptions(extent).stride(extent).ceil_mode(true));
  return resize(transform(pooled), x.size(2), x.size(3), true);
}

GlobalGatherExciteImpl::GlobalGatherExciteImpl(int channels, int depthwise_layers) {
  gather = register_module("gather", torch::nn::Sequential());
  for (int i = 0; i < depthwise_layers; ++i) gather->push_back(depthwise(channels, 3, 2));
  transform = register_module("transform", depthwise(channels, 1));
  torch::NoGradGuard guard;
  transform->weight.fill_(1.0);
}

torch::Tensor GlobalGatherExciteImpl::forward(const torch::Tensor& x) {
  const auto g = F::adaptive_avg_pool2d(gather->forward(x), F::AdaptiveAvgPool2dFuncOptions(1));
  return transform(g).expand_as(x);
}

PgecImpl::PgecImpl(int channels, std::vector<int> extents) {
  conv = register_module("conv", aiparse::conv(channels, channels, 3));
  for (int e : extents) local->push_back(GatherExcite(channels, e));
  register_module("local", local);
  global = register_module("global", GlobalGatherExcite(channels));
}

std::vector<torch::Tensor> PgecImpl::gates(const torch::Tensor& x) {
  std::vector<torch::Tensor> g;
  for (const auto& unit : *local) g.push_back(unit->as<GatherExcite>()->forward(x));
  g.push_back(global(x));
  return g;
}

torch::Tensor PgecImpl::forward(const torch::Tensor& x) {
  auto out = conv(x);
  for (const auto& gate : gates(x)) out = out + x * torch::sigmoid(gate);
  return out;
}

PspImpl::PspImpl(int channels) {
  for (int i = 0; i < 3; ++i) reduce->push_back(conv(channels, channels / 4, 1));
  register_module("reduce", reduce);
  fuse = register_module("fuse", conv(channels + 3 * (channels / 4), channels, 1));
}

torch::Tensor PspImpl::forward(const torch::Tensor& x) {
  std::vector<torch::Tensor> parts = {x};
  const int bins[3] = {1, 2, 4};
  for (int i = 0; i < 3; ++i) {
    const auto pooled = F::adaptive_avg_pool2d(x, F::AdaptiveAvgPool2dFuncOptions(bins[i]));
    const auto r = torch::relu(reduce[i]->as<torch::nn::Conv2d>()->forward(pooled));
    parts.push_back(resize(r, x.size(2), x.size(3), false));
  }
  return torch::relu(fuse(torch::cat(parts, 1)));
}

AsppImpl::AsppImpl(int channels) {
  branches->push_back(conv(channels, channels / 4, 1));
  branches->push_back(conv(channels, channels / 4, 3, 1, 1, 2));
  branches->push_back(conv(channels, channels / 4, 3, 1, 1, 4));
  register_module("branches", branches);
  pool_proj = register_module("pool_proj", conv(channels, channels / 4, 1));
  fuse = register_module("fuse", conv(channels, channels, 1));
}

torch::Tensor AsppImpl::forward(const torch::Tensor& x) {
  std::vector<torch::Tensor> parts;
  for (const auto& b : *branches) parts.push_back(torch::relu(b->as<torch::nn::Conv2d>()->forward(x)));
  const auto pooled = F::adaptive_avg_pool2d(x, F::AdaptiveAvgPool2dFuncOptions(1));
  parts.push_back(torch::relu(pool_proj(pooled)).expand({-1, -1, x.size(2), x.size(3)}));
  return torch::relu(fuse(torch::cat(parts, 1)));
}

NonLocalImpl::NonLocalImpl(int channels) {
  const int inner = channels / 2;
  theta = register_module("theta", conv(channels, inner, 1));
  phi = register_module("phi", conv(channels, inner, 1));
  g = register_module("g", conv(channels, inner, 1));
  proj = register_module("proj", conv(inner, channels, 1));
  gn = register_module("gn", torch::nn::GroupNorm(gn_groups(channels), channels));
  torch::nn::init::zeros_(gn->weight);
}

torch::Tensor NonLocalImpl::attention(const torch::Tensor& x) {
  const auto n = x.size(0);
  const auto t = theta(x).reshape({n, -1, x.size(2) * x.size(3)});  // (N, C', HW)
  const auto p = phi(x).reshape({n, -1, x.size(2) * x.size(3)});
  return torch::softmax(torch::bmm(t.transpose(1, 2), p), -1);  // (N, HW, HW)
}

torch::Tensor NonLocalImpl::forward(const torch::Tensor& x) {
  const auto n = x.size(0);
  const auto a = attention(x);
  const auto v = g(x).reshape({n, -1, x.size(2) * x.size(3)}).transpose(1, 2);  // (N, HW, C')
  const auto y = torch::bmm(a, v).transpose(1, 2).reshape({n, -1, x.size(2), x.size(3)});
  return x + gn(proj(y));
}

PredictionHeadImpl::PredictionHeadImpl(int channels, int num_classes, bool use_gn, bool use_edge_branch)
    : use_gn(use_gn), use_edge_branch(use_edge_branch) {
  for (int i = 0; i < 4; ++i) convs->push_back(conv(channels, channels, 3));
  register_module("convs", convs);
  gn = register_module("gn", torch::nn::GroupNorm(gn_groups(channels), channels));
  auto up = [&](const char* name) {
    torch::nn::ConvTranspose2d u(torch::nn::ConvTranspose2dOptions(channels, channels, 2).stride(2));
    torch::nn::init::kaiming_normal_(u->weight, 0.0, torch::kFanOut, torch::kReLU);
    torch::nn::init::zeros_(u->bias);
    return register_module(name, u);
  };
  parsing_up = up("parsing_up");
  parsing_out = register_module("parsing_out", conv(channels, num_classes, 1));
  if (use_edge_branch) {
    edge_up = up("edge_up");
    edge_out = register_module("edge_out", conv(channels, 1, 1));
  }
}

RoiPrediction PredictionHeadImpl::forward(const torch::Tensor& x) {
  auto h = x;
  for (std::size_t i = 0; i < convs->size(); ++i) {
    h = convs[i]->as<torch::nn::Conv2d>()->forward(h);
    if (i + 1 == convs->size() && use_gn) h = gn(h);
    h = torch::relu(h);
  }
  RoiPrediction out;
  out.parsing_logits = parsing_out(torch::relu(parsing_up(h)));
  if (use_edge_branch) out.edge_logits = edge_out(torch::relu(edge_up(h)));
  return out;
}

ParseHeadImpl::ParseHeadImpl(const ParseHeadOptions& o) : options(o) {
  switch (o.context) {
    case ContextModule::kPgec: context = torch::nn::AnyModule(Pgec(o.channels)); break;
    case ContextModule::kPsp: context = torch::nn::AnyModule(Psp(o.channels)); break;
    case ContextModule::kAspp: context = torch::nn::AnyModule(Aspp(o.channels)); break;
    case ContextModule::kNone: context = torch::nn::AnyModule(torch::nn::Identity()); break;
  }
  register_module("context", context.ptr());
  if (o.use_nonlocal) nonlocal = register_module("nonlocal", NonLocal(o.channels));
  prediction = register_module("prediction",
                               PredictionHead(o.channels, o.num_classes, o.use_gn, o.use_edge_branch));
}

ParseHeadOutput ParseHeadImpl::forward(const torch::Tensor& p3, const torch::Tensor& rois) {
  ParseHeadOutput out;
  out.roi_features = roi_align(p3, rois, options.roi_size, 1.0 / level_stride(kMinLevel));
  auto x = context.forward(out.roi_features);
  if (options.use_nonlocal) x = nonlocal(x);
  out.prediction = prediction(x);
  return out;
}

torch::Tensor parsing_loss(const torch::Tensor& logits, const torch::Tensor& targets) {
  if (logits.size(0) == 0) return logits.sum() * 0;
  return F::cross_entropy(logits, targets);
}

torch::Tensor edge_loss(const torch::Tensor& logits, const torch::Tensor& targets, EdgeReduction reduction) {
  if (logits.size(0) == 0) return logits.sum() * 0;
  const auto r = logits.size(0);
  const auto z = logits.reshape({r, -1});
  const auto t = targets.reshape({r, -1}).to(z.scalar_type());
  const double n = static_cast<double>(z.size(1));
  const auto n_pos = t.sum(1);
  const auto w0 = n_pos / n;        // on non-edge pixels
  const auto w1 = (n - n_pos) / n;  // on edge pixels
  const auto neg = ((1 - t) * F::logsigmoid(-z)).sum(1);
  const auto pos = (t * F::logsigmoid(z)).sum(1);
  auto per_roi = -w0 * neg - w1 * pos;
  if (reduction == EdgeReduction::kMean) per_roi = per_roi / n;
  return per_roi.mean();
}

PredictionLoss prediction_loss(const RoiPrediction& pred, const torch::Tensor& parsing_targets,
                               const torch::Tensor& edge_targets, double alpha, double beta,
                               EdgeReduction reduction) {
  PredictionLoss loss;
  loss.parsing = parsing_loss(pred.parsing_logits, parsing_targets);
  loss.edge = pred.edge_logits.defined() ? edge_loss(pred.edge_logits, edge_targets, reduction)
                                         : torch::zeros({}, pred.parsing_logits.options());
  loss.total = alpha * loss.parsing + beta * loss.edge;
  return loss;
}

LabelRaster crop_labels(const LabelRaster& raster, const Box& box, int size) {
  LabelRaster out(size, size, 0);
  const double cw = box.width() / size, ch = box.height() / size;
  for (int i = 0; i < size; ++i) {
    const int r = static_cast<int>(std::floor(box.y0 + (i + 0.5) * ch));
    for (int j = 0; j < size; ++j) {
      const int c = static_cast<int>(std::floor(box.x0 + (j + 0.5) * cw));
      if (raster.in_bounds(r, c)) out(i, j) = raster(r, c);
    }
  }
  return out;
}

}  // namespace aiparse
