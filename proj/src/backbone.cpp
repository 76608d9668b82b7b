#include "aiparse/backbone.hpp"

namespace aiparse {
namespace F = torch::nn::functional;

int gn_groups(int channels) {
  for (int g : {8, 4, 2}) {
    if (channels % g == 0) return g;
  }
  return 1;
}

namespace {

torch::nn::Conv2d conv(int in, int out, int k, int stride, bool bias = true) {
  torch::nn::Conv2d c(torch::nn::Conv2dOptions(in, out, k).stride(stride).padding(k / 2).bias(bias));
  torch::nn::init::kaiming_normal_(c->weight, 0.0, torch::kFanOut, torch::kReLU);
  if (bias) torch::nn::init::zeros_(c->bias);
  return c;
}

}  // namespace

ConvGnReluImpl::ConvGnReluImpl(int in, int out, int stride) {
  conv = register_module("conv", aiparse::conv(in, out, 3, stride, false));
  gn = register_module("gn", torch::nn::GroupNorm(gn_groups(out), out));
}

torch::Tensor ConvGnReluImpl::forward(const torch::Tensor& x) { return torch::relu(gn(conv(x))); }

BackboneImpl::BackboneImpl(int width) : width(width) {
  stem = register_module("stem", ConvGnRelu(3, width / 2, 2));
  int in = width / 2;
  const int widths[4] = {width, 2 * width, 4 * width, 8 * width};
  for (int w : widths) {
    torch::nn::Sequential stage(ConvGnRelu(in, w, 2), ConvGnRelu(w, w, 1));
    stages->push_back(stage);
    in = w;
  }
  register_module("stages", stages);
}

std::vector<torch::Tensor> BackboneImpl::forward(const torch::Tensor& images) {
  auto x = stem(images);
  std::vector<torch::Tensor> out;
  for (std::size_t i = 0; i < stages->size(); ++i) {
    x = stages[i]->as<torch::nn::Sequential>()->forward(x);
    if (i >= 1) out.push_back(x);
  }
  return out;
}

std::vector<int> BackboneImpl::out_channels() const { return {2 * width, 4 * width, 8 * width}; }

FpnImpl::FpnImpl(const std::vector<int>& in_channels, int channels) {
  for (int c : in_channels) {
    laterals->push_back(conv(c, channels, 1, 1));
    outputs->push_back(conv(channels, channels, 3, 1));
  }
  register_module("laterals", laterals);
  register_module("outputs", outputs);
  p6 = register_module("p6", conv(channels, channels, 3, 2));
  p7 = register_module("p7", conv(channels, channels, 3, 2));
}

std::vector<torch::Tensor> FpnImpl::forward(const std::vector<torch::Tensor>& c) {
  const std::size_t n = c.size();
  std::vector<torch::Tensor> inner(n);
  inner[n - 1] = laterals[n - 1]->as<torch::nn::Conv2d>()->forward(c[n - 1]);
  for (std::size_t i = n - 1; i-- > 0;) {
    const auto lateral = laterals[i]->as<torch::nn::Conv2d>()->forward(c[i]);
    const auto up = F::interpolate(inner[i + 1], F::InterpolateFuncOptions()
                                                     .size(std::vector<int64_t>{lateral.size(2), lateral.size(3)})
                                                     .mode(torch::kNearest));
    inner[i] = lateral + up;
  }
  std::vector<torch::Tensor> p;
  for (std::size_t i = 0; i < n; ++i) p.push_back(outputs[i]->as<torch::nn::Conv2d>()->forward(inner[i]));
  p.push_back(p6(p.back()));
  p.push_back(p7(torch::relu(p.back())));
  return p;
}

torch::Tensor pad_to_multiple(const torch::Tensor& images, int multiple) {
  const auto h = images.size(2), w = images.size(3);
  const auto ph = (multiple - h % multiple) % multiple, pw = (multiple - w % multiple) % multiple;
  if (ph == 0 && pw == 0) return images;
  return F::pad(images, F::PadFuncOptions({0, pw, 0, ph}));
}

}  // namespace aiparse
