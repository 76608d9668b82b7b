#include "aiparse/roi_align.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace aiparse {
namespace {

// One bilinear tap: flat offset into an (H, W) plane and its weight, already
// divided by the number of samples in the bin.
struct Tap {
  std::int64_t offset;
  double weight;
};

struct RoiPlan {
  std::int64_t batch;
  // taps[bin] for bin in [0, out_size^2).
  std::vector<std::vector<Tap>> taps;
};

void add_sample(std::vector<Tap>& taps, double y, double x, std::int64_t h, std::int64_t w, double scale) {
  const double fy = std::floor(y), fx = std::floor(x);
  const std::int64_t y0 = static_cast<std::int64_t>(fy), x0 = static_cast<std::int64_t>(fx);
  const double ly = y - fy, lx = x - fx;
  const std::int64_t ys[2] = {y0, y0 + 1};
  const std::int64_t xs[2] = {x0, x0 + 1};
  const double wy[2] = {1 - ly, ly};
  const double wx[2] = {1 - lx, lx};
  for (int a = 0; a < 2; ++a) {
    if (ys[a] < 0 || ys[a] >= h || wy[a] == 0) continue;
    for (int b = 0; b < 2; ++b) {
      if (xs[b] < 0 || xs[b] >= w || wx[b] == 0) continue;
      taps.push_back({ys[a] * w + xs[b], wy[a] * wx[b] * scale});
    }
  }
}

std::vector<RoiPlan> make_plans(const torch::Tensor& rois, std::int64_t n, std::int64_t h, std::int64_t w,
                                int out_size, double spatial_scale, int sampling_ratio) {
  const auto r = rois.to(torch::kCPU, torch::kDouble).contiguous();
  const auto acc = r.accessor<double, 2>();
  const double per_sample = 1.0 / (sampling_ratio * sampling_ratio);
  std::vector<RoiPlan> plans(r.size(0));
  for (std::int64_t k = 0; k < r.size(0); ++k) {
    auto& plan = plans[k];
    plan.batch = static_cast<std::int64_t>(acc[k][0]);
    if (plan.batch < 0 || plan.batch >= n) throw std::out_of_range("roi_align: batch index out of range");
    const double x0 = acc[k][1] * spatial_scale, y0 = acc[k][2] * spatial_scale;
    const double bin_w = (acc[k][3] - acc[k][1]) * spatial_scale / out_size;
    const double bin_h = (acc[k][4] - acc[k][2]) * spatial_scale / out_size;
    plan.taps.resize(static_cast<std::size_t>(out_size) * out_size);
    for (int py = 0; py < out_size; ++py) {
      for (int px = 0; px < out_size; ++px) {
        auto& taps = plan.taps[py * out_size + px];
        for (int iy = 0; iy < sampling_ratio; ++iy) {
          const double y = y0 + bin_h * (py + (iy + 0.5) / sampling_ratio);
          for (int ix = 0; ix < sampling_ratio; ++ix) {
            const double x = x0 + bin_w * (px + (ix + 0.5) / sampling_ratio);
            add_sample(taps, y, x, h, w, per_sample);
          }
        }
      }
    }
  }
  return plans;
}

template <typename T>
void forward_kernel(const std::vector<RoiPlan>& plans, const torch::Tensor& features, torch::Tensor& out) {
  const std::int64_t c = features.size(1), plane = features.size(2) * features.size(3);
  const std::int64_t bins = out.size(2) * out.size(3);
  const T* in = features.data_ptr<T>();
  T* o = out.data_ptr<T>();
  for (std::size_t k = 0; k < plans.size(); ++k) {
    const auto& plan = plans[k];
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const T* src = in + (plan.batch * c + ch) * plane;
      T* dst = o + (static_cast<std::int64_t>(k) * c + ch) * bins;
      for (std::int64_t b = 0; b < bins; ++b) {
        double acc = 0;
        for (const auto& tap : plan.taps[b]) acc += tap.weight * src[tap.offset];
        dst[b] = static_cast<T>(acc);
      }
    }
  }
}

template <typename T>
void backward_kernel(const std::vector<RoiPlan>& plans, const torch::Tensor& grad_out, torch::Tensor& grad_in) {
  const std::int64_t c = grad_in.size(1), plane = grad_in.size(2) * grad_in.size(3);
  const std::int64_t bins = grad_out.size(2) * grad_out.size(3);
  const T* g = grad_out.data_ptr<T>();
  T* gi = grad_in.data_ptr<T>();
  for (std::size_t k = 0; k < plans.size(); ++k) {
    const auto& plan = plans[k];
    for (std::int64_t ch = 0; ch < c; ++ch) {
      T* dst = gi + (plan.batch * c + ch) * plane;
      const T* src = g + (static_cast<std::int64_t>(k) * c + ch) * bins;
      for (std::int64_t b = 0; b < bins; ++b) {
        const T gv = src[b];
        if (gv == 0) continue;
        for (const auto& tap : plan.taps[b]) dst[tap.offset] += static_cast<T>(tap.weight) * gv;
      }
    }
  }
}

class RoiAlignFunction : public torch::autograd::Function<RoiAlignFunction> {
 public:
  static torch::Tensor forward(torch::autograd::AutogradContext* ctx, const torch::Tensor& features,
                               const torch::Tensor& rois, int64_t out_size, double spatial_scale,
                               int64_t sampling_ratio) {
    const auto feat = features.contiguous();
    auto plans = std::make_shared<std::vector<RoiPlan>>(make_plans(
        rois, feat.size(0), feat.size(2), feat.size(3), static_cast<int>(out_size), spatial_scale,
        static_cast<int>(sampling_ratio)));
    auto out = torch::zeros({rois.size(0), feat.size(1), out_size, out_size}, feat.options());
    AT_DISPATCH_FLOATING_TYPES(feat.scalar_type(), "roi_align_forward",
                               [&] { forward_kernel<scalar_t>(*plans, feat, out); });
    ctx->saved_data["rois"] = rois;
    ctx->saved_data["shape"] = feat.sizes().vec();
    ctx->saved_data["out_size"] = out_size;
    ctx->saved_data["scale"] = spatial_scale;
    ctx->saved_data["ratio"] = sampling_ratio;
    return out;
  }

  static torch::autograd::tensor_list backward(torch::autograd::AutogradContext* ctx,
                                               torch::autograd::tensor_list grads) {
    const auto shape = ctx->saved_data["shape"].toIntVector();
    const auto rois = ctx->saved_data["rois"].toTensor();
    const auto plans = make_plans(rois, shape[0], shape[2], shape[3],
                                  static_cast<int>(ctx->saved_data["out_size"].toInt()),
                                  ctx->saved_data["scale"].toDouble(),
                                  static_cast<int>(ctx->saved_data["ratio"].toInt()));
    const auto grad_out = grads[0].contiguous();
    auto grad_in = torch::zeros(shape, grad_out.options());
    AT_DISPATCH_FLOATING_TYPES(grad_out.scalar_type(), "roi_align_backward",
                               [&] { backward_kernel<scalar_t>(plans, grad_out, grad_in); });
    return {grad_in, torch::Tensor(), torch::Tensor(), torch::Tensor(), torch::Tensor()};
  }
};

}  // namespace

torch::Tensor roi_align(const torch::Tensor& features, const torch::Tensor& rois, int out_size,
                        double spatial_scale, int sampling_ratio) {
  if (features.dim() != 4) throw std::invalid_argument("roi_align: features must be (N, C, H, W)");
  if (rois.dim() != 2 || rois.size(1) != 5) throw std::invalid_argument("roi_align: rois must be (R, 5)");
  if (out_size < 1 || sampling_ratio < 1) throw std::invalid_argument("roi_align: bad output size");
  if (rois.size(0) == 0) return torch::zeros({0, features.size(1), out_size, out_size}, features.options());
  return RoiAlignFunction::apply(features, rois.detach(), out_size, spatial_scale, sampling_ratio);
}

}  // namespace aiparse
