#include <gtest/gtest.h>

#include "aiparse/roi_align.hpp"
#include "gradcheck.hpp"
#include "roi_oracles.hpp"

using aiparse::roi_align;

namespace {

constexpr double kScale = 1.0 / 8;
constexpr double kTol = 1e-5;

torch::Tensor random_rois(int n, int batch, double extent, torch::Generator& gen) {
  auto rois = torch::empty({n, 5}, torch::kDouble);
  for (int i = 0; i < n; ++i) {
    // Corners may fall outside the map to exercise the zero padding.
    auto c = torch::rand({4}, gen, torch::kDouble) * (extent * 1.5) - extent * 0.25;
    const double x0 = std::min(c[0].item<double>(), c[2].item<double>());
    const double x1 = std::max(c[0].item<double>(), c[2].item<double>()) + 1;
    const double y0 = std::min(c[1].item<double>(), c[3].item<double>());
    const double y1 = std::max(c[1].item<double>(), c[3].item<double>()) + 1;
    rois[i] = torch::tensor({static_cast<double>(i % batch), x0, y0, x1, y1}, torch::kDouble);
  }
  return rois;
}

}  // namespace

TEST(RoiAlign, ConstantMapGivesConstant) {
  const auto feat = torch::full({1, 3, 16, 16}, 2.5);
  const auto rois = torch::tensor({{0.0f, 10.0f, 12.0f, 90.0f, 70.0f}, {0.0f, 0.0f, 0.0f, 120.0f, 120.0f}});
  const auto out = roi_align(feat, rois, 14, kScale);
  EXPECT_EQ(out.sizes(), (std::vector<int64_t>{2, 3, 14, 14}));
  EXPECT_NEAR((out - 2.5).abs().max().item<double>(), 0.0, 1e-6);
}

TEST(RoiAlign, LinearRampIsReproduced) {
  // Feature value at column j is j, i.e. x / 8 in image pixels.
  const auto feat = torch::arange(16, torch::kDouble).view({1, 1, 1, 16}).expand({1, 1, 16, 16}).contiguous();
  const auto rois = torch::tensor({{0.0, 8.0, 8.0, 72.0, 40.0}}, torch::kDouble);
  const int s = 8;
  const auto out = roi_align(feat, rois, s, kScale);
  for (int px = 0; px < s; ++px) {
    const double centre_x = 8.0 + (px + 0.5) * 64.0 / s;
    EXPECT_NEAR(out[0][0][3][px].item<double>(), centre_x / 8, 1e-9);
  }
}

TEST(RoiAlign, CellAlignedBoxAveragesCellCorners) {
  torch::manual_seed(1);
  const auto feat = torch::randn({1, 2, 8, 8}, torch::kDouble);
  // Box [16, 48] x [8, 40] covers feature cells 2..5 x 1..4, one bin per cell.
  const auto rois = torch::tensor({{0.0, 16.0, 8.0, 48.0, 40.0}}, torch::kDouble);
  const auto out = roi_align(feat, rois, 4, kScale);
  for (int c = 0; c < 2; ++c) {
    for (int by = 0; by < 4; ++by) {
      for (int bx = 0; bx < 4; ++bx) {
        const int j = 2 + bx, i = 1 + by;
        const double corners = (feat[0][c][i][j] + feat[0][c][i][j + 1] + feat[0][c][i + 1][j] +
                                feat[0][c][i + 1][j + 1]).item<double>() / 4;
        EXPECT_NEAR(out[0][c][by][bx].item<double>(), corners, 1e-12);
      }
    }
  }
}

TEST(RoiAlign, AgreesWithTwoOraclesOnRandomBoxes) {
  auto gen = torch::make_generator<at::CPUGeneratorImpl>(11);
  for (int trial = 0; trial < 5; ++trial) {
    const auto feat = torch::randn({2, 3, 12, 10}, gen, torch::kDouble);
    const auto rois = random_rois(6, 2, 90.0, gen);
    for (int out_size : {3, 7}) {
      const auto got = roi_align(feat, rois, out_size, kScale);
      const auto naive = oracle::roi_align_naive(feat, rois, out_size, kScale, 2);
      const auto grid = oracle::roi_align_grid_sample(feat, rois, out_size, kScale, 2);
      EXPECT_LT((got - naive).abs().max().item<double>(), kTol);
      EXPECT_LT((got - grid).abs().max().item<double>(), kTol);
    }
  }
}

TEST(RoiAlign, FloatMatchesDouble) {
  auto gen = torch::make_generator<at::CPUGeneratorImpl>(5);
  const auto feat = torch::randn({1, 4, 16, 16}, gen, torch::kDouble);
  const auto rois = random_rois(4, 1, 128.0, gen);
  const auto d = roi_align(feat, rois, 14, kScale);
  const auto f = roi_align(feat.to(torch::kFloat), rois.to(torch::kFloat), 14, kScale);
  EXPECT_EQ(f.scalar_type(), torch::kFloat);
  EXPECT_LT((f.to(torch::kDouble) - d).abs().max().item<double>(), kTol);
}

TEST(RoiAlign, BoxFullyOutsideReadsZero) {
  const auto feat = torch::ones({1, 1, 4, 4});
  const auto rois = torch::tensor({{0.0f, 200.0f, 200.0f, 260.0f, 260.0f}});
  EXPECT_EQ(roi_align(feat, rois, 4, kScale).abs().sum().item<double>(), 0.0);
}

TEST(RoiAlign, BackwardMatchesFiniteDifferences) {
  auto gen = torch::make_generator<at::CPUGeneratorImpl>(3);
  const auto feat = torch::randn({2, 2, 6, 6}, gen, torch::kDouble);
  const auto rois = random_rois(3, 2, 48.0, gen);
  const auto weights = torch::randn({3, 2, 3, 3}, gen, torch::kDouble);
  const auto f = [&](const torch::Tensor& x) { return (roi_align(x, rois, 3, kScale) * weights).sum(); };
  EXPECT_LT(gradcheck::relative_error(f, feat), gradcheck::kMaxRelError);
}

TEST(RoiAlign, BackwardMatchesAutogradThroughOracle) {
  auto gen = torch::make_generator<at::CPUGeneratorImpl>(9);
  const auto feat = torch::randn({1, 2, 8, 8}, gen, torch::kDouble).requires_grad_(true);
  const auto rois = random_rois(4, 1, 64.0, gen);
  const auto weights = torch::randn({4, 2, 5, 5}, gen, torch::kDouble);
  const auto ours = torch::autograd::grad({(roi_align(feat, rois, 5, kScale) * weights).sum()}, {feat})[0];
  const auto ref = torch::autograd::grad(
      {(oracle::roi_align_grid_sample(feat, rois, 5, kScale, 2) * weights).sum()}, {feat})[0];
  EXPECT_LT((ours - ref).abs().max().item<double>(), 1e-9);
}

TEST(RoiAlign, EmptyRoiSet) {
  const auto out = roi_align(torch::ones({1, 3, 4, 4}), torch::zeros({0, 5}), 7, kScale);
  EXPECT_EQ(out.sizes(), (std::vector<int64_t>{0, 3, 7, 7}));
}
