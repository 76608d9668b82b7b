#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "aiparse/checkpoint.hpp"
#include "aiparse/config.hpp"
#include "aiparse/loss_log.hpp"
#include "aiparse/model.hpp"
#include "aiparse/synth.hpp"

namespace aiparse {

/// Raised when a loss term is NaN or infinite; the message names the term.
class NonFiniteLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// L_det + L_pred + L_refine; throws NonFiniteLoss naming the first
/// non-finite term.
torch::Tensor total_loss(const torch::Tensor& det, const torch::Tensor& pred, const torch::Tensor& refine);

/// Momentum SGD with coupled weight decay (d = g + wd * p; buf = m * buf + d,
/// initialised to d on the first step; p -= lr * buf).
class Sgd {
 public:
  Sgd(std::vector<std::pair<std::string, torch::Tensor>> params, double momentum, double weight_decay);

  void zero_grad();
  void step(double lr);

  /// Momentum buffers as "optim/<name>".
  std::map<std::string, torch::Tensor> state() const;
  void load_state(const std::map<std::string, torch::Tensor>& tensors);

 private:
  std::vector<std::pair<std::string, torch::Tensor>> params_;
  std::vector<torch::Tensor> buffers_;
  double momentum_;
  double weight_decay_;
};

/// base_lr * 0.1^(number of decay epochs <= epoch), times a linear warmup
/// from 1/3 to 1 over the first warmup_iters iterations. Epochs are 0-based.
double learning_rate(const Config& cfg, int epoch, std::int64_t iteration);

/// Zooms the scene about its centre by `scale` on the same canvas (nearest
/// neighbour; the image replicates its border, labels pad with background)
/// and recomputes boxes, dropping instances that vanish.
Scene rescale_scene(const Scene& scene, double scale);

/// Box perturbed by up to +-jitter of its size per side, clipped to the image.
Box jitter_box(const Box& box, double jitter, int width, int height, std::mt19937_64& rng);

/// Column names of the loss logs, in order.
const std::vector<std::string>& loss_columns();

struct StepLosses {
  double cls = 0, reg = 0, center = 0, det = 0;
  double parsing = 0, edge = 0, pred = 0;
  double miou = 0, score = 0, refine = 0;
  double total = 0;
};

struct TrainOptions {
  /// Checkpoint written after every completed epoch (kept on divergence).
  std::filesystem::path checkpoint;
  /// Per-epoch and per-step CSV logs; empty paths disable writing.
  std::filesystem::path epoch_log;
  std::filesystem::path step_log;
  bool verbose = false;
};

struct TrainResult {
  LossLog epochs;
  LossLog steps;
  bool diverged = false;
  std::string message;
  int completed_epochs = 0;
};

/// Deterministic given cfg.seed. Model initialisation uses torch's global
/// generator seeded from cfg.seed.
TrainResult train(const Config& cfg, const std::vector<Scene>& scenes, const TrainOptions& options);

/// One optimisation step's forward pass on a batch; exposed for tests.
struct BatchLosses {
  torch::Tensor cls, reg, center, det, parsing, edge, pred, miou, score, refine, total;
  int num_rois = 0;
};

BatchLosses compute_batch_losses(AIParsing& model, const std::vector<Scene>& batch, std::mt19937_64& rng);

StepLosses to_step_losses(const BatchLosses& losses);

}  // namespace aiparse
