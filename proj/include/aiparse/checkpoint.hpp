#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <map>
#include <string>

#include "aiparse/config.hpp"
#include "aiparse/model.hpp"

namespace aiparse {

/// Named float32 tensors plus the metadata needed to rebuild and resume.
///
/// File layout: the 8 bytes "AIPCKPT1", a little-endian uint64 header
/// length, a JSON header {format_version, config, epoch, rng_state,
/// tensors: [{name, shape, offset, nbytes}]}, then the raw float32 payload.
/// Tensor names are "model/<parameter>" and "optim/<parameter>" (momentum).
struct Checkpoint {
  Config cfg;
  /// Number of completed epochs.
  int epoch = 0;
  /// Serialized std::mt19937_64 state of the trainer.
  std::string rng_state;
  std::map<std::string, torch::Tensor> tensors;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies every "model/<name>" tensor into `model`; throws on a missing or
/// mis-shaped entry.
void load_model_state(AIParsing& model, const Checkpoint& ckpt);

/// Parameters of `model` as "model/<name>" entries (detached copies).
std::map<std::string, torch::Tensor> model_state(AIParsing& model);

/// Rebuilds the model from the stored config and loads its parameters.
AIParsing model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace aiparse
