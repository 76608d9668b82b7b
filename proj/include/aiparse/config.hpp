#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aiparse/assign.hpp"
#include "aiparse/refine.hpp"
#include "aiparse/synth.hpp"

namespace aiparse {

/// Environment variable overriding `seed` and `base_seed`.
inline constexpr const char* kSeedEnvVar = "AIPARSE_SEED";

enum class ContextModule { kPgec, kPsp, kAspp, kNone };

ContextModule parse_context_module(const std::string& name);
std::string to_string(ContextModule m);

/// Every tunable of the pipeline. Serialized as one flat JSON object whose
/// keys are the field names below.
struct Config {
  // Scene generator.
  int image_size = 128;
  int k_parts = 7;
  int n_instances_min = 1;
  int n_instances_max = 4;
  double overlap_prob = 0.3;
  int n_train = 200;
  int n_val = 50;
  std::uint64_t base_seed = 1234;

  // Model.
  int channels = 64;
  int backbone_width = 32;
  int tower_convs = 2;
  int roi_size = 32;
  bool use_edge_branch = true;
  bool use_gn = true;
  bool use_nonlocal = true;
  ContextModule context_module = ContextModule::kPgec;

  // Detection.
  double score_threshold = 0.05;
  double nms_iou = 0.6;
  int max_detections = 50;
  double focal_gamma = 2.0;
  double focal_alpha = 0.25;
  /// Upper bounds of P3..P6; empty means the FCOS ranges scaled by
  /// image_size / 800.
  std::vector<double> level_ranges;

  // Loss weights.
  double alpha = 2.0;
  double beta = 2.0;
  double theta = 2.0;
  double gamma = 1.0;
  bool use_miou_loss = true;
  bool use_miou_score = true;

  // Optimisation.
  int epochs = 60;
  int batch_size = 8;
  double base_lr = 0.005;
  std::vector<int> lr_decay_epochs = {40, 52};
  double momentum = 0.9;
  double weight_decay = 0.0001;
  int warmup_iters = 30;
  double scale_jitter = 0.125;
  double roi_jitter = 0.1;
  int rois_per_gt = 2;
  int max_detected_rois = 8;
  double divergence_threshold = 1e4;
  std::uint64_t seed = 7;

  GeneratorConfig generator() const;
  LevelRanges ranges() const;
  RefineWeights refine_weights() const { return {theta, gamma}; }

  /// Throws std::invalid_argument on inconsistent values.
  void validate() const;
};

std::string config_to_json(const Config& cfg);
/// Unknown keys are rejected so typos fail loudly.
Config config_from_json(const std::string& text);
Config load_config(const std::filesystem::path& path);
void save_config(const Config& cfg, const std::filesystem::path& path);

/// Applies `key=value` overrides (value parsed as JSON, falling back to a
/// bare string).
void apply_overrides(Config& cfg, const std::vector<std::string>& overrides);

/// Applies AIPARSE_SEED to both seeds when set.
void apply_seed_env(Config& cfg);

}  // namespace aiparse
