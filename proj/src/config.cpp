#include "aiparse/config.hpp"

#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>

namespace aiparse {
using nlohmann::json;

// Plain fields serialized under their own names.
#define AIPARSE_CONFIG_FIELDS(X)                                                                \
  X(image_size) X(k_parts) X(n_instances_min) X(n_instances_max) X(overlap_prob) X(n_train)     \
  X(n_val) X(base_seed) X(channels) X(backbone_width) X(tower_convs) X(roi_size)                \
  X(use_edge_branch) X(use_gn) X(use_nonlocal) X(score_threshold) X(nms_iou) X(max_detections)  \
  X(focal_gamma) X(focal_alpha) X(level_ranges) X(alpha) X(beta) X(theta) X(gamma)              \
  X(use_miou_loss) X(use_miou_score) X(epochs) X(batch_size) X(base_lr) X(lr_decay_epochs)      \
  X(momentum) X(weight_decay) X(warmup_iters) X(scale_jitter) X(roi_jitter) X(rois_per_gt)      \
  X(max_detected_rois) X(divergence_threshold) X(seed)

ContextModule parse_context_module(const std::string& name) {
  if (name == "pgec") return ContextModule::kPgec;
  if (name == "psp") return ContextModule::kPsp;
  if (name == "aspp") return ContextModule::kAspp;
  if (name == "none") return ContextModule::kNone;
  throw std::invalid_argument("unknown context_module '" + name + "' (pgec|psp|aspp|none)");
}

std::string to_string(ContextModule m) {
  switch (m) {
    case ContextModule::kPgec: return "pgec";
    case ContextModule::kPsp: return "psp";
    case ContextModule::kAspp: return "aspp";
    case ContextModule::kNone: return "none";
  }
  return "none";
}

GeneratorConfig Config::generator() const {
  GeneratorConfig g;
  g.image_size = image_size;
  g.k_parts = k_parts;
  g.n_instances_min = n_instances_min;
  g.n_instances_max = n_instances_max;
  g.overlap_prob = overlap_prob;
  return g;
}

LevelRanges Config::ranges() const {
  if (level_ranges.empty()) return scaled_level_ranges(image_size / 800.0);
  if (level_ranges.size() != kNumLevels - 1) {
    throw std::invalid_argument("level_ranges needs 4 upper bounds (P3..P6)");
  }
  LevelRanges r{};
  double lo = 0;
  for (std::size_t i = 0; i + 1 < kNumLevels; ++i) {
    r[i] = {lo, level_ranges[i]};
    lo = level_ranges[i];
  }
  r[kNumLevels - 1] = {lo, std::numeric_limits<double>::infinity()};
  return r;
}

void Config::validate() const {
  aiparse::validate(generator());
  if (roi_size != 14 && roi_size != 32 && roi_size != 48) {
    throw std::invalid_argument("roi_size must be one of 14, 32, 48");
  }
  if (channels < 8 || channels % 8 != 0) throw std::invalid_argument("channels must be a multiple of 8");
  if (backbone_width < 8 || backbone_width % 8 != 0) {
    throw std::invalid_argument("backbone_width must be a multiple of 8");
  }
  for (double w : {alpha, beta, theta, gamma, weight_decay, momentum}) {
    if (w < 0) throw std::invalid_argument("loss weights and optimizer coefficients must be non-negative");
  }
  if (epochs < 1 || batch_size < 1) throw std::invalid_argument("epochs and batch_size must be positive");
  if (max_detections < 1) throw std::invalid_argument("max_detections must be positive");
  ranges();
}

std::string config_to_json(const Config& cfg) {
  json j;
#define AIPARSE_TO_JSON(name) j[#name] = cfg.name;
  AIPARSE_CONFIG_FIELDS(AIPARSE_TO_JSON)
#undef AIPARSE_TO_JSON
  j["context_module"] = to_string(cfg.context_module);
  return j.dump(2);
}

Config config_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  Config cfg;
  std::set<std::string> known = {"context_module"};
#define AIPARSE_FROM_JSON(name)                                            \
  known.insert(#name);                                                     \
  if (j.contains(#name)) j.at(#name).get_to(cfg.name);
  AIPARSE_CONFIG_FIELDS(AIPARSE_FROM_JSON)
#undef AIPARSE_FROM_JSON
  if (j.contains("context_module")) {
    cfg.context_module = parse_context_module(j.at("context_module").get<std::string>());
  }
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

void save_config(const Config& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config " + path.string());
  out << config_to_json(cfg) << "\n";
}

void apply_overrides(Config& cfg, const std::vector<std::string>& overrides) {
  if (overrides.empty()) return;
  json j = json::parse(config_to_json(cfg));
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("override '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    if (!j.contains(key)) throw std::invalid_argument("config: unknown key '" + key + "'");
    j[key] = json::parse(value, nullptr, false);
    if (j[key].is_discarded()) j[key] = value;
  }
  cfg = config_from_json(j.dump());
}

void apply_seed_env(Config& cfg) {
  const char* env = std::getenv(kSeedEnvVar);
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') {
    throw std::invalid_argument(std::string(kSeedEnvVar) + " must be an unsigned integer");
  }
  cfg.seed = v;
  cfg.base_seed = v;
}

}  // namespace aiparse
