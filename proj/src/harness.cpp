#include "aiparse/harness.hpp"

#include <stdexcept>

#include "aiparse/dataset_io.hpp"

namespace aiparse {

std::uint64_t scene_seed(const Config& cfg, const std::string& split, std::size_t index) {
  if (split == "train") return cfg.base_seed + index;
  if (split == "val") return cfg.base_seed + 1000000 + index;
  throw std::invalid_argument("unknown split '" + split + "' (train|val)");
}

std::vector<Scene> generate_split(const Config& cfg, const std::string& split) {
  const int n = split == "train" ? cfg.n_train : cfg.n_val;
  const auto gen = cfg.generator();
  std::vector<Scene> scenes;
  scenes.reserve(n);
  for (int i = 0; i < n; ++i) scenes.push_back(generate_scene(scene_seed(cfg, split, i), gen));
  return scenes;
}

void generate_dataset(const Config& cfg, const std::filesystem::path& dir) {
  cfg.validate();
  std::filesystem::create_directories(dir);
  for (const char* split : {"train", "val"}) save_dataset(generate_split(cfg, split), dir / split);
  save_config(cfg, dir / "config.json");
}

std::filesystem::path split_dir(const std::filesystem::path& dir, const std::string& split) {
  const auto sub = dir / split;
  return std::filesystem::is_directory(sub) ? sub : dir;
}

}  // namespace aiparse
