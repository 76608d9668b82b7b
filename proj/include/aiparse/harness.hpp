#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "aiparse/config.hpp"
#include "aiparse/synth.hpp"

namespace aiparse {

/// Seed of scene `index` in a split: base_seed + index for "train",
/// base_seed + 1000000 + index for "val".
std::uint64_t scene_seed(const Config& cfg, const std::string& split, std::size_t index);

/// n_train or n_val scenes of `split`.
std::vector<Scene> generate_split(const Config& cfg, const std::string& split);

/// Writes <dir>/train and <dir>/val plus <dir>/config.json.
void generate_dataset(const Config& cfg, const std::filesystem::path& dir);

/// <dir>/<split> when it exists, otherwise <dir> itself.
std::filesystem::path split_dir(const std::filesystem::path& dir, const std::string& split);

}  // namespace aiparse
