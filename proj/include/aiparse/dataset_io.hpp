#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "aiparse/raster.hpp"
#include "aiparse/synth.hpp"

namespace aiparse {

/// Raised for missing, empty or corrupt datasets. The message names the
/// offending scene when one is involved.
class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Netpbm (binary P6 / P5) I/O. Throws DatasetError on malformed files.
void write_ppm(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_ppm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const LabelRaster& raster);
LabelRaster read_pgm(const std::filesystem::path& path);

/// Writes `scenes` as <dir>/scene_NNNNN/{image.ppm, global.pgm,
/// inst_MM.pgm, meta.json}. Creates `dir` if needed.
void save_dataset(const std::vector<Scene>& scenes, const std::filesystem::path& dir);

/// Loads every scene_* subdirectory in lexical order.
std::vector<Scene> load_dataset(const std::filesystem::path& dir);

std::string scene_dirname(std::size_t index);

}  // namespace aiparse
