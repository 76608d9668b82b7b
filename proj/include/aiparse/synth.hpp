#pragma once

#include <cstdint>
#include <vector>

#include "aiparse/geometry.hpp"
#include "aiparse/raster.hpp"

namespace aiparse {

struct GeneratorConfig {
  int image_size = 128;
  /// Part-category count including background.
  int k_parts = 7;
  int n_instances_min = 1;
  int n_instances_max = 4;
  double overlap_prob = 0.3;
  double noise_sigma = 0.04;
};

/// Throws std::invalid_argument for k_parts < 2, images smaller than 32x32
/// or an empty instance count range.
void validate(const GeneratorConfig& cfg);

struct GroundTruthInstance {
  Box box;
  /// Full-image raster, nonzero only on this instance's visible pixels.
  LabelRaster parsing;
  /// Sorted distinct nonzero labels of `parsing`.
  std::vector<int> part_ids;

  bool operator==(const GroundTruthInstance&) const = default;
};

struct Scene {
  RgbImage image;
  std::vector<GroundTruthInstance> instances;
  LabelRaster global_parsing;
  std::uint64_t seed = 0;

  int height() const { return image.height(); }
  int width() const { return image.width(); }
  bool operator==(const Scene&) const = default;
};

/// Deterministic in (seed, cfg). Instances are vertical stacks of k_parts-1
/// adjacent blobs; later instances occlude earlier ones.
Scene generate_scene(std::uint64_t seed, const GeneratorConfig& cfg);

/// Pixel is an edge iff any in-bounds 8-neighbour carries a different label.
EdgeRaster extract_edge_labels(const LabelRaster& parsing);

/// Tight box around the nonzero pixels; invalid (all-zero) box if empty.
Box tight_box(const LabelRaster& raster);

std::vector<int> distinct_labels(const LabelRaster& raster);

/// Recomputes boxes, part ids and the global raster from instance rasters,
/// dropping instances that lost all their pixels.
void normalize_instances(Scene& scene);

}  // namespace aiparse
