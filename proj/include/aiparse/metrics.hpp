#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aiparse/geometry.hpp"
#include "aiparse/raster.hpp"
#include "aiparse/synth.hpp"

namespace aiparse {

/// One predicted human instance.
struct InstanceRecord {
  Box box;
  double det_score = 0;
  std::optional<double> miou_score;
  /// Ranking score (fused when a mIoU score is available).
  double score = 0;
  /// Full-image raster of the instance's parts.
  LabelRaster parsing;
};

struct ImagePrediction {
  /// Sorted by descending score.
  std::vector<InstanceRecord> instances;
  LabelRaster global_parsing;
};

struct MiouResult {
  double miou = 0;
  /// NaN for classes with zero union over the dataset.
  std::vector<double> per_class_iou;
};

struct MetricReport {
  double miou = 0;
  std::vector<double> per_class_iou;
  double ap_p_50 = 0;
  double ap_p_vol = 0;
  double pcp_50 = 0;
  double ap_r_vol = 0;
  double map_bbox = 0;
  std::vector<double> thresholds;
  std::vector<double> ap_p_per_threshold;
  std::vector<double> ap_r_per_threshold;
};

/// 0.1, 0.2, ..., 0.9.
std::vector<double> default_thresholds();

/// Dataset-aggregated per-class IoU over classes [0, num_classes); mean over
/// classes with nonzero union.
MiouResult miou_global(const std::vector<LabelRaster>& preds, const std::vector<LabelRaster>& gts,
                       int num_classes);

/// Per-class IoU of label `cls` between two rasters; NaN if neither has it.
double class_iou(const LabelRaster& pred, const LabelRaster& gt, int cls);

/// Mean IoU over part classes (nonzero) present in either raster; 1 if
/// both are empty.
double instance_part_miou(const LabelRaster& pred, const LabelRaster& gt);

/// IoU of the binary foreground masks.
double region_iou(const LabelRaster& pred, const LabelRaster& gt);

/// Per-image input of the greedy AP protocol.
struct MatchImage {
  std::vector<double> scores;
  /// overlaps[d][g] between detection d and ground truth g.
  std::vector<std::vector<double>> overlaps;
  int num_gt = 0;
};

struct ApResult {
  double ap = 0;
  /// matched_det[image][gt] = detection index or -1.
  std::vector<std::vector<int>> matched_det;
};

/// Detections ranked by score across images (ties: image then detection
/// order); each is matched to the unmatched GT of highest overlap if that
/// overlap >= threshold. All-points interpolated AP. NaN when there is no GT.
ApResult greedy_average_precision(const std::vector<MatchImage>& images, double threshold);

/// All-points interpolated AP from a ranked TP/FP sequence.
double all_points_ap(const std::vector<bool>& ranked_tp, int num_gt);

enum class OverlapKind { kPartMiou, kRegion, kBox };

std::vector<MatchImage> build_match_inputs(const std::vector<ImagePrediction>& preds,
                                           const std::vector<Scene>& gts, OverlapKind kind);

struct ApSweep {
  std::vector<double> per_threshold;
  double mean = 0;
};

ApSweep ap_sweep(const std::vector<MatchImage>& inputs, const std::vector<double>& thresholds);

/// Mean over all GT instances of the fraction of GT parts with IoU > 0.5
/// against the AP^p_50 match; unmatched instances count 0.
double pcp_50(const std::vector<ImagePrediction>& preds, const std::vector<Scene>& gts);

double map_bbox(const std::vector<ImagePrediction>& preds, const std::vector<Scene>& gts,
                double iou_threshold = 0.5);

MetricReport evaluate(const std::vector<ImagePrediction>& preds, const std::vector<Scene>& gts,
                      int num_classes,
                      const std::vector<double>& thresholds = default_thresholds());

std::string report_to_json(const MetricReport& report);
MetricReport report_from_json(const std::string& text);
std::string report_table(const MetricReport& report);

}  // namespace aiparse
