#include "aiparse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace aiparse {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_same_shape(const LabelRaster& a, const LabelRaster& b, const char* what) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw std::invalid_argument(std::string(what) + ": raster shapes differ");
  }
}

// Per-class (intersection, union) pixel counts over labels present in
// either raster.
std::map<int, std::pair<long, long>> class_overlaps(const LabelRaster& pred, const LabelRaster& gt) {
  std::map<int, long> inter, pred_count, gt_count;
  const auto& p = pred.data();
  const auto& g = gt.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    ++pred_count[p[i]];
    ++gt_count[g[i]];
    if (p[i] == g[i]) ++inter[p[i]];
  }
  std::map<int, std::pair<long, long>> out;
  for (const auto& [cls, n] : pred_count) out[cls] = {0, 0};
  for (const auto& [cls, n] : gt_count) out[cls] = {0, 0};
  for (auto& [cls, iu] : out) {
    iu.first = inter[cls];
    iu.second = pred_count[cls] + gt_count[cls] - inter[cls];
  }
  return out;
}

}  // namespace

std::vector<double> default_thresholds() {
  std::vector<double> t;
  for (int k = 1; k <= 9; ++k) t.push_back(k / 10.0);
  return t;
}

MiouResult miou_global(const std::vector<LabelRaster>& preds, const std::vector<LabelRaster>& gts,
                       int num_classes) {
  if (preds.size() != gts.size()) throw std::invalid_argument("miou_global: image count mismatch");
  std::vector<long> inter(num_classes, 0), uni(num_classes, 0);
  for (std::size_t n = 0; n < preds.size(); ++n) {
    check_same_shape(preds[n], gts[n], "miou_global");
    const auto& p = preds[n].data();
    const auto& g = gts[n].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] >= num_classes || g[i] >= num_classes) {
        throw std::invalid_argument("miou_global: label exceeds num_classes");
      }
      if (p[i] == g[i]) {
        ++inter[p[i]];
        ++uni[p[i]];
      } else {
        ++uni[p[i]];
        ++uni[g[i]];
      }
    }
  }
  MiouResult out;
  out.per_class_iou.assign(num_classes, kNaN);
  double sum = 0;
  int present = 0;
  for (int c = 0; c < num_classes; ++c) {
    if (uni[c] == 0) continue;
    out.per_class_iou[c] = static_cast<double>(inter[c]) / uni[c];
    sum += out.per_class_iou[c];
    ++present;
  }
  out.miou = present > 0 ? sum / present : kNaN;
  return out;
}

double class_iou(const LabelRaster& pred, const LabelRaster& gt, int cls) {
  check_same_shape(pred, gt, "class_iou");
  long inter = 0, uni = 0;
  const auto& p = pred.data();
  const auto& g = gt.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool a = p[i] == cls, b = g[i] == cls;
    inter += a && b;
    uni += a || b;
  }
  return uni > 0 ? static_cast<double>(inter) / uni : kNaN;
}

double instance_part_miou(const LabelRaster& pred, const LabelRaster& gt) {
  check_same_shape(pred, gt, "instance_part_miou");
  double sum = 0;
  int n = 0;
  for (const auto& [cls, iu] : class_overlaps(pred, gt)) {
    if (cls == 0) continue;
    sum += static_cast<double>(iu.first) / iu.second;
    ++n;
  }
  return n > 0 ? sum / n : 1.0;
}

double region_iou(const LabelRaster& pred, const LabelRaster& gt) {
  check_same_shape(pred, gt, "region_iou");
  long inter = 0, uni = 0;
  const auto& p = pred.data();
  const auto& g = gt.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool a = p[i] != 0, b = g[i] != 0;
    inter += a && b;
    uni += a || b;
  }
  return uni > 0 ? static_cast<double>(inter) / uni : 0.0;
}

double all_points_ap(const std::vector<bool>& ranked_tp, int num_gt) {
  if (num_gt <= 0) return kNaN;
  const std::size_t n = ranked_tp.size();
  std::vector<double> precision(n), recall(n);
  long tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tp += ranked_tp[i] ? 1 : 0;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / num_gt;
  }
  // Precision envelope: max precision at any rank at or after i.
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0, prev_recall = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (recall[i] > prev_recall) {
      ap += (recall[i] - prev_recall) * precision[i];
      prev_recall = recall[i];
    }
  }
  return ap;
}

ApResult greedy_average_precision(const std::vector<MatchImage>& images, double threshold) {
  struct Ranked {
    double score;
    std::size_t image;
    std::size_t det;
  };
  std::vector<Ranked> ranked;
  int total_gt = 0;
  ApResult result;
  result.matched_det.resize(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& img = images[i];
    if (img.overlaps.size() != img.scores.size()) {
      throw std::invalid_argument("greedy_average_precision: overlap rows != detections");
    }
    total_gt += img.num_gt;
    result.matched_det[i].assign(static_cast<std::size_t>(img.num_gt), -1);
    for (std::size_t d = 0; d < img.scores.size(); ++d) ranked.push_back({img.scores[d], i, d});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Ranked& a, const Ranked& b) { return a.score > b.score; });

  std::vector<bool> tp;
  tp.reserve(ranked.size());
  for (const auto& r : ranked) {
    const auto& row = images[r.image].overlaps[r.det];
    auto& taken = result.matched_det[r.image];
    int best = -1;
    double best_overlap = -1;
    for (std::size_t g = 0; g < taken.size(); ++g) {
      if (taken[g] >= 0) continue;
      if (row.at(g) > best_overlap) {
        best_overlap = row[g];
        best = static_cast<int>(g);
      }
    }
    const bool hit = best >= 0 && best_overlap >= threshold;
    if (hit) taken[static_cast<std::size_t>(best)] = static_cast<int>(r.det);
    tp.push_back(hit);
  }
  if (total_gt == 0) {
    std::cerr << "warning: average precision undefined without ground-truth instances\n";
  }
  result.ap = all_points_ap(tp, total_gt);
  return result;
}

std::vector<MatchImage> build_match_inputs(const std::vector<ImagePrediction>& preds,
                                           const std::vector<Scene>& gts, OverlapKind kind) {
  if (preds.size() != gts.size()) throw std::invalid_argument("metrics: image count mismatch");
  std::vector<MatchImage> out(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& dets = preds[i].instances;
    const auto& gt = gts[i].instances;
    out[i].num_gt = static_cast<int>(gt.size());
    for (const auto& det : dets) {
      out[i].scores.push_back(det.score);
      std::vector<double> row;
      row.reserve(gt.size());
      for (const auto& g : gt) {
        switch (kind) {
          case OverlapKind::kPartMiou: row.push_back(instance_part_miou(det.parsing, g.parsing)); break;
          case OverlapKind::kRegion: row.push_back(region_iou(det.parsing, g.parsing)); break;
          case OverlapKind::kBox: row.push_back(box_iou(det.box, g.box)); break;
        }
      }
      out[i].overlaps.push_back(std::move(row));
    }
  }
  return out;
}

ApSweep ap_sweep(const std::vector<MatchImage>& inputs, const std::vector<double>& thresholds) {
  ApSweep sweep;
  for (double t : thresholds) sweep.per_threshold.push_back(greedy_average_precision(inputs, t).ap);
  sweep.mean = thresholds.empty()
                   ? kNaN
                   : std::accumulate(sweep.per_threshold.begin(), sweep.per_threshold.end(), 0.0) /
                         static_cast<double>(thresholds.size());
  return sweep;
}

double pcp_50(const std::vector<ImagePrediction>& preds, const std::vector<Scene>& gts) {
  const auto inputs = build_match_inputs(preds, gts, OverlapKind::kPartMiou);
  const auto match = greedy_average_precision(inputs, 0.5);
  double sum = 0;
  long n_instances = 0;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    for (std::size_t g = 0; g < gts[i].instances.size(); ++g) {
      ++n_instances;
      const int det = match.matched_det[i][g];
      if (det < 0) continue;
      const auto& gt_inst = gts[i].instances[g];
      const auto& pred = preds[i].instances[static_cast<std::size_t>(det)].parsing;
      const auto parts = distinct_labels(gt_inst.parsing);
      if (parts.empty()) continue;
      int correct = 0;
      for (int part : parts) correct += class_iou(pred, gt_inst.parsing, part) > 0.5;
      sum += static_cast<double>(correct) / static_cast<double>(parts.size());
    }
  }
  return n_instances > 0 ? sum / static_cast<double>(n_instances) : kNaN;
}

double map_bbox(const std::vector<ImagePrediction>& preds, const std::vector<Scene>& gts,
                double iou_threshold) {
  return greedy_average_precision(build_match_inputs(preds, gts, OverlapKind::kBox), iou_threshold).ap;
}

MetricReport evaluate(const std::vector<ImagePrediction>& preds, const std::vector<Scene>& gts,
                      int num_classes, const std::vector<double>& thresholds) {
  MetricReport report;
  std::vector<LabelRaster> pred_global, gt_global;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    pred_global.push_back(preds[i].global_parsing);
    gt_global.push_back(gts.at(i).global_parsing);
  }
  const auto miou = miou_global(pred_global, gt_global, num_classes);
  report.miou = miou.miou;
  report.per_class_iou = miou.per_class_iou;

  const auto part_inputs = build_match_inputs(preds, gts, OverlapKind::kPartMiou);
  const auto part = ap_sweep(part_inputs, thresholds);
  report.thresholds = thresholds;
  report.ap_p_per_threshold = part.per_threshold;
  report.ap_p_vol = part.mean;
  report.ap_p_50 = greedy_average_precision(part_inputs, 0.5).ap;
  report.pcp_50 = pcp_50(preds, gts);

  const auto region = ap_sweep(build_match_inputs(preds, gts, OverlapKind::kRegion), thresholds);
  report.ap_r_per_threshold = region.per_threshold;
  report.ap_r_vol = region.mean;
  report.map_bbox = map_bbox(preds, gts);
  return report;
}

namespace {

nlohmann::json nan_safe(const std::vector<double>& v) {
  auto arr = nlohmann::json::array();
  for (double x : v) arr.push_back(std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x));
  return arr;
}

nlohmann::json nan_safe(double x) { return std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x); }

double read_double(const nlohmann::json& j) { return j.is_null() ? kNaN : j.get<double>(); }

std::vector<double> read_vector(const nlohmann::json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(read_double(x));
  return v;
}

}  // namespace

std::string report_to_json(const MetricReport& r) {
  nlohmann::json j;
  j["miou"] = nan_safe(r.miou);
  j["per_class_iou"] = nan_safe(r.per_class_iou);
  j["ap_p_50"] = nan_safe(r.ap_p_50);
  j["ap_p_vol"] = nan_safe(r.ap_p_vol);
  j["pcp_50"] = nan_safe(r.pcp_50);
  j["ap_r_vol"] = nan_safe(r.ap_r_vol);
  j["map_bbox"] = nan_safe(r.map_bbox);
  j["thresholds"] = r.thresholds;
  j["ap_p_per_threshold"] = nan_safe(r.ap_p_per_threshold);
  j["ap_r_per_threshold"] = nan_safe(r.ap_r_per_threshold);
  return j.dump(2);
}

MetricReport report_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  MetricReport r;
  r.miou = read_double(j.at("miou"));
  r.per_class_iou = read_vector(j.at("per_class_iou"));
  r.ap_p_50 = read_double(j.at("ap_p_50"));
  r.ap_p_vol = read_double(j.at("ap_p_vol"));
  r.pcp_50 = read_double(j.at("pcp_50"));
  r.ap_r_vol = read_double(j.at("ap_r_vol"));
  r.map_bbox = read_double(j.at("map_bbox"));
  r.thresholds = j.value("thresholds", std::vector<double>{});
  if (j.contains("ap_p_per_threshold")) r.ap_p_per_threshold = read_vector(j["ap_p_per_threshold"]);
  if (j.contains("ap_r_per_threshold")) r.ap_r_per_threshold = read_vector(j["ap_r_per_threshold"]);
  return r;
}

std::string report_table(const MetricReport& r) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "metric      value\n";
  out << "mIoU        " << r.miou << "\n";
  out << "AP^p_50     " << r.ap_p_50 << "\n";
  out << "AP^p_vol    " << r.ap_p_vol << "\n";
  out << "PCP_50      " << r.pcp_50 << "\n";
  out << "AP^r_vol    " << r.ap_r_vol << "\n";
  out << "mAP^bbox    " << r.map_bbox << "\n";
  for (std::size_t c = 0; c < r.per_class_iou.size(); ++c) {
    out << "IoU[" << c << "]" << std::string(c < 10 ? 6 : 5, ' ') << r.per_class_iou[c] << "\n";
  }
  return out.str();
}

}  // namespace aiparse
