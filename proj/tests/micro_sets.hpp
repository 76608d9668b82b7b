// Hand-built scenes and random micro-datasets for metric tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "aiparse/metrics.hpp"
#include "aiparse/synth.hpp"

namespace micro {

using namespace aiparse;


inline LabelRaster fill_rect(LabelRaster r, int r0, int c0, int r1, int c1, int label) {
  for (int i = r0; i < r1; ++i) {
    for (int j = c0; j < c1; ++j) r(i, j) = static_cast<std::uint8_t>(label);
  }
  return r;
}

inline Scene make_scene(int h, int w, std::vector<LabelRaster> instances) {
  Scene s;
  s.image = RgbImage(h, w);
  for (auto& r : instances) s.instances.push_back({Box{}, std::move(r), {}});
  normalize_instances(s);
  return s;
}

inline InstanceRecord record(const LabelRaster& parsing, double score) {
  InstanceRecord r;
  r.box = tight_box(parsing);
  r.det_score = score;
  r.score = score;
  r.parsing = parsing;
  return r;
}

inline ImagePrediction perfect_prediction(const Scene& s) {
  ImagePrediction p;
  double score = 0.9;
  for (const auto& inst : s.instances) {
    p.instances.push_back(record(inst.parsing, score));
    score -= 0.1;
  }
  p.global_parsing = s.global_parsing;
  return p;
}

inline ImagePrediction paste(std::vector<InstanceRecord> instances, int h, int w) {
  ImagePrediction p;
  std::sort(instances.begin(), instances.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  p.global_parsing = LabelRaster(h, w, 0);
  for (auto it = instances.rbegin(); it != instances.rend(); ++it) {
    for (std::size_t i = 0; i < it->parsing.size(); ++i) {
      if (it->parsing.data()[i]) p.global_parsing.data()[i] = it->parsing.data()[i];
    }
  }
  p.instances = std::move(instances);
  return p;
}

constexpr int kClasses = 5;

struct MicroSet {
  std::vector<ImagePrediction> preds;
  std::vector<Scene> gts;
};

// A random person-like instance: a rectangle split into horizontal part bands.
inline LabelRaster random_instance(std::mt19937_64& rng, int h, int w) {
  std::uniform_int_distribution<int> pos(0, std::min(h, w) - 8);
  std::uniform_int_distribution<int> ext(6, 14);
  std::uniform_int_distribution<int> part(1, kClasses - 1);
  const int r0 = pos(rng), c0 = pos(rng);
  const int r1 = std::min(h, r0 + ext(rng)), c1 = std::min(w, c0 + ext(rng));
  LabelRaster r(h, w, 0);
  const int bands = 1 + static_cast<int>(rng() % 3);
  const int band_h = std::max(1, (r1 - r0) / bands);
  for (int i = r0; i < r1; ++i) {
    const int b = std::min(bands - 1, (i - r0) / band_h);
    for (int j = c0; j < c1; ++j) r(i, j) = static_cast<std::uint8_t>(1 + (b * 7 + c0) % (kClasses - 1));
  }
  if (rng() % 2) r(r0, c0) = static_cast<std::uint8_t>(part(rng));
  return r;
}

// Perturb a GT instance: shift, relabel a band, erode, or leave intact.
inline LabelRaster perturb(std::mt19937_64& rng, const LabelRaster& gt) {
  LabelRaster out(gt.height(), gt.width(), 0);
  const int dr = static_cast<int>(rng() % 5) - 2, dc = static_cast<int>(rng() % 5) - 2;
  const int mode = static_cast<int>(rng() % 4);
  for (int i = 0; i < gt.height(); ++i) {
    for (int j = 0; j < gt.width(); ++j) {
      const int si = i - dr, sj = j - dc;
      if (si < 0 || sj < 0 || si >= gt.height() || sj >= gt.width()) continue;
      std::uint8_t v = gt(si, sj);
      if (mode == 1 && v != 0 && i % 3 == 0) v = static_cast<std::uint8_t>(1 + v % (kClasses - 1));
      if (mode == 2 && v != 0 && (i + j) % 4 == 0) v = 0;
      out(i, j) = v;
    }
  }
  if (mode == 3) out = gt;
  return out;
}

inline MicroSet random_micro_set(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MicroSet set;
  const int n_images = 1 + static_cast<int>(rng() % 3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int im = 0; im < n_images; ++im) {
    const int h = 16 + static_cast<int>(rng() % 17), w = 16 + static_cast<int>(rng() % 17);
    std::vector<LabelRaster> gt;
    const int n_gt = static_cast<int>(rng() % 4);
    for (int k = 0; k < n_gt; ++k) gt.push_back(random_instance(rng, h, w));
    auto scene = make_scene(h, w, gt);
    std::vector<InstanceRecord> dets;
    for (const auto& inst : scene.instances) {
      if (u(rng) < 0.2) continue;  // missed
      // Coarse scores so cross-image ties occur.
      dets.push_back(record(perturb(rng, inst.parsing), std::round(u(rng) * 4) / 4));
    }
    const int n_fp = static_cast<int>(rng() % 2);
    for (int k = 0; k < n_fp && dets.size() < 3; ++k) {
      dets.push_back(record(random_instance(rng, h, w), std::round(u(rng) * 4) / 4));
    }
    set.preds.push_back(paste(dets, h, w));
    set.gts.push_back(std::move(scene));
  }
  return set;
}

}  // namespace micro
