#include "aiparse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

namespace aiparse {
namespace {

constexpr int kMinVisiblePixels = 16;

struct Rgb {
  double r, g, b;
};

Rgb hsv_to_rgb(double h, double s, double v) {
  const double c = v * s;
  const double hp = std::fmod(h * 6.0, 6.0);
  const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  Rgb out{0, 0, 0};
  switch (static_cast<int>(hp)) {
    case 0: out = {c, x, 0}; break;
    case 1: out = {x, c, 0}; break;
    case 2: out = {0, c, x}; break;
    case 3: out = {0, x, c}; break;
    case 4: out = {x, 0, c}; break;
    default: out = {c, 0, x}; break;
  }
  const double m = v - c;
  return {out.r + m, out.g + m, out.b + m};
}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

struct Figure {
  double left, top, width, height;
};

// Draws one figure into `owner`/`labels`, overwriting whatever is below.
void draw_figure(const Figure& fig, int n_parts, int instance, std::mt19937_64& rng,
                 Grid<int>& owner, LabelRaster& labels) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> weights(n_parts);
  for (int k = 0; k < n_parts; ++k) weights[k] = 0.6 + 0.8 * unit(rng);
  double total = 0;
  for (double w : weights) total += w;

  const double cx = fig.left + fig.width / 2.0;
  double y = fig.top;
  for (int k = 0; k < n_parts; ++k) {
    const double band_h = fig.height * weights[k] / total;
    const double y_end = y + band_h;
    // The first band is a narrower "head"; the others vary in width.
    const double scale = (k == 0 && n_parts > 1) ? 0.45 + 0.15 * unit(rng) : 0.6 + 0.4 * unit(rng);
    const double half_w = 0.5 * fig.width * scale;
    const double shift = (unit(rng) - 0.5) * 0.3 * fig.width * 0.5;
    const double yc = 0.5 * (y + y_end);
    const int row_lo = std::max(0, static_cast<int>(std::floor(y)));
    const int row_hi = std::min(labels.height() - 1, static_cast<int>(std::ceil(y_end)) - 1);
    for (int row = row_lo; row <= row_hi; ++row) {
      const double py = row + 0.5;
      if (py < y || py >= y_end) continue;
      const double u = (py - yc) / (0.5 * band_h);
      const double hw = half_w * (0.75 + 0.25 * std::sqrt(std::max(0.0, 1.0 - u * u)));
      const int col_lo = std::max(0, static_cast<int>(std::floor(cx + shift - hw)));
      const int col_hi = std::min(labels.width() - 1, static_cast<int>(std::ceil(cx + shift + hw)));
      for (int col = col_lo; col <= col_hi; ++col) {
        const double px = col + 0.5;
        if (std::fabs(px - (cx + shift)) > hw) continue;
        owner(row, col) = instance;
        labels(row, col) = static_cast<std::uint8_t>(k + 1);
      }
    }
    y = y_end;
  }
}

bool boxes_overlap(const Figure& a, const Figure& b) {
  return a.left < b.left + b.width && b.left < a.left + a.width && a.top < b.top + b.height &&
         b.top < a.top + a.height;
}

}  // namespace

void validate(const GeneratorConfig& cfg) {
  if (cfg.k_parts < 2) throw std::invalid_argument("generator: k_parts must be >= 2");
  if (cfg.k_parts > 255) throw std::invalid_argument("generator: k_parts must be <= 255");
  if (cfg.image_size < 32) throw std::invalid_argument("generator: image_size must be >= 32");
  if (cfg.n_instances_min < 1 || cfg.n_instances_max < cfg.n_instances_min) {
    throw std::invalid_argument("generator: invalid instance count range");
  }
  if (cfg.overlap_prob < 0 || cfg.overlap_prob > 1) {
    throw std::invalid_argument("generator: overlap_prob must lie in [0,1]");
  }
}

Box tight_box(const LabelRaster& raster) {
  int min_r = raster.height(), min_c = raster.width(), max_r = -1, max_c = -1;
  for (int r = 0; r < raster.height(); ++r) {
    for (int c = 0; c < raster.width(); ++c) {
      if (raster(r, c) == 0) continue;
      min_r = std::min(min_r, r);
      max_r = std::max(max_r, r);
      min_c = std::min(min_c, c);
      max_c = std::max(max_c, c);
    }
  }
  if (max_r < 0) return {};
  return {static_cast<double>(min_c), static_cast<double>(min_r), max_c + 1.0, max_r + 1.0};
}

std::vector<int> distinct_labels(const LabelRaster& raster) {
  std::set<int> seen;
  for (auto v : raster.data()) {
    if (v != 0) seen.insert(v);
  }
  return {seen.begin(), seen.end()};
}

void normalize_instances(Scene& scene) {
  std::vector<GroundTruthInstance> kept;
  for (auto& inst : scene.instances) {
    inst.box = tight_box(inst.parsing);
    if (!inst.box.valid()) continue;
    inst.part_ids = distinct_labels(inst.parsing);
    kept.push_back(std::move(inst));
  }
  scene.instances = std::move(kept);
  scene.global_parsing = LabelRaster(scene.height(), scene.width(), 0);
  for (const auto& inst : scene.instances) {
    const auto& src = inst.parsing.data();
    auto& dst = scene.global_parsing.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
      if (src[i] != 0) dst[i] = src[i];
    }
  }
}

Scene generate_scene(std::uint64_t seed, const GeneratorConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int size = cfg.image_size;
  const int n_parts = cfg.k_parts - 1;

  std::uniform_int_distribution<int> count_dist(cfg.n_instances_min, cfg.n_instances_max);
  const int n_instances = count_dist(rng);

  std::vector<Figure> figures;
  for (int i = 0; i < n_instances; ++i) {
    const double height = size * (0.35 + 0.35 * unit(rng));
    const double width = std::max(6.0, height * (0.3 + 0.2 * unit(rng)));
    const auto place_random = [&]() {
      return Figure{unit(rng) * (size - width), unit(rng) * (size - height), width, height};
    };
    Figure fig{};
    if (!figures.empty() && unit(rng) < cfg.overlap_prob) {
      const Figure& anchor = figures[static_cast<std::size_t>(unit(rng) * figures.size())];
      const double dir = unit(rng) < 0.5 ? -1.0 : 1.0;
      const double dx = dir * (0.3 + 0.3 * unit(rng)) * anchor.width;
      const double dy = (unit(rng) - 0.5) * 0.4 * anchor.height;
      fig = {anchor.left + anchor.width / 2 + dx - width / 2, anchor.top + dy, width, height};
      fig.left = std::clamp(fig.left, 0.0, size - width);
      fig.top = std::clamp(fig.top, 0.0, size - height);
    } else {
      fig = place_random();
      for (int attempt = 0; attempt < 20; ++attempt) {
        const bool clash = std::any_of(figures.begin(), figures.end(),
                                       [&](const Figure& f) { return boxes_overlap(f, fig); });
        if (!clash) break;
        fig = place_random();
      }
    }
    figures.push_back(fig);
  }

  Grid<int> owner(size, size, -1);
  LabelRaster labels(size, size, 0);
  for (int i = 0; i < n_instances; ++i) {
    draw_figure(figures[i], n_parts, i, rng, owner, labels);
  }

  // Barely visible instances are dropped and repainted as background.
  std::vector<int> visible(n_instances, 0);
  for (int owner_id : owner.data()) {
    if (owner_id >= 0) ++visible[owner_id];
  }
  for (std::size_t i = 0; i < owner.size(); ++i) {
    int& who = owner.data()[i];
    if (who >= 0 && visible[who] < kMinVisiblePixels) {
      who = -1;
      labels.data()[i] = 0;
    }
  }

  // Palette: one hue per part id, perturbed per instance.
  std::vector<Rgb> palette(cfg.k_parts);
  for (int k = 1; k < cfg.k_parts; ++k) {
    palette[k] = hsv_to_rgb(static_cast<double>(k - 1) / n_parts, 0.75, 0.9);
  }
  std::vector<Rgb> tint(n_instances);
  for (auto& t : tint) t = {(unit(rng) - 0.5) * 0.12, (unit(rng) - 0.5) * 0.12, (unit(rng) - 0.5) * 0.12};

  const double bg_base = 0.25 + 0.3 * unit(rng);
  const double bg_gx = (unit(rng) - 0.5) * 0.2, bg_gy = (unit(rng) - 0.5) * 0.2;
  std::normal_distribution<double> noise(0.0, cfg.noise_sigma);

  Scene scene;
  scene.seed = seed;
  scene.image = RgbImage(size, size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      Rgb color;
      const int who = owner(r, c);
      if (who < 0) {
        const double v = bg_base + bg_gx * c / size + bg_gy * r / size;
        color = {v, v * 0.95, v * 0.9};
      } else {
        const Rgb& p = palette[labels(r, c)];
        color = {p.r + tint[who].r, p.g + tint[who].g, p.b + tint[who].b};
      }
      scene.image.at(r, c, 0) = quantize(color.r + noise(rng));
      scene.image.at(r, c, 1) = quantize(color.g + noise(rng));
      scene.image.at(r, c, 2) = quantize(color.b + noise(rng));
    }
  }

  for (int i = 0; i < n_instances; ++i) {
    GroundTruthInstance inst;
    inst.parsing = LabelRaster(size, size, 0);
    if (visible[i] < kMinVisiblePixels) continue;
    for (int r = 0; r < size; ++r) {
      for (int c = 0; c < size; ++c) {
        if (owner(r, c) == i) inst.parsing(r, c) = labels(r, c);
      }
    }
    scene.instances.push_back(std::move(inst));
  }
  scene.global_parsing = LabelRaster(size, size, 0);
  normalize_instances(scene);
  return scene;
}

EdgeRaster extract_edge_labels(const LabelRaster& parsing) {
  const int h = parsing.height(), w = parsing.width();
  EdgeRaster edges(h, w, 0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const auto center = parsing(r, c);
      bool edge = false;
      for (int dr = -1; dr <= 1 && !edge; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (!parsing.in_bounds(rr, cc)) continue;
          if (parsing(rr, cc) != center) {
            edge = true;
            break;
          }
        }
      }
      edges(r, c) = edge ? 1 : 0;
    }
  }
  return edges;
}

}  // namespace aiparse
