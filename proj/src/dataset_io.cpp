#include "aiparse/dataset_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace aiparse {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

void write_netpbm(const fs::path& path, const char* magic, int width, int height,
                  const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot write " + path.string());
  out << magic << "\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DatasetError("write failed: " + path.string());
}

// Returns (width, height) and fills `bytes` with channels*w*h samples.
std::pair<int, int> read_netpbm(const fs::path& path, const std::string& magic, int channels,
                                std::vector<std::uint8_t>& bytes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("missing file " + path.string());
  std::string header;
  in >> header;
  if (header != magic) throw DatasetError("bad netpbm magic in " + path.string());
  const auto next_int = [&]() {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string comment;
      std::getline(in, comment);
      in >> std::ws;
    }
    int v = -1;
    in >> v;
    if (!in) throw DatasetError("truncated netpbm header in " + path.string());
    return v;
  };
  const int width = next_int();
  const int height = next_int();
  const int maxval = next_int();
  if (width <= 0 || height <= 0 || maxval != 255) {
    throw DatasetError("unsupported netpbm geometry in " + path.string());
  }
  in.get();  // single whitespace before the raster
  bytes.resize(static_cast<std::size_t>(channels) * width * height);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw DatasetError("truncated raster data in " + path.string());
  }
  return {width, height};
}

json box_to_json(const Box& b) { return json::array({b.x0, b.y0, b.x1, b.y1}); }

Box box_from_json(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(), j.at(3).get<double>()};
}

std::string inst_filename(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "inst_%02zu.pgm", i);
  return buf;
}

Scene load_scene(const fs::path& dir, std::size_t index) {
  const std::string where = "scene " + std::to_string(index) + " (" + dir.filename().string() + ")";
  try {
    std::ifstream meta_in(dir / "meta.json");
    if (!meta_in) throw DatasetError("missing meta.json");
    const json meta = json::parse(meta_in);
    Scene scene;
    scene.seed = meta.at("seed").get<std::uint64_t>();
    scene.image = read_ppm(dir / "image.ppm");
    scene.global_parsing = read_pgm(dir / "global.pgm");
    for (const auto& item : meta.at("instances")) {
      GroundTruthInstance inst;
      inst.box = box_from_json(item.at("box"));
      inst.part_ids = item.at("part_ids").get<std::vector<int>>();
      inst.parsing = read_pgm(dir / item.at("raster").get<std::string>());
      scene.instances.push_back(std::move(inst));
    }
    if (scene.global_parsing.height() != scene.image.height() ||
        scene.global_parsing.width() != scene.image.width()) {
      throw DatasetError("raster size does not match image");
    }
    return scene;
  } catch (const DatasetError& e) {
    throw DatasetError(where + ": " + e.what());
  } catch (const json::exception& e) {
    throw DatasetError(where + ": corrupt meta.json: " + e.what());
  }
}

}  // namespace

void write_ppm(const fs::path& path, const RgbImage& image) {
  write_netpbm(path, "P6", image.width(), image.height(), image.data());
}

RgbImage read_ppm(const fs::path& path) {
  std::vector<std::uint8_t> bytes;
  const auto [w, h] = read_netpbm(path, "P6", 3, bytes);
  RgbImage image(h, w);
  image.data() = std::move(bytes);
  return image;
}

void write_pgm(const fs::path& path, const LabelRaster& raster) {
  write_netpbm(path, "P5", raster.width(), raster.height(), raster.data());
}

LabelRaster read_pgm(const fs::path& path) {
  std::vector<std::uint8_t> bytes;
  const auto [w, h] = read_netpbm(path, "P5", 1, bytes);
  LabelRaster raster(h, w);
  raster.data() = std::move(bytes);
  return raster;
}

std::string scene_dirname(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%05zu", index);
  return buf;
}

void save_dataset(const std::vector<Scene>& scenes, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const Scene& scene = scenes[i];
    const fs::path scene_dir = dir / scene_dirname(i);
    fs::create_directories(scene_dir);
    write_ppm(scene_dir / "image.ppm", scene.image);
    write_pgm(scene_dir / "global.pgm", scene.global_parsing);
    json meta;
    meta["format_version"] = kFormatVersion;
    meta["seed"] = scene.seed;
    meta["height"] = scene.height();
    meta["width"] = scene.width();
    meta["instances"] = json::array();
    for (std::size_t k = 0; k < scene.instances.size(); ++k) {
      const auto& inst = scene.instances[k];
      const std::string raster = inst_filename(k);
      write_pgm(scene_dir / raster, inst.parsing);
      meta["instances"].push_back(
          {{"box", box_to_json(inst.box)}, {"part_ids", inst.part_ids}, {"raster", raster}});
    }
    std::ofstream out(scene_dir / "meta.json");
    out << meta.dump(2) << "\n";
    if (!out) throw DatasetError("cannot write metadata for scene " + std::to_string(i));
  }
}

std::vector<Scene> load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DatasetError("dataset directory not found: " + dir.string());
  std::vector<fs::path> scene_dirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && entry.path().filename().string().rfind("scene_", 0) == 0) {
      scene_dirs.push_back(entry.path());
    }
  }
  if (scene_dirs.empty()) throw DatasetError("empty dataset: " + dir.string());
  std::sort(scene_dirs.begin(), scene_dirs.end());
  std::vector<Scene> scenes;
  scenes.reserve(scene_dirs.size());
  for (std::size_t i = 0; i < scene_dirs.size(); ++i) scenes.push_back(load_scene(scene_dirs[i], i));
  return scenes;
}

}  // namespace aiparse
