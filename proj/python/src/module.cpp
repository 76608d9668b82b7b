// Python bindings for the torch-free core: scenes, edges, scoring, configs,
// datasets and plots.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "aiparse/config.hpp"
#include "aiparse/dataset_io.hpp"
#include "aiparse/plot.hpp"
#include "aiparse/refine.hpp"
#include "aiparse/synth.hpp"

namespace py = pybind11;
using namespace aiparse;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

U8Array to_numpy(const LabelRaster& r) {
  U8Array out({r.height(), r.width()});
  std::memcpy(out.mutable_data(), r.data().data(), r.size());
  return out;
}

LabelRaster from_numpy(const U8Array& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D uint8 array");
  LabelRaster r(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  std::memcpy(r.data().data(), a.data(), r.size());
  return r;
}

py::dict scene_to_dict(const Scene& s) {
  U8Array image({s.height(), s.width(), 3});
  auto* dst = image.mutable_data();
  for (int y = 0; y < s.height(); ++y) {
    for (int x = 0; x < s.width(); ++x) {
      for (int c = 0; c < 3; ++c) *dst++ = s.image.at(y, x, c);
    }
  }
  py::list instances;
  for (const auto& inst : s.instances) {
    py::dict d;
    d["box"] = py::make_tuple(inst.box.x0, inst.box.y0, inst.box.x1, inst.box.y1);
    d["parsing"] = to_numpy(inst.parsing);
    d["part_ids"] = inst.part_ids;
    instances.append(d);
  }
  py::dict out;
  out["seed"] = s.seed;
  out["image"] = image;
  out["global_parsing"] = to_numpy(s.global_parsing);
  out["instances"] = instances;
  return out;
}

Config parse_config(const std::string& json) { return json.empty() ? Config{} : config_from_json(json); }

}  // namespace

PYBIND11_MODULE(_aiparse, m) {
  m.doc() = "aiparse core bindings";

  m.def("default_config", [] { return config_to_json(Config{}); }, "Default config as a JSON string.");
  m.def(
      "normalize_config",
      [](const std::string& json) {
        const Config cfg = parse_config(json);
        cfg.validate();
        return config_to_json(cfg);
      },
      py::arg("json"), "Validates a JSON config and returns it with every key filled in.");

  m.def(
      "generate_scene",
      [](std::uint64_t seed, const std::string& config) {
        return scene_to_dict(generate_scene(seed, parse_config(config).generator()));
      },
      py::arg("seed"), py::arg("config") = "");

  m.def(
      "extract_edge_labels", [](const U8Array& a) { return to_numpy(extract_edge_labels(from_numpy(a))); },
      py::arg("parsing"));

  m.def(
      "compute_map_miou",
      [](const U8Array& pred, const U8Array& gt) { return compute_map_miou(from_numpy(pred), from_numpy(gt)); },
      py::arg("pred"), py::arg("gt"));

  m.def("fuse_instance_score", &fuse_instance_score, py::arg("det_score"), py::arg("miou_score"));

  m.def(
      "refinement_loss",
      [](double score_pred, double miou_target, double lovasz, double theta, double gamma) {
        return refinement_loss(score_pred, miou_target, lovasz, RefineWeights{theta, gamma});
      },
      py::arg("score_pred"), py::arg("miou_target"), py::arg("lovasz"), py::arg("theta") = 2.0,
      py::arg("gamma") = 1.0);

  m.def(
      "load_dataset",
      [](const std::filesystem::path& dir) {
        py::list out;
        for (const auto& s : load_dataset(dir)) out.append(scene_to_dict(s));
        return out;
      },
      py::arg("dir"));

  m.def("plot", &plot_file, py::arg("input"), py::arg("output"),
        "Writes an SVG for a loss log (.csv) or a report (.json).");
}
