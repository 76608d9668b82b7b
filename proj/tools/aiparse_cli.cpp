// aiparse command line: generate / train / evaluate / predict / plot.
#include <CLI11.hpp>
#include <torch/torch.h>

#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "aiparse/checkpoint.hpp"
#include "aiparse/dataset_io.hpp"
#include "aiparse/harness.hpp"
#include "aiparse/plot.hpp"
#include "aiparse/predictor.hpp"
#include "aiparse/trainer.hpp"

namespace fs = std::filesystem;
using namespace aiparse;

namespace {

Config resolve_config(const std::string& path, const std::vector<std::string>& overrides) {
  Config cfg = path.empty() ? Config{} : load_config(path);
  apply_overrides(cfg, overrides);
  apply_seed_env(cfg);
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int run_generate(const std::string& config, const std::vector<std::string>& overrides, const fs::path& out) {
  const Config cfg = resolve_config(config, overrides);
  generate_dataset(cfg, out);
  std::cout << "wrote " << cfg.n_train << " train and " << cfg.n_val << " val scenes to " << out << "\n";
  return 0;
}

int run_train(const std::string& config, const std::vector<std::string>& overrides, const fs::path& data,
              const fs::path& out) {
  const Config cfg = resolve_config(config, overrides);
  const auto scenes = load_dataset(split_dir(data, "train"));
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  TrainOptions options;
  options.checkpoint = out;
  options.epoch_log = out.string() + ".epochs.csv";
  options.step_log = out.string() + ".steps.csv";
  options.verbose = true;
  const auto result = train(cfg, scenes, options);
  if (result.diverged) {
    std::cerr << result.message << "\n";
    std::cerr << "last good checkpoint (" << result.completed_epochs << " epochs) kept at " << out << "\n";
    return 3;
  }
  std::cout << "trained " << result.completed_epochs << " epochs on " << scenes.size() << " scenes; checkpoint "
            << out << "\n";
  return 0;
}

int run_evaluate(const fs::path& ckpt_path, const fs::path& data, const fs::path& report_path,
                 const std::string& split, bool no_miou_score) {
  const auto ckpt = load_checkpoint(ckpt_path);
  auto model = model_from_checkpoint(ckpt);
  const auto scenes = load_dataset(split_dir(data, split));
  std::optional<bool> fuse;
  if (no_miou_score) fuse = false;
  const auto preds = predict_all(model, scenes, fuse);
  const auto report = evaluate(preds, scenes, ckpt.cfg.k_parts);
  write_text(report_path, report_to_json(report) + "\n");
  std::cout << report_table(report);
  return 0;
}

int run_predict(const fs::path& ckpt_path, const fs::path& image_path, const fs::path& out) {
  const auto ckpt = load_checkpoint(ckpt_path);
  auto model = model_from_checkpoint(ckpt);
  const auto image = read_ppm(image_path);
  const auto pred = predict(model, image);
  fs::create_directories(out);
  nlohmann::json j;
  j["image"] = image_path.string();
  j["height"] = image.height();
  j["width"] = image.width();
  j["instances"] = nlohmann::json::array();
  for (std::size_t i = 0; i < pred.instances.size(); ++i) {
    const auto& inst = pred.instances[i];
    char name[32];
    std::snprintf(name, sizeof name, "inst_%02zu.pgm", i);
    write_pgm(out / name, inst.parsing);
    j["instances"].push_back({{"box", {inst.box.x0, inst.box.y0, inst.box.x1, inst.box.y1}},
                              {"det_score", inst.det_score},
                              {"miou_score", inst.miou_score ? nlohmann::json(*inst.miou_score) : nlohmann::json()},
                              {"score", inst.score},
                              {"raster", name}});
  }
  write_pgm(out / "global.pgm", pred.global_parsing);
  write_text(out / "predictions.json", j.dump(2) + "\n");
  std::cout << pred.instances.size() << " instances written to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  torch::set_num_threads(1);
  CLI::App app{"Anchor-free instance-level human parsing on synthetic scenes"};
  app.require_subcommand(1);

  std::string config;
  std::vector<std::string> overrides;
  fs::path data, out, ckpt, report, image, in;
  std::string split = "val";
  bool no_miou_score = false;

  auto* gen = app.add_subcommand("generate", "write a synthetic dataset");
  gen->add_option("--config", config, "JSON config file");
  gen->add_option("--set", overrides, "config override key=value (repeatable)");
  gen->add_option("--out", out, "output directory")->required();

  auto* tr = app.add_subcommand("train", "train a model");
  tr->add_option("--config", config, "JSON config file");
  tr->add_option("--set", overrides, "config override key=value (repeatable)");
  tr->add_option("--data", data, "dataset directory")->required();
  tr->add_option("--out", out, "checkpoint path")->required();

  auto* ev = app.add_subcommand("evaluate", "evaluate a checkpoint on a dataset");
  ev->add_option("--ckpt", ckpt, "checkpoint path")->required();
  ev->add_option("--data", data, "dataset directory")->required();
  ev->add_option("--report", report, "report JSON path")->required();
  ev->add_option("--split", split, "split subdirectory to use when present")->capture_default_str();
  ev->add_flag("--no-miou-score", no_miou_score, "rank by detection score only");

  auto* pr = app.add_subcommand("predict", "parse one image");
  pr->add_option("--ckpt", ckpt, "checkpoint path")->required();
  pr->add_option("--image", image, "input PPM image")->required();
  pr->add_option("--out", out, "output directory")->required();

  auto* pl = app.add_subcommand("plot", "plot a loss log (.csv) or a report (.json) as SVG");
  pl->add_option("--in", in, "loss log or report")->required();
  pl->add_option("--out", out, "output SVG path")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return run_generate(config, overrides, out);
    if (*tr) return run_train(config, overrides, data, out);
    if (*ev) return run_evaluate(ckpt, data, report, split, no_miou_score);
    if (*pr) return run_predict(ckpt, image, out);
    if (*pl) {
      plot_file(in, out);
      std::cout << "wrote " << out << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
