// trafficmon CLI: run the monitoring engine, generate synthetic scenarios,
// evaluate detector outputs, and prepare annotation datasets.
//
// Exit codes: 0 success, 1 runtime error, 2 configuration error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trafficmon/dataset_prep.hpp"
#include "trafficmon/engine.hpp"
#include "trafficmon/errors.hpp"
#include "trafficmon/metrics.hpp"
#include "trafficmon/simulator.hpp"

namespace fs = std::filesystem;
using namespace trafficmon;

namespace {

bool is_config_error(Errc code) {
  switch (code) {
    case Errc::config_error:
    case Errc::io_error:
    case Errc::bad_ratios:
    case Errc::invalid_geometry:
      return true;
    default:
      return false;
  }
}

int cmd_run(const std::string& config_path) {
  Engine engine{RunConfig::load(config_path)};
  return engine.run();
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_dir) {
  const ScenarioConfig config = ScenarioConfig::load_file(scenario_path);
  write_scenario(config, out_dir);
  std::cout << "wrote " << (fs::path(out_dir) / "frames.jsonl").string() << " and "
            << (fs::path(out_dir) / "truth.jsonl").string() << '\n';
  return 0;
}

int cmd_evaluate(const std::string& gt_path, const std::vector<std::string>& pred_paths,
                 const std::string& json_out) {
  std::vector<std::pair<std::string, EvalReport>> models;
  for (const std::string& pred : pred_paths) {
    const auto images = load_labeled_images(gt_path, pred);
    models.emplace_back(fs::path(pred).stem().string(), evaluate_dataset(images));
  }

  std::cout << report_table(models);
  if (!json_out.empty()) {
    std::ofstream out(json_out);
    if (!out) raise(Errc::io_error, "cannot write " + json_out);
    out << "[";
    for (std::size_t i = 0; i < models.size(); ++i) {
      if (i > 0) out << ",";
      out << "\n{\"model\":\"" << models[i].first
          << "\",\"report\":" << report_to_json(models[i].second) << "}";
    }
    out << "\n]\n";
  }
  return 0;
}

int cmd_prep(const std::string& annotations_path, const std::string& out_dir, double target_size,
             int variants, const std::string& ratios_str, std::uint64_t seed) {
  SplitRatios ratios;
  {
    std::vector<double> parts;
    std::size_t begin = 0;
    while (begin <= ratios_str.size()) {
      const auto comma = ratios_str.find(',', begin);
      const std::string tok = ratios_str.substr(
          begin, comma == std::string::npos ? std::string::npos : comma - begin);
      try {
        parts.push_back(std::stod(tok));
      } catch (...) {
        raise(Errc::bad_ratios, "cannot parse ratio '" + tok + "'");
      }
      if (comma == std::string::npos) break;
      begin = comma + 1;
    }
    if (parts.size() != 3) raise(Errc::bad_ratios, "--ratios needs train,val,test");
    ratios = SplitRatios{parts[0], parts[1], parts[2]};
  }

  const auto items = load_annotations(annotations_path);
  std::vector<AnnotationItem> prepared;
  prepared.reserve(items.size() * static_cast<std::size_t>(variants));
  for (const AnnotationItem& item : items) {
    auto [boxed, params] = letterbox_transform(item, target_size);
    for (auto& variant : augment_variants(boxed, variants, seed)) {
      prepared.push_back(std::move(variant));
    }
  }
  const SplitManifest manifest = split_dataset(prepared, ratios, seed);

  fs::create_directories(out_dir);
  save_annotations(prepared, fs::path(out_dir) / "annotations.jsonl");
  std::ofstream mf(fs::path(out_dir) / "manifest.json");
  if (!mf) raise(Errc::io_error, "cannot write manifest");
  mf << manifest_to_json(manifest) << '\n';

  std::cout << "prepared " << prepared.size() << " items: " << manifest.train.size()
            << " train / " << manifest.validation.size() << " validation / "
            << manifest.test.size() << " test\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Real-time traffic congestion monitoring engine"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Process a detection stream against a run config");
  run->add_option("--config", config_path, "Run configuration JSON")->required();

  std::string scenario_path, sim_out_dir;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic detection stream");
  simulate->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  simulate->add_option("--out", sim_out_dir, "Output directory")->required();

  std::string gt_path, eval_json_out;
  std::vector<std::string> pred_paths;
  auto* evaluate = app.add_subcommand("evaluate", "Score prediction files against ground truth");
  evaluate->add_option("--gt", gt_path, "Ground-truth annotations JSONL")->required();
  evaluate->add_option("predictions", pred_paths, "Prediction JSONL files, one per model")
      ->required()
      ->expected(-1);
  evaluate->add_option("--json", eval_json_out, "Also write the report as JSON");

  std::string annotations_path, prep_out_dir, ratios_str = "0.8,0.1,0.1";
  double target_size = 640;
  int variants = 10;
  std::uint64_t prep_seed = 0;
  auto* prep = app.add_subcommand("prep", "Letterbox, augment and split an annotation set");
  prep->add_option("--annotations", annotations_path, "Input annotations JSONL")->required();
  prep->add_option("--out-dir", prep_out_dir, "Output directory")->required();
  prep->add_option("--target-size", target_size, "Square target canvas, default 640");
  prep->add_option("--variants", variants, "Variants per image, default 10");
  prep->add_option("--ratios", ratios_str, "train,val,test ratios, default 0.8,0.1,0.1");
  prep->add_option("--seed", prep_seed, "Shuffle/augmentation seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path);
    if (simulate->parsed()) return cmd_simulate(scenario_path, sim_out_dir);
    if (evaluate->parsed()) return cmd_evaluate(gt_path, pred_paths, eval_json_out);
    if (prep->parsed()) {
      return cmd_prep(annotations_path, prep_out_dir, target_size, variants, ratios_str,
                      prep_seed);
    }
  } catch (const TrafficError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_config_error(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
