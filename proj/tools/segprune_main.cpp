#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "segprune/commands.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace segprune;
  CLI::App app{"segprune: foreground fusion, segment meta classification and false-negative evaluation"};
  app.require_subcommand(1);
  app.footer("Default config (pass a JSON file with any subset of these keys via --config):\n" +
             default_run_config().to_json().dump(2));

  std::string config_path, out_dir, manifest, schema_path, csv_path, model_path;
  std::vector<std::string> report_paths;
  std::optional<std::uint64_t> seed;
  std::optional<double> fraction;
  std::optional<int> num_images;
  bool baseline = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run config")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Seed for synthesis, folds and training");
    sub->add_option("--schema", schema_path, "JSON class schema overriding the manifest's")->check(CLI::ExistingFile);
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic benchmark dataset");
  common(synth);
  synth->add_option("--out", out_dir, "Output directory")->required();
  synth->add_option("-n,--num-images", num_images, "Number of images");

  auto* fuse_cmd = app.add_subcommand("fuse", "Write fused and background-filled label maps");
  common(fuse_cmd);
  fuse_cmd->add_option("--manifest", manifest)->required();
  fuse_cmd->add_option("--out", out_dir)->required();

  auto* features = app.add_subcommand("features", "Extract the segment-wise structured dataset (CSV)");
  common(features);
  features->add_option("--manifest", manifest)->required();
  features->add_option("--out", out_dir)->required();
  features->add_flag("--baseline", baseline, "Use the semantic-only prediction");

  auto* train_cmd = app.add_subcommand("train-meta", "Train the meta classifier and cross-validate it");
  common(train_cmd);
  train_cmd->add_option("--csv", csv_path, "Segment CSV from 'features'")->required();
  train_cmd->add_option("--out", out_dir)->required();

  auto* eval = app.add_subcommand("eval", "Segment-level metrics over the 101 pruning thresholds");
  common(eval);
  eval->add_option("--manifest", manifest)->required();
  eval->add_option("--model", model_path, "Trained model; cross-validated scores when omitted");
  eval->add_option("--out", out_dir)->required();
  eval->add_flag("--baseline", baseline, "Use the semantic-only prediction");

  auto* finetune = app.add_subcommand("finetune", "Retrain with a fraction of target images");
  common(finetune);
  finetune->add_option("--csv", csv_path, "Source-domain segment CSV")->required();
  finetune->add_option("--manifest", manifest, "Target-domain manifest")->required();
  finetune->add_option("--fraction", fraction, "Fraction of target images used for training");
  finetune->add_option("--out", out_dir)->required();
  finetune->add_flag("--baseline", baseline, "Use the semantic-only prediction");

  auto* report = app.add_subcommand("report", "Tabulate metrics.json files");
  report->add_option("reports", report_paths, "metrics JSON files")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    RunConfig config = config_path.empty() ? default_run_config() : load_run_config(config_path);
    if (seed) config.apply_seed(*seed);
    if (fraction) config.fraction = *fraction;
    if (num_images) config.synth.num_images = *num_images;
    if (!schema_path.empty()) config.schema = ClassSchema::from_json(nlohmann::json::parse(read_text_file(schema_path)));

    if (synth->parsed()) {
      const auto m = cmd_synth(config, out_dir);
      std::printf("wrote %zu images to %s\n", m.images.size(), out_dir.c_str());
    } else if (fuse_cmd->parsed()) {
      cmd_fuse(manifest, config, out_dir);
    } else if (features->parsed()) {
      const auto t = cmd_features(manifest, config, baseline, out_dir);
      std::printf("%zu segments, %zu features\n", t.records.size(), t.feature_names.size());
    } else if (train_cmd->parsed()) {
      const auto m = cmd_train_meta(csv_path, config, out_dir);
      std::printf("trained %zu trees%s\n", m.trees.size(), m.degenerate ? " (degenerate: single class)" : "");
    } else if (eval->parsed()) {
      std::optional<std::filesystem::path> model;
      if (!model_path.empty()) model = model_path;
      const auto r = cmd_eval(manifest, model, config, baseline, out_dir);
      std::printf("AUPRC %.4f  F1* %.4f  F1(1) %.4f  REC80 %.4f\n", r.overall.summary.auprc, r.overall.summary.best_f1,
                  r.overall.summary.f1_at_one, r.overall.summary.rec80);
    } else if (finetune->parsed()) {
      const auto r = cmd_finetune(csv_path, manifest, config, baseline, out_dir);
      std::printf("%zu train / %zu held-out images; held-out AUPRC fine-tuned %.4f, source-only %.4f\n", r.train_images,
                  r.held_out_images, r.fine_tuned.overall.summary.auprc, r.source_only.overall.summary.auprc);
    } else if (report->parsed()) {
      std::vector<std::filesystem::path> paths(report_paths.begin(), report_paths.end());
      std::cout << cmd_report(paths);
    }
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  }
  return 0;
}
