#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "segprune/meta_classifier.hpp"
#include "segprune/pipeline.hpp"
#include "segprune/synth_bench.hpp"

namespace segprune {

/// Settings shared by every subcommand. `seed` overrides the synthetic
/// dataset seed and the training seed.
struct RunConfig {
  std::optional<ClassSchema> schema;  // overrides the manifest schema when set
  TrainConfig train;
  SynthConfig synth;
  double fraction = 0.2;
  FineTuneMode finetune_mode = FineTuneMode::Union;
  int folds = 5;
  bool per_class = true;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  void apply_seed(std::uint64_t s);
};

RunConfig default_run_config();
RunConfig load_run_config(const std::filesystem::path& path);

// Each command writes its artifacts plus config.json into `out`.
DatasetManifest cmd_synth(const RunConfig& config, const std::filesystem::path& out);
void cmd_fuse(const std::filesystem::path& manifest, const RunConfig& config, const std::filesystem::path& out);
SegmentTable cmd_features(const std::filesystem::path& manifest, const RunConfig& config, bool baseline,
                          const std::filesystem::path& out);
GBModel cmd_train_meta(const std::filesystem::path& csv, const RunConfig& config, const std::filesystem::path& out);
/// Without a model, scores come from cross validation on the manifest itself.
MetricsReport cmd_eval(const std::filesystem::path& manifest, const std::optional<std::filesystem::path>& model,
                       const RunConfig& config, bool baseline, const std::filesystem::path& out);
struct FineTuneReport {
  MetricsReport fine_tuned;
  MetricsReport source_only;
  std::size_t train_images = 0;
  std::size_t held_out_images = 0;
};
FineTuneReport cmd_finetune(const std::filesystem::path& source_csv, const std::filesystem::path& target_manifest,
                            const RunConfig& config, bool baseline, const std::filesystem::path& out);
/// Plain-text comparison table of one or more metrics.json files.
std::string cmd_report(const std::vector<std::filesystem::path>& reports);

}  // namespace segprune
