#include "segprune/commands.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "segprune/fusion.hpp"

namespace segprune {
namespace {

void prepare_out(const std::filesystem::path& out) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text_file(path, j.dump(2) + "\n"); }

void echo_config(const RunConfig& config, const std::filesystem::path& out) {
  write_json(out / "config.json", config.to_json());
}

ClassSchema schema_for(const DatasetManifest& manifest, const RunConfig& config) {
  if (!config.schema) return manifest.schema;
  if (config.schema->num_classes != manifest.schema.num_classes)
    throw ValidationError("schema override disagrees with the manifest class count");
  return *config.schema;
}

GBModel load_model(const std::filesystem::path& path) {
  try {
    return GBModel::from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void check_feature_names(const GBModel& model, const std::vector<std::string>& names) {
  if (model.feature_count != static_cast<int>(names.size()))
    throw ValidationError("model expects " + std::to_string(model.feature_count) + " features, data has " +
                          std::to_string(names.size()));
  if (!model.feature_names.empty() && model.feature_names != names)
    throw ValidationError("model feature names do not match the data columns");
}

void write_report(const MetricsReport& report, const std::filesystem::path& out, const std::string& stem) {
  write_json(out / (stem + ".json"), report.to_json());
  write_text_file(out / (stem + "_curve.csv"), report.curve_csv());
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["schema"] = schema ? schema->to_json() : nlohmann::json(nullptr);
  j["train"] = train.to_json();
  j["synth"] = synth.to_json();
  j["fraction"] = fraction;
  j["finetune_mode"] = finetune_mode == FineTuneMode::Union ? "union" : "target_only";
  j["folds"] = folds;
  j["per_class"] = per_class;
  j["seed"] = seed;
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c = default_run_config();
  try {
    if (j.contains("schema") && !j["schema"].is_null()) c.schema = ClassSchema::from_json(j["schema"]);
    if (j.contains("train")) c.train = TrainConfig::from_json(j["train"], c.train);
    if (j.contains("synth")) c.synth = SynthConfig::from_json(j["synth"], c.synth);
    if (j.contains("fraction")) c.fraction = j["fraction"].get<double>();
    if (j.contains("finetune_mode")) {
      const auto mode = j["finetune_mode"].get<std::string>();
      if (mode == "union") c.finetune_mode = FineTuneMode::Union;
      else if (mode == "target_only") c.finetune_mode = FineTuneMode::TargetOnly;
      else throw ValidationError("config: finetune_mode must be union or target_only");
    }
    if (j.contains("folds")) c.folds = j["folds"].get<int>();
    if (j.contains("per_class")) c.per_class = j["per_class"].get<bool>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  if (c.folds < 2) throw ValidationError("config: folds must be >= 2");
  c.apply_seed(c.seed);
  return c;
}

void RunConfig::apply_seed(std::uint64_t s) {
  seed = s;
  synth.seed = s;
  train.rng_seed = s;
}

RunConfig default_run_config() {
  RunConfig c;
  c.synth.num_images = 10;
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  try {
    return RunConfig::from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

DatasetManifest cmd_synth(const RunConfig& config, const std::filesystem::path& out) {
  if (config.synth.num_images <= 0) throw ValidationError("empty dataset");
  prepare_out(out);
  const ClassSchema schema = config.schema ? *config.schema : default_synthetic_schema();
  auto manifest = write_synthetic_dataset(out, config.synth, schema);
  echo_config(config, out);
  return manifest;
}

void cmd_fuse(const std::filesystem::path& manifest_path, const RunConfig& config, const std::filesystem::path& out) {
  const auto manifest = load_manifest(manifest_path);
  const auto schema = schema_for(manifest, config);
  prepare_out(out);
  for (const auto& rec : manifest.images) {
    const auto tensors = load_image(rec, schema);
    const auto fused = fuse_and_fill(tensors.probs, tensors.foreground, schema);
    save_tensor(out / (rec.id + "_fused.sft"), fused.fused_labels);
    save_tensor(out / (rec.id + "_filled.sft"), fused.filled_labels);
  }
  echo_config(config, out);
}

SegmentTable cmd_features(const std::filesystem::path& manifest_path, const RunConfig& config, bool baseline,
                          const std::filesystem::path& out) {
  const auto manifest = load_manifest(manifest_path);
  const auto schema = schema_for(manifest, config);
  const auto source = baseline ? PredictionSource::SemanticOnly : PredictionSource::Fused;
  const auto analyses = analyze_manifest(manifest, schema, source);
  auto table = build_table(analyses, schema);
  prepare_out(out);
  write_segment_csv(out / "segments.csv", table);
  echo_config(config, out);
  return table;
}

GBModel cmd_train_meta(const std::filesystem::path& csv, const RunConfig& config, const std::filesystem::path& out) {
  auto table = read_segment_csv(csv);
  if (table.records.size() < 2) throw ValidationError("train-meta: need at least two segments");
  auto model = train(table.records, config.train, table.feature_names);

  nlohmann::json cv_report;
  cv_report["records"] = table.records.size();
  long positives = 0;
  for (const auto& r : table.records) positives += r.target;
  cv_report["false_positives"] = positives;
  cv_report["folds"] = config.folds;
  cv_report["degenerate"] = model.degenerate;
  if (table.records.size() >= static_cast<std::size_t>(config.folds)) {
    const auto cv = cross_validate(table.records, config.train, config.folds);
    cv_report["mean_auroc"] = std::isnan(cv.mean_auroc) ? nlohmann::json(nullptr) : nlohmann::json(cv.mean_auroc);
    auto& folds = cv_report["fold_auroc"] = nlohmann::json::array();
    for (double a : cv.fold_auroc) folds.push_back(std::isnan(a) ? nlohmann::json(nullptr) : nlohmann::json(a));
    for (std::size_t i = 0; i < table.records.size(); ++i) table.records[i].meta_score = cv.scores[i];
  } else {
    cv_report["mean_auroc"] = nullptr;
  }
  prepare_out(out);
  write_json(out / "model.json", model.to_json());
  write_json(out / "cv_report.json", cv_report);
  if (table.records.front().meta_score) write_segment_csv(out / "cv_scores.csv", table);
  echo_config(config, out);
  return model;
}

MetricsReport cmd_eval(const std::filesystem::path& manifest_path, const std::optional<std::filesystem::path>& model_path,
                       const RunConfig& config, bool baseline, const std::filesystem::path& out) {
  const auto manifest = load_manifest(manifest_path);
  const auto schema = schema_for(manifest, config);
  const auto source = baseline ? PredictionSource::SemanticOnly : PredictionSource::Fused;
  const auto analyses = analyze_manifest(manifest, schema, source);
  ImageScores scores;
  std::string scoring;
  if (model_path) {
    const auto model = load_model(*model_path);
    check_feature_names(model, feature_names(schema));
    scores = score_with_model(analyses, model);
    scoring = "model";
  } else {
    scores = score_with_cross_validation(analyses, config.train, config.folds);
    scoring = "cross_validation";
  }
  auto report = build_report(analyses, scores, schema, to_string(source), config.per_class);
  report.mode += "/" + scoring;
  prepare_out(out);
  write_report(report, out, "metrics");
  echo_config(config, out);
  return report;
}

FineTuneReport cmd_finetune(const std::filesystem::path& source_csv, const std::filesystem::path& target_manifest,
                            const RunConfig& config, bool baseline, const std::filesystem::path& out) {
  if (!(config.fraction > 0.0 && config.fraction < 1.0))
    throw ValidationError("fraction must lie in (0,1), got " + format_real(config.fraction));
  const auto source_table = read_segment_csv(source_csv);
  const auto manifest = load_manifest(target_manifest);
  const auto schema = schema_for(manifest, config);
  const auto names = feature_names(schema);
  if (source_table.feature_names != names) throw ValidationError("source csv columns do not match the target schema");
  const auto source = baseline ? PredictionSource::SemanticOnly : PredictionSource::Fused;
  const auto analyses = analyze_manifest(manifest, schema, source);
  std::vector<SegmentRecord> target_records;
  for (const auto& a : analyses) {
    auto r = records_of(a);
    target_records.insert(target_records.end(), r.begin(), r.end());
  }

  auto tuned = fine_tune(source_table.records, target_records, config.fraction, config.train, config.seed,
                         config.finetune_mode);
  tuned.model.feature_names = names;
  const auto source_model = train(source_table.records, config.train, names);

  const std::set<std::string> held(tuned.held_out_images.begin(), tuned.held_out_images.end());
  std::vector<ImageAnalysis> held_out;
  for (const auto& a : analyses)
    if (held.count(a.image_id)) held_out.push_back(a);

  FineTuneReport report;
  report.train_images = tuned.train_images.size();
  report.held_out_images = tuned.held_out_images.size();
  report.fine_tuned = build_report(held_out, score_with_model(held_out, tuned.model), schema,
                                   std::string(to_string(source)) + "/fine_tuned", config.per_class);
  report.source_only = build_report(held_out, score_with_model(held_out, source_model), schema,
                                    std::string(to_string(source)) + "/source_only", config.per_class);

  prepare_out(out);
  write_json(out / "model.json", tuned.model.to_json());
  write_report(report.fine_tuned, out, "heldout_metrics");
  write_report(report.source_only, out, "source_only_metrics");
  write_json(out / "split.json", {{"fraction", config.fraction},
                                  {"train_images", tuned.train_images},
                                  {"held_out_images", tuned.held_out_images}});
  echo_config(config, out);
  return report;
}

std::string cmd_report(const std::vector<std::filesystem::path>& reports) {
  if (reports.empty()) throw ValidationError("report: no metrics files given");
  auto pct = [](const nlohmann::json& v) -> std::string {
    if (v.is_null()) return "     n/a";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%8.2f", 100.0 * v.get<double>());
    return buf;
  };
  std::string out = "report                          mode                              AUPRC    F1bar     F1*    F1(1)   REC80   AUROC    mIoU\n";
  for (const auto& path : reports) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(path.string() + ": " + e.what());
    }
    if (!j.contains("overall")) throw ValidationError(path.string() + ": not a metrics report");
    const auto& o = j["overall"];
    char head[96];
    std::snprintf(head, sizeof(head), "%-31.31s %-31.31s", path.parent_path().filename().string().c_str(),
                  j.value("mode", std::string("?")).c_str());
    out += std::string(head) + pct(o["auprc"]) + pct(o["mean_f1"]) + pct(o["best_f1"]) + pct(o["f1_at_1"]) +
           pct(o["rec80"]) + pct(o["meta_auroc"]) + pct(j["miou"]) + "\n";
  }
  return out;
}

}  // namespace segprune
