#include "segprune/pipeline.hpp"

#include "segprune/dispersion.hpp"
#include "segprune/fusion.hpp"
#include "segprune/parallel.hpp"

namespace segprune {

const char* to_string(PredictionSource source) {
  return source == PredictionSource::Fused ? "fused" : "semantic";
}

LabelMap foreground_prediction(const ImageTensors& tensors, const ClassSchema& schema, PredictionSource source) {
  if (source == PredictionSource::Fused) return fuse(tensors.probs, tensors.foreground, schema);
  return semantic_foreground(tensors.probs, schema);
}

ImageAnalysis analyze_image(const std::string& image_id, const ImageTensors& tensors, const ClassSchema& schema,
                            PredictionSource source) {
  ImageAnalysis a;
  a.image_id = image_id;
  a.height = tensors.probs.height;
  a.width = tensors.probs.width;
  a.prediction = foreground_prediction(tensors, schema, source);
  a.filled = fill_background(a.prediction, tensors.probs, schema);
  a.ground_truth = tensors.ground_truth;
  a.predicted = connected_components(a.prediction, schema.foreground_ids);
  a.gt_segments = connected_components(tensors.ground_truth, schema.foreground_ids);
  const auto maps = dispersion_maps(tensors.probs, tensors.foreground);
  a.features.reserve(a.predicted.size());
  a.adjusted_iou.reserve(a.predicted.size());
  for (const auto& seg : a.predicted) {
    a.features.push_back(extract_features(seg, maps, tensors.probs, schema));
    a.adjusted_iou.push_back(adjusted_iou(seg, a.gt_segments));
  }
  return a;
}

std::vector<ImageAnalysis> analyze_manifest(const DatasetManifest& manifest, const ClassSchema& schema,
                                            PredictionSource source) {
  std::vector<ImageAnalysis> out(manifest.images.size());
  parallel_for(manifest.images.size(), [&](std::size_t i) {
    const auto& rec = manifest.images[i];
    out[i] = analyze_image(rec.id, load_image(rec, schema), schema, source);
  });
  return out;
}

std::vector<ImageAnalysis> analyze_synthetic(const SynthConfig& config, const ClassSchema& schema,
                                             PredictionSource source) {
  if (config.num_images <= 0) throw ValidationError("empty dataset");
  std::vector<ImageAnalysis> out(static_cast<std::size_t>(config.num_images));
  parallel_for(out.size(), [&](std::size_t i) {
    const int index = static_cast<int>(i);
    out[i] = analyze_image(synthetic_image_id(index), make_synthetic_image(config, schema, index), schema, source);
  });
  return out;
}

std::vector<SegmentRecord> records_of(const ImageAnalysis& a) {
  std::vector<SegmentRecord> out;
  out.reserve(a.predicted.size());
  for (std::size_t q = 0; q < a.predicted.size(); ++q) {
    SegmentRecord r;
    r.image_id = a.image_id;
    r.segment_id = static_cast<int>(q);
    r.class_id = a.predicted[q].class_id;
    r.features = a.features[q];
    r.adjusted_iou = a.adjusted_iou[q];
    r.target = a.adjusted_iou[q] == 0.0 ? 1 : 0;
    out.push_back(std::move(r));
  }
  return out;
}

SegmentTable build_table(std::span<const ImageAnalysis> analyses, const ClassSchema& schema) {
  SegmentTable t;
  t.feature_names = feature_names(schema);
  for (const auto& a : analyses) {
    auto recs = records_of(a);
    t.records.insert(t.records.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
  }
  return t;
}

ImageScores score_with_model(std::span<const ImageAnalysis> analyses, const GBModel& model) {
  ImageScores out(analyses.size());
  for (std::size_t i = 0; i < analyses.size(); ++i) {
    out[i].reserve(analyses[i].features.size());
    for (const auto& f : analyses[i].features) out[i].push_back(predict_proba(model, f));
  }
  return out;
}

ImageScores regroup_scores(std::span<const ImageAnalysis> analyses, std::span<const double> flat) {
  ImageScores out(analyses.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < analyses.size(); ++i) {
    for (std::size_t q = 0; q < analyses[i].predicted.size(); ++q) {
      if (k >= flat.size()) throw ValidationError("score list shorter than the segment list");
      out[i].push_back(flat[k++]);
    }
  }
  if (k != flat.size()) throw ValidationError("score list longer than the segment list");
  return out;
}

ImageScores score_with_cross_validation(std::span<const ImageAnalysis> analyses, const TrainConfig& config,
                                        int n_folds, double* mean_auroc) {
  std::vector<SegmentRecord> records;
  for (const auto& a : analyses) {
    auto r = records_of(a);
    records.insert(records.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
  }
  const auto cv = cross_validate(records, config, n_folds);
  if (mean_auroc) *mean_auroc = cv.mean_auroc;
  return regroup_scores(analyses, cv.scores);
}

std::vector<ScoredImage> scored_images(std::span<const ImageAnalysis> analyses, const ImageScores& scores) {
  if (scores.size() != analyses.size()) throw ValidationError("scores do not cover every image");
  std::vector<ScoredImage> out;
  out.reserve(analyses.size());
  for (std::size_t i = 0; i < analyses.size(); ++i) {
    ScoredImage s;
    s.height = analyses[i].height;
    s.width = analyses[i].width;
    s.predicted = analyses[i].predicted;
    s.scores = scores[i];
    s.ground_truth = analyses[i].gt_segments;
    out.push_back(std::move(s));
  }
  return out;
}

MetricsReport build_report(std::span<const ImageAnalysis> analyses, const ImageScores& scores,
                           const ClassSchema& schema, const std::string& mode, bool per_class) {
  const auto images = scored_images(analyses, scores);
  MetricsReport report;
  report.mode = mode;
  report.overall = evaluate_segments(images);
  ConfusionAccumulator acc(schema);
  for (const auto& a : analyses) acc.add(a.filled, a.ground_truth);
  report.miou = acc.miou();
  if (per_class) {
    for (int id : schema.foreground_ids) {
      const auto restricted = restrict_to_class(images, id);
      report.per_class[schema.class_name(id)] = evaluate_segments(restricted);
    }
  }
  return report;
}

}  // namespace segprune
