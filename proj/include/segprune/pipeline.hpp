#pragma once

#include <span>
#include <string>
#include <vector>

#include "segprune/dataset_csv.hpp"
#include "segprune/eval_metrics.hpp"
#include "segprune/meta_classifier.hpp"
#include "segprune/synth_bench.hpp"
#include "segprune/tensor_store.hpp"

namespace segprune {

enum class PredictionSource { Fused, SemanticOnly };

const char* to_string(PredictionSource source);

/// Everything the later stages need from one image: the foreground
/// prediction, its segments with features and adjusted IoU, and the
/// ground-truth segments.
struct ImageAnalysis {
  std::string image_id;
  int height = 0;
  int width = 0;
  LabelMap prediction;  // foreground classes or the background code
  LabelMap filled;      // every pixel resolved to a class
  LabelMap ground_truth;
  std::vector<Segment> predicted;
  std::vector<FeatureVector> features;
  std::vector<double> adjusted_iou;
  std::vector<Segment> gt_segments;
};

/// The two prediction sources differ only in how `prediction` is formed.
LabelMap foreground_prediction(const ImageTensors& tensors, const ClassSchema& schema, PredictionSource source);

ImageAnalysis analyze_image(const std::string& image_id, const ImageTensors& tensors, const ClassSchema& schema,
                            PredictionSource source);

std::vector<ImageAnalysis> analyze_manifest(const DatasetManifest& manifest, const ClassSchema& schema,
                                            PredictionSource source);
std::vector<ImageAnalysis> analyze_synthetic(const SynthConfig& config, const ClassSchema& schema,
                                             PredictionSource source);

std::vector<SegmentRecord> records_of(const ImageAnalysis& analysis);
SegmentTable build_table(std::span<const ImageAnalysis> analyses, const ClassSchema& schema);

/// Meta scores grouped per image, aligned with ImageAnalysis::predicted.
using ImageScores = std::vector<std::vector<double>>;

ImageScores score_with_model(std::span<const ImageAnalysis> analyses, const GBModel& model);
/// Out-of-fold scores from k-fold cross validation over all segments.
ImageScores score_with_cross_validation(std::span<const ImageAnalysis> analyses, const TrainConfig& config,
                                        int n_folds, double* mean_auroc = nullptr);
/// Splits a flat per-record score list back into per-image lists.
ImageScores regroup_scores(std::span<const ImageAnalysis> analyses, std::span<const double> flat);

std::vector<ScoredImage> scored_images(std::span<const ImageAnalysis> analyses, const ImageScores& scores);

MetricsReport build_report(std::span<const ImageAnalysis> analyses, const ImageScores& scores,
                           const ClassSchema& schema, const std::string& mode, bool per_class = true);

}  // namespace segprune
