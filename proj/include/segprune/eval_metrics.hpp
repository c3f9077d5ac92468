#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "segprune/geometry.hpp"
#include "segprune/tensor_store.hpp"

namespace segprune {

/// The 101 pruning thresholds 0.00, 0.01, ..., 1.00 (computed as k / 100).
std::vector<double> threshold_grid();

/// IoU of `q` against the union of all ground-truth segments it touches;
/// 0 when it touches none.
double adjusted_iou(const Segment& q, std::span<const Segment> ground_truth);

/// IoU of a ground-truth segment against the union of predicted segments
/// that touch it and survive pruning (score <= h).
double gt_iou_at_threshold(const Segment& gt, std::span<const Segment> predicted, std::span<const double> scores,
                           double h);

/// Predicted segments with meta scores plus ground-truth segments of one image.
struct ScoredImage {
  int height = 0;
  int width = 0;
  std::vector<Segment> predicted;
  std::vector<double> scores;
  std::vector<Segment> ground_truth;
};

struct Counts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  bool operator==(const Counts&) const = default;
};

Counts count_at_threshold(std::span<const ScoredImage> images, double h);
/// Counts at every threshold of `grid`, one pass over the pixels.
std::vector<Counts> count_curve(std::span<const ScoredImage> images, std::span<const double> grid);

struct CurvePoint {
  double threshold = 0.0;
  Counts counts;
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 0.0;
};

/// precision := 1 when nothing is predicted, recall := 1 when there is no
/// ground truth, F1 := 0 when precision + recall == 0.
CurvePoint make_curve_point(double threshold, const Counts& counts);
std::vector<CurvePoint> pr_curve(std::span<const ScoredImage> images, std::span<const double> grid);

struct SummaryMetrics {
  double auprc = 0.0;
  double rec80 = 0.0;
  double mean_f1 = 0.0;
  double best_f1 = 0.0;
  double f1_at_one = 0.0;
};

/// AUPRC integrates precision over recall with the trapezoid rule after a
/// stable sort by recall, starting from a zero-recall anchor at the first
/// point's precision. REC80 is the largest grid recall with precision >= 0.8.
SummaryMetrics summary_metrics(std::span<const CurvePoint> curve);

/// Mann-Whitney statistic P(pos > neg) + 0.5 P(pos == neg).
double auroc(std::span<const double> positives, std::span<const double> negatives);

/// Pixel-level confusion accumulated over images; ignore pixels are skipped.
class ConfusionAccumulator {
 public:
  explicit ConfusionAccumulator(const ClassSchema& schema);
  void add(const LabelMap& prediction, const LabelMap& ground_truth);
  /// Mean IoU over classes present in ground truth or prediction.
  double miou() const;
  std::vector<std::optional<double>> class_iou() const;

 private:
  int classes_;
  std::optional<int> ignore_id_;
  std::vector<long> intersection_;
  std::vector<long> gt_count_;
  std::vector<long> pred_count_;
};

double miou(const LabelMap& prediction, const LabelMap& ground_truth, const ClassSchema& schema);

struct SegmentMetrics {
  std::vector<CurvePoint> curve;
  SummaryMetrics summary;
  std::optional<double> meta_auroc;  // false positives are the positive class
  long predicted_segments = 0;
  long ground_truth_segments = 0;

  nlohmann::json to_json() const;
};

SegmentMetrics evaluate_segments(std::span<const ScoredImage> images);

/// Restricts predicted and ground-truth segments to one class.
std::vector<ScoredImage> restrict_to_class(std::span<const ScoredImage> images, int class_id);

struct MetricsReport {
  std::string mode;
  SegmentMetrics overall;
  std::optional<double> miou;
  std::map<std::string, SegmentMetrics> per_class;

  nlohmann::json to_json() const;
  std::string curve_csv() const;
};

}  // namespace segprune
