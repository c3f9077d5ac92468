#include "segprune/eval_metrics.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "segprune/dataset_csv.hpp"

namespace segprune {
namespace {

// Per-pixel owner index (-1 for none) of a disjoint segment list.
std::vector<int> owner_map(std::span<const Segment> segments, int height, int width) {
  std::vector<int> owner(std::size_t(height) * width, -1);
  for (std::size_t s = 0; s < segments.size(); ++s)
    for (const auto& p : segments[s].pixels) owner[std::size_t(p.row) * width + p.col] = static_cast<int>(s);
  return owner;
}

struct ImageSummary {
  std::vector<double> fp_scores;       // scores of predicted segments with adjusted IoU 0
  std::vector<double> gt_min_scores;   // min score of touching predicted segments, +inf when untouched
};

ImageSummary summarize(const ScoredImage& img) {
  if (img.scores.size() != img.predicted.size()) throw ValidationError("unscored segment in evaluation input");
  ImageSummary out;
  const auto gt_owner = owner_map(img.ground_truth, img.height, img.width);
  out.gt_min_scores.assign(img.ground_truth.size(), std::numeric_limits<double>::infinity());
  for (std::size_t q = 0; q < img.predicted.size(); ++q) {
    const double m = img.scores[q];
    bool touches = false;
    for (const auto& p : img.predicted[q].pixels) {
      const int g = gt_owner[std::size_t(p.row) * img.width + p.col];
      if (g < 0) continue;
      touches = true;
      out.gt_min_scores[g] = std::min(out.gt_min_scores[g], m);
    }
    if (!touches) out.fp_scores.push_back(m);
  }
  return out;
}

SummaryMetrics compute_summary(std::span<const CurvePoint> curve) {
  SummaryMetrics s;
  if (curve.empty()) return s;
  std::vector<std::size_t> order(curve.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return curve[a].recall < curve[b].recall; });
  double prev_rec = 0.0;
  double prev_prec = curve[order.front()].precision;
  for (std::size_t i : order) {
    s.auprc += (curve[i].recall - prev_rec) * (curve[i].precision + prev_prec) * 0.5;
    prev_rec = curve[i].recall;
    prev_prec = curve[i].precision;
  }
  double f1_sum = 0.0;
  for (const auto& p : curve) {
    if (p.precision >= 0.80) s.rec80 = std::max(s.rec80, p.recall);
    f1_sum += p.f1;
    s.best_f1 = std::max(s.best_f1, p.f1);
  }
  s.mean_f1 = f1_sum / static_cast<double>(curve.size());
  auto at_one = std::find_if(curve.begin(), curve.end(), [](const CurvePoint& p) { return p.threshold == 1.0; });
  s.f1_at_one = at_one != curve.end() ? at_one->f1 : curve.back().f1;
  return s;
}

}  // namespace

std::vector<double> threshold_grid() {
  std::vector<double> grid(101);
  for (int k = 0; k <= 100; ++k) grid[k] = k / 100.0;
  return grid;
}

double adjusted_iou(const Segment& q, std::span<const Segment> ground_truth) {
  if (q.pixels.empty()) throw ValidationError("adjusted_iou: empty segment");
  // Segments are sorted pixel lists, so overlap tests are set intersections.
  std::size_t intersection = 0;
  std::size_t union_size = q.size();
  for (const auto& g : ground_truth) {
    std::size_t shared = 0;
    auto a = q.pixels.begin();
    auto b = g.pixels.begin();
    while (a != q.pixels.end() && b != g.pixels.end()) {
      if (*a < *b) ++a;
      else if (*b < *a) ++b;
      else {
        ++shared;
        ++a;
        ++b;
      }
    }
    if (shared == 0) continue;
    intersection += shared;
    union_size += g.size() - shared;
  }
  return intersection == 0 ? 0.0 : static_cast<double>(intersection) / static_cast<double>(union_size);
}

double gt_iou_at_threshold(const Segment& gt, std::span<const Segment> predicted, std::span<const double> scores,
                           double h) {
  if (scores.size() != predicted.size()) throw ValidationError("gt_iou_at_threshold: unscored segment");
  std::vector<Segment> kept;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (scores[i] <= h) kept.push_back(predicted[i]);
  if (gt.pixels.empty()) return 0.0;
  return adjusted_iou(gt, kept);
}

Counts count_at_threshold(std::span<const ScoredImage> images, double h) {
  const double grid[1] = {h};
  return count_curve(images, grid).front();
}

std::vector<Counts> count_curve(std::span<const ScoredImage> images, std::span<const double> grid) {
  std::vector<Counts> out(grid.size());
  for (const auto& img : images) {
    const ImageSummary s = summarize(img);
    for (std::size_t t = 0; t < grid.size(); ++t) {
      const double h = grid[t];
      for (double m : s.fp_scores)
        if (m <= h) ++out[t].fp;
      for (double m : s.gt_min_scores) {
        if (m <= h) ++out[t].tp;
        else ++out[t].fn;
      }
    }
  }
  return out;
}

CurvePoint make_curve_point(double threshold, const Counts& c) {
  CurvePoint p;
  p.threshold = threshold;
  p.counts = c;
  p.precision = (c.tp + c.fp) == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  p.recall = (c.tp + c.fn) == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  p.f1 = (p.precision + p.recall) == 0.0 ? 0.0 : 2.0 * p.precision * p.recall / (p.precision + p.recall);
  return p;
}

std::vector<CurvePoint> pr_curve(std::span<const ScoredImage> images, std::span<const double> grid) {
  const auto counts = count_curve(images, grid);
  std::vector<CurvePoint> curve;
  curve.reserve(grid.size());
  for (std::size_t t = 0; t < grid.size(); ++t) curve.push_back(make_curve_point(grid[t], counts[t]));
  return curve;
}

SummaryMetrics summary_metrics(std::span<const CurvePoint> curve) { return compute_summary(curve); }

double auroc(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty() || negatives.empty()) throw ValidationError("auroc: both classes must be non-empty");
  struct Item {
    double score;
    bool positive;
  };
  std::vector<Item> items;
  items.reserve(positives.size() + negatives.size());
  for (double s : positives) items.push_back({s, true});
  for (double s : negatives) items.push_back({s, false});
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.score < b.score; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    while (j < items.size() && items[j].score == items[i].score) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k)
      if (items[k].positive) rank_sum += mid_rank;
    i = j;
  }
  const double np = static_cast<double>(positives.size());
  const double nn = static_cast<double>(negatives.size());
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

ConfusionAccumulator::ConfusionAccumulator(const ClassSchema& schema)
    : classes_(schema.num_classes),
      ignore_id_(schema.ignore_id),
      intersection_(schema.num_classes, 0),
      gt_count_(schema.num_classes, 0),
      pred_count_(schema.num_classes, 0) {}

void ConfusionAccumulator::add(const LabelMap& prediction, const LabelMap& ground_truth) {
  if (prediction.height != ground_truth.height || prediction.width != ground_truth.width)
    throw ValidationError("miou: shape mismatch");
  for (std::size_t i = 0; i < prediction.pixel_count(); ++i) {
    const int g = ground_truth.values[i];
    if (ignore_id_ && g == *ignore_id_) continue;
    if (g >= classes_) throw ValidationError("miou: invalid ground-truth class " + std::to_string(g));
    const int p = prediction.values[i];
    ++gt_count_[g];
    if (p < classes_) {
      ++pred_count_[p];
      if (p == g) ++intersection_[g];
    }
  }
}

std::vector<std::optional<double>> ConfusionAccumulator::class_iou() const {
  std::vector<std::optional<double>> out(classes_);
  for (int k = 0; k < classes_; ++k) {
    const long uni = gt_count_[k] + pred_count_[k] - intersection_[k];
    if (uni > 0) out[k] = static_cast<double>(intersection_[k]) / static_cast<double>(uni);
  }
  return out;
}

double ConfusionAccumulator::miou() const {
  double sum = 0.0;
  int present = 0;
  for (const auto& v : class_iou()) {
    if (!v) continue;
    sum += *v;
    ++present;
  }
  return present == 0 ? 1.0 : sum / present;
}

double miou(const LabelMap& prediction, const LabelMap& ground_truth, const ClassSchema& schema) {
  ConfusionAccumulator acc(schema);
  acc.add(prediction, ground_truth);
  return acc.miou();
}

SegmentMetrics evaluate_segments(std::span<const ScoredImage> images) {
  SegmentMetrics m;
  const auto grid = threshold_grid();
  m.curve = pr_curve(images, grid);
  m.summary = summary_metrics(m.curve);
  std::vector<double> pos, neg;
  for (const auto& img : images) {
    m.predicted_segments += static_cast<long>(img.predicted.size());
    m.ground_truth_segments += static_cast<long>(img.ground_truth.size());
    for (std::size_t q = 0; q < img.predicted.size(); ++q) {
      const bool fp = adjusted_iou(img.predicted[q], img.ground_truth) == 0.0;
      (fp ? pos : neg).push_back(img.scores[q]);
    }
  }
  if (!pos.empty() && !neg.empty()) m.meta_auroc = auroc(pos, neg);
  return m;
}

std::vector<ScoredImage> restrict_to_class(std::span<const ScoredImage> images, int class_id) {
  std::vector<ScoredImage> out;
  out.reserve(images.size());
  for (const auto& img : images) {
    ScoredImage r;
    r.height = img.height;
    r.width = img.width;
    for (std::size_t q = 0; q < img.predicted.size(); ++q) {
      if (img.predicted[q].class_id != class_id) continue;
      r.predicted.push_back(img.predicted[q]);
      r.scores.push_back(img.scores[q]);
    }
    for (const auto& g : img.ground_truth)
      if (g.class_id == class_id) r.ground_truth.push_back(g);
    out.push_back(std::move(r));
  }
  return out;
}

nlohmann::json SegmentMetrics::to_json() const {
  nlohmann::json j;
  j["auprc"] = summary.auprc;
  j["rec80"] = summary.rec80;
  j["mean_f1"] = summary.mean_f1;
  j["best_f1"] = summary.best_f1;
  j["f1_at_1"] = summary.f1_at_one;
  j["meta_auroc"] = meta_auroc ? nlohmann::json(*meta_auroc) : nlohmann::json(nullptr);
  j["predicted_segments"] = predicted_segments;
  j["ground_truth_segments"] = ground_truth_segments;
  auto& c = j["curve"] = nlohmann::json::array();
  for (const auto& p : curve) {
    c.push_back({{"threshold", p.threshold},
                 {"tp", p.counts.tp},
                 {"fp", p.counts.fp},
                 {"fn", p.counts.fn},
                 {"precision", p.precision},
                 {"recall", p.recall},
                 {"f1", p.f1}});
  }
  return j;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["mode"] = mode;
  j["overall"] = overall.to_json();
  j["miou"] = miou ? nlohmann::json(*miou) : nlohmann::json(nullptr);
  j["per_class"] = nlohmann::json::object();
  for (const auto& [name, m] : per_class) j["per_class"][name] = m.to_json();
  return j;
}

std::string MetricsReport::curve_csv() const {
  std::string out = "threshold,tp,fp,fn,precision,recall,f1\n";
  for (const auto& p : overall.curve) {
    out += format_real(p.threshold) + "," + std::to_string(p.counts.tp) + "," + std::to_string(p.counts.fp) + "," +
           std::to_string(p.counts.fn) + "," + format_real(p.precision) + "," + format_real(p.recall) + "," +
           format_real(p.f1) + "\n";
  }
  return out;
}

}  // namespace segprune
