#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "segprune/dataset_csv.hpp"

namespace segprune {

struct TrainConfig {
  int num_trees = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
  double subsample = 1.0;
  int min_samples_leaf = 5;
  std::uint64_t rng_seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j, TrainConfig defaults);
  static TrainConfig from_json(const nlohmann::json& j);
};

/// Flat binary tree; a node with `feature < 0` is a leaf. Rows with
/// x[feature] <= threshold descend left.
struct RegressionTree {
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };
  std::vector<Node> nodes;

  double predict(std::span<const double> x) const;
};

/// Gradient-boosted trees on the logistic loss. Scores are log-odds of a
/// segment being a false positive.
struct GBModel {
  std::vector<RegressionTree> trees;
  double learning_rate = 0.1;
  double base_score = 0.0;
  int feature_count = 0;
  std::vector<std::string> feature_names;
  bool degenerate = false;

  double raw_score(std::span<const double> x) const;

  nlohmann::json to_json() const;
  static GBModel from_json(const nlohmann::json& j);
};

/// Class prior is clipped to [kPriorEpsilon, 1 - kPriorEpsilon].
inline constexpr double kPriorEpsilon = 1e-6;
inline constexpr double kLeafClip = 4.0;

double sigmoid(double x);
/// Mean negative log-likelihood of binary targets under log-odds scores.
double logistic_loss(std::span<const int> targets, std::span<const double> scores);
/// Negative derivative of the per-sample loss w.r.t. the score: y - sigmoid(s).
double logistic_residual(int target, double score);

struct TrainTrace {
  GBModel model;
  std::vector<double> loss_per_round;  // [0] is the prior-only loss
};

/// Throws ValidationError on fewer than two records or non-finite features.
/// Single-class data yields a degenerate prior-only model.
GBModel train(std::span<const SegmentRecord> records, const TrainConfig& config,
              std::vector<std::string> feature_names = {});
TrainTrace train_traced(std::span<const SegmentRecord> records, const TrainConfig& config,
                        std::vector<std::string> feature_names = {});

double predict_proba(const GBModel& model, std::span<const double> features);
double predict_proba(const GBModel& model, const FeatureVector& features);

enum class FoldGrouping { Record, Image };

struct CrossValidationResult {
  std::vector<double> scores;     // out-of-fold score per record
  std::vector<int> fold_of;       // fold index per record
  std::vector<double> fold_auroc; // NaN when a test fold lacks a class
  double mean_auroc = 0.0;        // over folds with both classes
};

/// Disjoint seeded folds: every record is scored exactly once by a model
/// trained on the remaining folds. With Image grouping all records of an
/// image share a fold.
CrossValidationResult cross_validate(std::span<const SegmentRecord> records, const TrainConfig& config,
                                     int n_folds = 5, FoldGrouping grouping = FoldGrouping::Record);

enum class FineTuneMode { Union, TargetOnly };

struct FineTuneResult {
  GBModel model;
  std::vector<std::string> train_images;
  std::vector<std::string> held_out_images;
  std::vector<SegmentRecord> held_out;
};

/// Seeded image-level split of the target records: round(fraction * images)
/// images join training; the rest are returned for evaluation. Splits for
/// different fractions with the same seed are nested.
FineTuneResult fine_tune(std::span<const SegmentRecord> source, std::span<const SegmentRecord> target, double fraction,
                         const TrainConfig& config, std::uint64_t seed, FineTuneMode mode = FineTuneMode::Union);

/// Unique image ids in first-appearance order, permuted by `seed`.
std::vector<std::string> shuffled_image_ids(std::span<const SegmentRecord> records, std::uint64_t seed);

}  // namespace segprune
