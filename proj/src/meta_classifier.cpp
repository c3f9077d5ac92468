#include "segprune/meta_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "segprune/eval_metrics.hpp"
#include "segprune/random.hpp"

namespace segprune {
namespace {

constexpr double kMinGain = 1e-12;
constexpr double kMinHessian = 1e-12;

struct NodeStats {
  long count = 0;
  double residual = 0.0;
  double hessian = 0.0;
};

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

double split_gain(double sum_left, long n_left, double sum_total, long n_total) {
  const double sum_right = sum_total - sum_left;
  const long n_right = n_total - n_left;
  return sum_left * sum_left / n_left + sum_right * sum_right / n_right - sum_total * sum_total / n_total;
}

double midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) * 0.5;
  return mid < hi ? mid : lo;
}

double leaf_value(const NodeStats& s) {
  if (s.hessian <= kMinHessian) return s.residual > 0.0 ? kLeafClip : (s.residual < 0.0 ? -kLeafClip : 0.0);
  return std::clamp(s.residual / s.hessian, -kLeafClip, kLeafClip);
}

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& columns, const std::vector<std::vector<int>>& sorted,
              const TrainConfig& config)
      : columns_(columns), sorted_(sorted), config_(config) {}

  RegressionTree build(const std::vector<double>& residual, const std::vector<double>& hessian,
                       const std::vector<char>& in_sample) {
    const std::size_t n = residual.size();
    node_of_.assign(n, -1);
    RegressionTree tree;
    tree.nodes.emplace_back();
    std::vector<NodeStats> stats(1);
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_sample[i]) continue;
      node_of_[i] = 0;
      stats[0].count++;
      stats[0].residual += residual[i];
      stats[0].hessian += hessian[i];
    }

    std::vector<int> open = {0};
    for (int depth = 0; depth < config_.max_depth && !open.empty(); ++depth) {
      std::vector<SplitCandidate> best(tree.nodes.size());
      std::vector<char> is_open(tree.nodes.size(), 0);
      for (int k : open) is_open[k] = 1;

      std::vector<NodeStats> running(tree.nodes.size());
      std::vector<double> last(tree.nodes.size());
      for (std::size_t f = 0; f < columns_.size(); ++f) {
        std::fill(running.begin(), running.end(), NodeStats{});
        const auto& col = columns_[f];
        for (int i : sorted_[f]) {
          const int k = node_of_[i];
          if (k < 0 || !is_open[k]) continue;
          const double x = col[i];
          auto& run = running[k];
          if (run.count > 0 && x > last[k] && run.count >= config_.min_samples_leaf &&
              stats[k].count - run.count >= config_.min_samples_leaf) {
            const double gain = split_gain(run.residual, run.count, stats[k].residual, stats[k].count);
            if (gain > best[k].gain) best[k] = {gain, static_cast<int>(f), midpoint(last[k], x)};
          }
          run.count++;
          run.residual += residual[i];
          last[k] = x;
        }
      }

      std::vector<int> next;
      std::vector<int> left_child(tree.nodes.size(), -1);
      for (int k : open) {
        if (best[k].feature < 0 || best[k].gain <= kMinGain) continue;
        auto& node = tree.nodes[k];
        node.feature = best[k].feature;
        node.threshold = best[k].threshold;
        node.left = static_cast<int>(tree.nodes.size());
        node.right = node.left + 1;
        left_child[k] = node.left;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        stats.resize(tree.nodes.size());
        next.push_back(node.left);
        next.push_back(node.right);
      }
      for (std::size_t i = 0; i < n; ++i) {
        const int k = node_of_[i];
        if (k < 0 || k >= static_cast<int>(left_child.size()) || left_child[k] < 0) continue;
        const auto& node = tree.nodes[k];
        const int child = columns_[node.feature][i] <= node.threshold ? node.left : node.right;
        node_of_[i] = child;
        stats[child].count++;
        stats[child].residual += residual[i];
        stats[child].hessian += hessian[i];
      }
      open = std::move(next);
    }

    for (std::size_t k = 0; k < tree.nodes.size(); ++k)
      if (tree.nodes[k].feature < 0) tree.nodes[k].value = leaf_value(stats[k]);
    return tree;
  }

 private:
  const std::vector<std::vector<double>>& columns_;
  const std::vector<std::vector<int>>& sorted_;
  const TrainConfig& config_;
  std::vector<int> node_of_;
};

double prior_log_odds(std::span<const int> targets) {
  const double positives = static_cast<double>(std::count(targets.begin(), targets.end(), 1));
  const double p = std::clamp(positives / static_cast<double>(targets.size()), kPriorEpsilon, 1.0 - kPriorEpsilon);
  return std::log(p / (1.0 - p));
}

nlohmann::json node_to_json(const RegressionTree& tree, int k) {
  const auto& node = tree.nodes[k];
  if (node.feature < 0) return {{"leaf", node.value}};
  return {{"feature", node.feature},
          {"threshold", node.threshold},
          {"left", node_to_json(tree, node.left)},
          {"right", node_to_json(tree, node.right)}};
}

int node_from_json(RegressionTree& tree, const nlohmann::json& j, int feature_count) {
  const int k = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  if (j.contains("leaf")) {
    tree.nodes[k].value = j.at("leaf").get<double>();
    return k;
  }
  const int feature = j.at("feature").get<int>();
  if (feature < 0 || feature >= feature_count) throw ValidationError("model: split feature index out of range");
  const double threshold = j.at("threshold").get<double>();
  const int left = node_from_json(tree, j.at("left"), feature_count);
  const int right = node_from_json(tree, j.at("right"), feature_count);
  tree.nodes[k].feature = feature;
  tree.nodes[k].threshold = threshold;
  tree.nodes[k].left = left;
  tree.nodes[k].right = right;
  return k;
}

}  // namespace

void TrainConfig::validate() const {
  if (num_trees < 0) throw ValidationError("train config: num_trees must be >= 0");
  if (max_depth < 1) throw ValidationError("train config: max_depth must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("train config: learning_rate must be > 0");
  if (!(subsample > 0.0 && subsample <= 1.0)) throw ValidationError("train config: subsample must be in (0,1]");
  if (min_samples_leaf < 1) throw ValidationError("train config: min_samples_leaf must be >= 1");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"num_trees", num_trees},       {"max_depth", max_depth},
          {"learning_rate", learning_rate}, {"subsample", subsample},
          {"min_samples_leaf", min_samples_leaf}, {"rng_seed", rng_seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) { return from_json(j, TrainConfig{}); }

TrainConfig TrainConfig::from_json(const nlohmann::json& j, TrainConfig c) {
  try {
    if (j.contains("num_trees")) c.num_trees = j["num_trees"].get<int>();
    if (j.contains("max_depth")) c.max_depth = j["max_depth"].get<int>();
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("subsample")) c.subsample = j["subsample"].get<double>();
    if (j.contains("min_samples_leaf")) c.min_samples_leaf = j["min_samples_leaf"].get<int>();
    if (j.contains("rng_seed")) c.rng_seed = j["rng_seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

double RegressionTree::predict(std::span<const double> x) const {
  int k = 0;
  while (nodes[k].feature >= 0) k = x[nodes[k].feature] <= nodes[k].threshold ? nodes[k].left : nodes[k].right;
  return nodes[k].value;
}

double GBModel::raw_score(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& t : trees) sum += t.predict(x);
  return base_score + learning_rate * sum;
}

nlohmann::json GBModel::to_json() const {
  nlohmann::json j;
  j["format"] = "segprune-gbdt-1";
  j["base_score"] = base_score;
  j["learning_rate"] = learning_rate;
  j["feature_count"] = feature_count;
  j["feature_names"] = feature_names;
  j["degenerate"] = degenerate;
  j["trees"] = nlohmann::json::array();
  for (const auto& t : trees) j["trees"].push_back(node_to_json(t, 0));
  return j;
}

GBModel GBModel::from_json(const nlohmann::json& j) {
  GBModel m;
  try {
    m.base_score = j.at("base_score").get<double>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.feature_count = j.at("feature_count").get<int>();
    if (j.contains("feature_names")) m.feature_names = j["feature_names"].get<std::vector<std::string>>();
    if (j.contains("degenerate")) m.degenerate = j["degenerate"].get<bool>();
    for (const auto& t : j.at("trees")) {
      RegressionTree tree;
      node_from_json(tree, t, m.feature_count);
      m.trees.push_back(std::move(tree));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model: ") + e.what());
  }
  if (m.feature_count <= 0) throw ValidationError("model: feature_count must be positive");
  if (!m.feature_names.empty() && static_cast<int>(m.feature_names.size()) != m.feature_count)
    throw ValidationError("model: feature_names length differs from feature_count");
  return m;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logistic_residual(int target, double score) { return static_cast<double>(target) - sigmoid(score); }

double logistic_loss(std::span<const int> targets, std::span<const double> scores) {
  double sum = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    // log(1 + e^s) - y s, evaluated stably
    const double s = scores[i];
    const double softplus = s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
    sum += softplus - static_cast<double>(targets[i]) * s;
  }
  return sum / static_cast<double>(targets.size());
}

TrainTrace train_traced(std::span<const SegmentRecord> records, const TrainConfig& config,
                        std::vector<std::string> feature_names) {
  config.validate();
  if (records.size() < 2) throw ValidationError("train: need at least two records");
  const std::size_t n = records.size();
  const std::size_t dims = records.front().features.size();
  if (dims == 0) throw ValidationError("train: records have no features");
  if (!feature_names.empty() && feature_names.size() != dims)
    throw ValidationError("train: feature_names length differs from the feature count");

  std::vector<std::vector<double>> columns(dims, std::vector<double>(n));
  std::vector<int> targets(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = records[i];
    if (r.features.size() != dims) throw ValidationError("train: inconsistent feature counts");
    if (r.target != 0 && r.target != 1) throw ValidationError("train: targets must be 0 or 1");
    targets[i] = r.target;
    for (std::size_t f = 0; f < dims; ++f) {
      const double v = r.features.values[f];
      if (!std::isfinite(v)) throw ValidationError("train: non-finite feature in record " + std::to_string(i));
      columns[f][i] = v;
    }
  }

  TrainTrace out;
  GBModel& model = out.model;
  model.learning_rate = config.learning_rate;
  model.feature_count = static_cast<int>(dims);
  model.feature_names = std::move(feature_names);
  model.base_score = prior_log_odds(targets);

  std::vector<double> scores(n, model.base_score);
  out.loss_per_round.push_back(logistic_loss(targets, scores));
  const long positives = std::count(targets.begin(), targets.end(), 1);
  if (positives == 0 || positives == static_cast<long>(n)) {
    model.degenerate = true;
    return out;
  }

  std::vector<std::vector<int>> sorted(dims, std::vector<int>(n));
  for (std::size_t f = 0; f < dims; ++f) {
    std::iota(sorted[f].begin(), sorted[f].end(), 0);
    const auto& col = columns[f];
    std::stable_sort(sorted[f].begin(), sorted[f].end(), [&](int a, int b) { return col[a] < col[b]; });
  }

  Rng rng(mix_seed(config.rng_seed, 0x6d657461));
  TreeBuilder builder(columns, sorted, config);
  std::vector<double> residual(n), hessian(n);
  std::vector<char> in_sample(n, 1);
  std::vector<int> perm(n);
  std::vector<double> row(dims);
  const std::size_t sample_size =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(config.subsample * static_cast<double>(n))));

  for (int round = 0; round < config.num_trees; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(scores[i]);
      residual[i] = targets[i] - p;
      hessian[i] = p * (1.0 - p);
    }
    if (sample_size < n) {
      std::iota(perm.begin(), perm.end(), 0);
      for (std::size_t i = 0; i < sample_size; ++i) std::swap(perm[i], perm[i + rng.below(n - i)]);
      std::fill(in_sample.begin(), in_sample.end(), 0);
      for (std::size_t i = 0; i < sample_size; ++i) in_sample[perm[i]] = 1;
    }
    RegressionTree tree = builder.build(residual, hessian, in_sample);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t f = 0; f < dims; ++f) row[f] = columns[f][i];
      scores[i] += model.learning_rate * tree.predict(row);
    }
    model.trees.push_back(std::move(tree));
    out.loss_per_round.push_back(logistic_loss(targets, scores));
  }
  return out;
}

GBModel train(std::span<const SegmentRecord> records, const TrainConfig& config, std::vector<std::string> feature_names) {
  return train_traced(records, config, std::move(feature_names)).model;
}

double predict_proba(const GBModel& model, std::span<const double> features) {
  if (static_cast<int>(features.size()) != model.feature_count)
    throw ValidationError("predict_proba: expected " + std::to_string(model.feature_count) + " features, got " +
                          std::to_string(features.size()));
  return sigmoid(model.raw_score(features));
}

double predict_proba(const GBModel& model, const FeatureVector& features) {
  return predict_proba(model, std::span<const double>(features.values));
}

CrossValidationResult cross_validate(std::span<const SegmentRecord> records, const TrainConfig& config, int n_folds,
                                     FoldGrouping grouping) {
  if (n_folds < 2) throw ValidationError("cross_validate: need at least two folds");
  if (records.size() < static_cast<std::size_t>(n_folds))
    throw ValidationError("cross_validate: fewer records than folds");

  // Group index per record, groups numbered in first-appearance order.
  std::vector<std::size_t> group_of(records.size());
  std::size_t groups = 0;
  if (grouping == FoldGrouping::Record) {
    std::iota(group_of.begin(), group_of.end(), 0);
    groups = records.size();
  } else {
    std::map<std::string, std::size_t> ids;
    for (std::size_t i = 0; i < records.size(); ++i) {
      auto [it, inserted] = ids.emplace(records[i].image_id, groups);
      if (inserted) ++groups;
      group_of[i] = it->second;
    }
    if (groups < static_cast<std::size_t>(n_folds)) throw ValidationError("cross_validate: fewer images than folds");
  }

  std::vector<std::size_t> perm(groups);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(mix_seed(config.rng_seed, 0x666f6c64));
  rng.shuffle(std::span<std::size_t>(perm));
  std::vector<int> fold_of_group(groups);
  for (std::size_t pos = 0; pos < groups; ++pos)
    fold_of_group[perm[pos]] = static_cast<int>(pos * static_cast<std::size_t>(n_folds) / groups);

  CrossValidationResult out;
  out.scores.assign(records.size(), 0.0);
  out.fold_of.resize(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) out.fold_of[i] = fold_of_group[group_of[i]];

  double auroc_sum = 0.0;
  int auroc_folds = 0;
  for (int fold = 0; fold < n_folds; ++fold) {
    std::vector<SegmentRecord> train_set;
    std::vector<std::size_t> test_idx;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (out.fold_of[i] == fold) test_idx.push_back(i);
      else train_set.push_back(records[i]);
    }
    TrainConfig fold_config = config;
    fold_config.rng_seed = mix_seed(config.rng_seed, 100 + static_cast<std::uint64_t>(fold));
    const GBModel model = train(train_set, fold_config);
    std::vector<double> pos, neg;
    for (std::size_t i : test_idx) {
      const double m = predict_proba(model, records[i].features);
      out.scores[i] = m;
      (records[i].target == 1 ? pos : neg).push_back(m);
    }
    if (!pos.empty() && !neg.empty()) {
      const double a = auroc(pos, neg);
      out.fold_auroc.push_back(a);
      auroc_sum += a;
      ++auroc_folds;
    } else {
      out.fold_auroc.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  out.mean_auroc = auroc_folds > 0 ? auroc_sum / auroc_folds : std::numeric_limits<double>::quiet_NaN();
  return out;
}

std::vector<std::string> shuffled_image_ids(std::span<const SegmentRecord> records, std::uint64_t seed) {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& r : records)
    if (seen.insert(r.image_id).second) ids.push_back(r.image_id);
  Rng rng(mix_seed(seed, 0x73706c74));
  rng.shuffle(std::span<std::string>(ids));
  return ids;
}

FineTuneResult fine_tune(std::span<const SegmentRecord> source, std::span<const SegmentRecord> target, double fraction,
                         const TrainConfig& config, std::uint64_t seed, FineTuneMode mode) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ValidationError("fine_tune: fraction must lie in (0,1)");
  if (target.empty()) throw ValidationError("fine_tune: empty target record set");
  if (mode == FineTuneMode::Union && source.empty()) throw ValidationError("fine_tune: empty source record set");

  const auto ids = shuffled_image_ids(target, seed);
  const auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ids.size())));
  FineTuneResult out;
  out.train_images.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(take));
  out.held_out_images.assign(ids.begin() + static_cast<std::ptrdiff_t>(take), ids.end());
  const std::set<std::string> train_ids(out.train_images.begin(), out.train_images.end());

  std::vector<SegmentRecord> train_set;
  if (mode == FineTuneMode::Union) train_set.assign(source.begin(), source.end());
  for (const auto& r : target) {
    if (train_ids.count(r.image_id)) train_set.push_back(r);
    else out.held_out.push_back(r);
  }
  out.model = train(train_set, config);
  return out;
}

}  // namespace segprune
