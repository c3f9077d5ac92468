#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "segprune/geometry.hpp"
#include "segprune/tensor_store.hpp"

namespace segprune {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) compensation_ += (sum_ - t) + x;
    else compensation_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

/// Pixel-wise dispersion heatmaps, all normalized to [0,1].
struct DispersionMaps {
  int height = 0;
  int width = 0;
  std::vector<double> entropy;          // E, normalized by log(c)
  std::vector<double> variation_ratio;  // V = 1 - max probability
  std::vector<double> margin;           // M = V + second largest probability
  std::vector<double> fg_entropy;       // binary entropy of g, normalized by log(2)
};

DispersionMaps dispersion_maps(const ProbTensor& probs, const ForegroundMap& fg);

// Layout of a feature vector. Each dispersion block holds
// mean, mean_in, mean_bd, relative, relative_in.
namespace feature_index {
inline constexpr int kSize = 0;
inline constexpr int kSizeInner = 1;
inline constexpr int kSizeBoundary = 2;
inline constexpr int kSizeRelative = 3;
inline constexpr int kSizeInnerRelative = 4;
inline constexpr int kEntropyBlock = 5;
inline constexpr int kVariationBlock = 10;
inline constexpr int kMarginBlock = 15;
inline constexpr int kFgEntropyBlock = 20;
inline constexpr int kCenterRow = 25;
inline constexpr int kCenterCol = 26;
inline constexpr int kClassProbabilities = 27;
}  // namespace feature_index

inline constexpr int kFixedFeatureCount = 27;

struct FeatureVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

/// Column names in feature order; class probabilities are named after the
/// schema's foreground classes.
std::vector<std::string> feature_names(const ClassSchema& schema);

/// Segment-wise features: sizes, mean dispersions over the whole segment,
/// its inner and its boundary, relative sizes and dispersions, center and
/// mean foreground class probabilities. Empty inner means are 0.
FeatureVector extract_features(const Segment& segment, const DispersionMaps& maps, const ProbTensor& probs,
                               const ClassSchema& schema);

}  // namespace segprune
