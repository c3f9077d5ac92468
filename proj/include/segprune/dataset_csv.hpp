#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "segprune/dispersion.hpp"

namespace segprune {

/// One row of the structured segment dataset.
struct SegmentRecord {
  std::string image_id;
  int segment_id = 0;
  int class_id = 0;
  FeatureVector features;
  double adjusted_iou = 0.0;
  int target = 0;  // 1 = false positive (adjusted IoU == 0)
  std::optional<double> meta_score;
};

struct SegmentTable {
  std::vector<std::string> feature_names;
  std::vector<SegmentRecord> records;
};

/// CSV text with a header naming every column. Reals use round-trip precision
/// so the output is byte-reproducible.
std::string format_segment_csv(const SegmentTable& table);
void write_segment_csv(const std::filesystem::path& path, const SegmentTable& table);

/// Parses the CSV written above. Throws ValidationError when a metadata
/// column is missing, a row is malformed or target disagrees with iou.
SegmentTable parse_segment_csv(const std::string& text);
SegmentTable read_segment_csv(const std::filesystem::path& path);

std::string format_real(double v);

}  // namespace segprune
