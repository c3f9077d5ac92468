#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "segprune/errors.hpp"

namespace segprune {

using ClassId = std::uint16_t;

/// Label space, its foreground subset and the reserved codes.
///
/// Foreground ids are kept sorted and unique. The fused background label is
/// encoded as `num_classes` (one past the last class), ground-truth pixels
/// equal to `ignore_id` are never counted.
struct ClassSchema {
  int num_classes = 0;
  std::vector<int> foreground_ids;
  std::vector<std::string> class_names;
  std::optional<int> ignore_id = 255;

  /// Throws ValidationError when the invariants do not hold.
  void validate() const;

  bool is_foreground(int id) const;
  std::vector<int> background_ids() const;
  int background_code() const { return num_classes; }
  int foreground_count() const { return static_cast<int>(foreground_ids.size()); }
  std::string class_name(int id) const;

  nlohmann::json to_json() const;
  static ClassSchema from_json(const nlohmann::json& j);
};

/// Per-pixel class probabilities, H x W x C, row-major with classes innermost.
struct ProbTensor {
  int height = 0;
  int width = 0;
  int classes = 0;
  std::vector<float> values;

  ProbTensor() = default;
  ProbTensor(int h, int w, int c) : height(h), width(w), classes(c), values(std::size_t(h) * w * c, 0.0f) {}

  std::size_t pixel_count() const { return std::size_t(height) * width; }
  std::span<const float> pixel(std::size_t index) const {
    return {values.data() + index * classes, std::size_t(classes)};
  }
  std::span<float> pixel(std::size_t index) {
    return {values.data() + index * classes, std::size_t(classes)};
  }
  float at(int row, int col, int k) const { return values[(std::size_t(row) * width + col) * classes + k]; }
};

/// Per-pixel foreground probability, H x W.
struct ForegroundMap {
  int height = 0;
  int width = 0;
  std::vector<float> values;

  ForegroundMap() = default;
  ForegroundMap(int h, int w, float fill = 0.0f) : height(h), width(w), values(std::size_t(h) * w, fill) {}

  std::size_t pixel_count() const { return std::size_t(height) * width; }
  float at(int row, int col) const { return values[std::size_t(row) * width + col]; }
};

/// Integer class map, H x W.
struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<ClassId> values;

  LabelMap() = default;
  LabelMap(int h, int w, ClassId fill = 0) : height(h), width(w), values(std::size_t(h) * w, fill) {}

  std::size_t pixel_count() const { return std::size_t(height) * width; }
  ClassId at(int row, int col) const { return values[std::size_t(row) * width + col]; }
  ClassId& at(int row, int col) { return values[std::size_t(row) * width + col]; }

  bool operator==(const LabelMap&) const = default;
};

using AnyTensor = std::variant<ProbTensor, ForegroundMap, LabelMap>;

inline constexpr double kProbabilitySumTolerance = 1e-4;

// Invariant checks, all throw ValidationError.
void validate(const ProbTensor& probs);
void validate(const ForegroundMap& fg);
void validate(const LabelMap& labels, const ClassSchema& schema);

void save_tensor(const std::filesystem::path& path, const ProbTensor& t);
void save_tensor(const std::filesystem::path& path, const ForegroundMap& t);
void save_tensor(const std::filesystem::path& path, const LabelMap& t);

/// Serialized container bytes, identical to what save_tensor writes.
std::vector<std::uint8_t> encode_tensor(const AnyTensor& t);
/// Parses and validates container bytes. The kind follows from dtype and rank.
AnyTensor decode_tensor(std::span<const std::uint8_t> bytes);

AnyTensor load_tensor(const std::filesystem::path& path);
ProbTensor load_prob_tensor(const std::filesystem::path& path);
ForegroundMap load_foreground_map(const std::filesystem::path& path);
LabelMap load_label_map(const std::filesystem::path& path);

struct ImageRecord {
  std::string id;
  std::filesystem::path probs;
  std::filesystem::path foreground;
  std::filesystem::path ground_truth;
};

struct DatasetManifest {
  ClassSchema schema;
  std::vector<ImageRecord> images;

  nlohmann::json to_json(const std::filesystem::path& relative_to = {}) const;
};

/// Reads and validates a JSON manifest. Relative tensor paths resolve against
/// the manifest's directory. Every referenced tensor is opened and checked for
/// a shared H x W.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Loaded tensors of one manifest record.
struct ImageTensors {
  ProbTensor probs;
  ForegroundMap foreground;
  LabelMap ground_truth;
};

ImageTensors load_image(const ImageRecord& record, const ClassSchema& schema);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace segprune
