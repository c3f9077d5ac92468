#include "segprune/fusion.hpp"

namespace segprune {
namespace {

void require_classes(const ProbTensor& probs, const ClassSchema& schema) {
  if (probs.classes != schema.num_classes)
    throw ValidationError("probability tensor has " + std::to_string(probs.classes) + " classes, schema has " +
                          std::to_string(schema.num_classes));
}

// Strict comparison keeps the first (lowest) index among equal maxima.
template <typename Range>
int restricted_argmax(std::span<const float> p, const Range& ids) {
  int best = -1;
  float best_value = 0.0f;
  for (int id : ids) {
    if (best < 0 || p[id] > best_value) {
      best = id;
      best_value = p[id];
    }
  }
  return best;
}

int full_argmax(std::span<const float> p) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(p.size()); ++k)
    if (p[k] > p[best]) best = k;
  return best;
}

}  // namespace

LabelMap argmax_prediction(const ProbTensor& probs) {
  LabelMap out(probs.height, probs.width);
  for (std::size_t i = 0; i < probs.pixel_count(); ++i) out.values[i] = static_cast<ClassId>(full_argmax(probs.pixel(i)));
  return out;
}

LabelMap fuse(const ProbTensor& probs, const ForegroundMap& fg, const ClassSchema& schema) {
  require_classes(probs, schema);
  if (probs.height != fg.height || probs.width != fg.width) throw ValidationError("fuse: shape mismatch");
  const auto background = static_cast<ClassId>(schema.background_code());
  LabelMap out(probs.height, probs.width, background);
  for (std::size_t i = 0; i < probs.pixel_count(); ++i) {
    const auto p = probs.pixel(i);
    const int semantic = full_argmax(p);
    if (schema.is_foreground(semantic)) {
      out.values[i] = static_cast<ClassId>(semantic);
    } else if (fg.values[i] > 0.5f) {
      out.values[i] = static_cast<ClassId>(restricted_argmax(p, schema.foreground_ids));
    }
  }
  return out;
}

LabelMap fill_background(const LabelMap& fused, const ProbTensor& probs, const ClassSchema& schema) {
  require_classes(probs, schema);
  if (probs.height != fused.height || probs.width != fused.width) throw ValidationError("fill_background: shape mismatch");
  const auto background_ids = schema.background_ids();
  LabelMap out = fused;
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    if (out.values[i] == schema.background_code())
      out.values[i] = static_cast<ClassId>(restricted_argmax(probs.pixel(i), background_ids));
  }
  return out;
}

LabelMap semantic_foreground(const ProbTensor& probs, const ClassSchema& schema) {
  require_classes(probs, schema);
  LabelMap out = argmax_prediction(probs);
  for (auto& v : out.values)
    if (!schema.is_foreground(v)) v = static_cast<ClassId>(schema.background_code());
  return out;
}

FusedPrediction fuse_and_fill(const ProbTensor& probs, const ForegroundMap& fg, const ClassSchema& schema) {
  FusedPrediction out;
  out.fused_labels = fuse(probs, fg, schema);
  out.filled_labels = fill_background(out.fused_labels, probs, schema);
  return out;
}

}  // namespace segprune
