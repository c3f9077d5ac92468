#pragma once

#include "segprune/tensor_store.hpp"

namespace segprune {

/// Per-pixel class of maximal probability; ties go to the lowest class index.
LabelMap argmax_prediction(const ProbTensor& probs);

/// Aggregates the semantic prediction with the foreground probability map.
///
/// A pixel keeps its semantic class when that class is foreground. Otherwise,
/// when g > 0.5, it takes the most probable foreground class. All remaining
/// pixels receive `schema.background_code()`.
LabelMap fuse(const ProbTensor& probs, const ForegroundMap& fg, const ClassSchema& schema);

/// Replaces every background-code pixel with its most probable background
/// class, leaving foreground pixels untouched. Used for mIoU.
LabelMap fill_background(const LabelMap& fused, const ProbTensor& probs, const ClassSchema& schema);

/// Semantic-only counterpart of `fuse`: argmax pixels outside the foreground
/// set become the background code.
LabelMap semantic_foreground(const ProbTensor& probs, const ClassSchema& schema);

struct FusedPrediction {
  LabelMap fused_labels;
  LabelMap filled_labels;
};

FusedPrediction fuse_and_fill(const ProbTensor& probs, const ForegroundMap& fg, const ClassSchema& schema);

}  // namespace segprune
