#pragma once

#include <compare>
#include <span>
#include <utility>
#include <vector>

#include "segprune/tensor_store.hpp"

namespace segprune {

struct Pixel {
  int row = 0;
  int col = 0;
  auto operator<=>(const Pixel&) const = default;
};

struct SegmentSplit {
  std::vector<Pixel> inner;
  std::vector<Pixel> boundary;
};

/// A maximal 8-connected set of equal-class pixels.
///
/// `pixels`, `inner` and `boundary` are in row-major order; inner and boundary
/// partition `pixels`.
struct Segment {
  int class_id = 0;
  std::vector<Pixel> pixels;
  std::vector<Pixel> inner;
  std::vector<Pixel> boundary;
  double center_row = 0.0;
  double center_col = 0.0;

  std::size_t size() const { return pixels.size(); }
  std::size_t inner_size() const { return inner.size(); }
  std::size_t boundary_size() const { return boundary.size(); }
};

/// Segments of the given classes, ordered by (class_id, first pixel in
/// row-major order). Inner/boundary split and center are filled in.
std::vector<Segment> connected_components(const LabelMap& labels, std::span<const int> classes);

/// Inner pixels have all eight neighbors inside the image and inside the set;
/// every other pixel is boundary. Throws ValidationError on an empty set.
SegmentSplit inner_boundary_split(std::span<const Pixel> pixels, int height, int width);

/// Mean (row, col) of the pixel set. Throws ValidationError on an empty set.
std::pair<double, double> geometric_center(std::span<const Pixel> pixels);

}  // namespace segprune
