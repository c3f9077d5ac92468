#pragma once

#include <initializer_list>
#include <vector>

#include "segprune/tensor_store.hpp"

namespace testsupport {

using segprune::ClassSchema;
using segprune::ForegroundMap;
using segprune::LabelMap;
using segprune::ProbTensor;

inline ClassSchema make_schema(int classes, std::vector<int> foreground) {
  ClassSchema s;
  s.num_classes = classes;
  s.foreground_ids = std::move(foreground);
  for (int k = 0; k < classes; ++k) s.class_names.push_back("c" + std::to_string(k));
  s.validate();
  return s;
}

// Every pixel gets the same distribution.
inline ProbTensor constant_probs(int h, int w, std::initializer_list<float> row) {
  ProbTensor p(h, w, static_cast<int>(row.size()));
  for (std::size_t i = 0; i < p.pixel_count(); ++i) std::copy(row.begin(), row.end(), p.pixel(i).begin());
  return p;
}

inline ProbTensor single_pixel(std::initializer_list<float> row) { return constant_probs(1, 1, row); }

inline LabelMap labels(std::vector<std::vector<int>> rows) {
  LabelMap m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c) m.at(r, c) = static_cast<segprune::ClassId>(rows[r][c]);
  return m;
}

// One-hot probabilities reproducing `map` under argmax.
inline ProbTensor one_hot(const LabelMap& map, int classes) {
  ProbTensor p(map.height, map.width, classes);
  for (std::size_t i = 0; i < map.pixel_count(); ++i) p.pixel(i)[map.values[i]] = 1.0f;
  return p;
}

inline void fill_rect(LabelMap& m, int r0, int c0, int h, int w, int cls) {
  for (int r = r0; r < r0 + h; ++r)
    for (int c = c0; c < c0 + w; ++c) m.at(r, c) = static_cast<segprune::ClassId>(cls);
}

}  // namespace testsupport
