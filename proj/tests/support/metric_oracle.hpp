#pragma once

// Brute-force segment counting over explicit pixel sets. Shares nothing with
// the library beyond the LabelMap container.

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "segprune/tensor_store.hpp"

namespace oracle {

using Px = std::pair<int, int>;
using PixelSet = std::set<Px>;

struct Blob {
  int cls = 0;
  PixelSet pixels;
  Px first;  // smallest (row, col)
};

inline std::vector<Blob> components(const segprune::LabelMap& m, const std::set<int>& classes) {
  std::vector<Blob> out;
  std::vector<char> seen(m.pixel_count(), 0);
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c) {
      const int cls = m.at(r, c);
      if (seen[r * m.width + c] || !classes.count(cls)) continue;
      Blob b;
      b.cls = cls;
      std::deque<Px> queue{{r, c}};
      seen[r * m.width + c] = 1;
      while (!queue.empty()) {
        auto [pr, pc] = queue.front();
        queue.pop_front();
        b.pixels.insert({pr, pc});
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            const int nr = pr + dr, nc = pc + dc;
            if (nr < 0 || nc < 0 || nr >= m.height || nc >= m.width) continue;
            if (seen[nr * m.width + nc] || m.at(nr, nc) != cls) continue;
            seen[nr * m.width + nc] = 1;
            queue.push_back({nr, nc});
          }
      }
      b.first = *b.pixels.begin();
      out.push_back(std::move(b));
    }
  return out;
}

inline bool touches(const PixelSet& a, const PixelSet& b) {
  for (const auto& p : a)
    if (b.count(p)) return true;
  return false;
}

inline double iou(const PixelSet& a, const PixelSet& b) {
  PixelSet uni = a;
  uni.insert(b.begin(), b.end());
  long inter = 0;
  for (const auto& p : a) inter += b.count(p);
  return uni.empty() ? 0.0 : double(inter) / double(uni.size());
}

struct Image {
  segprune::LabelMap prediction;
  segprune::LabelMap ground_truth;
  std::map<Px, double> score_of;  // keyed by the predicted segment's first pixel
};

struct Tally {
  long tp = 0, fp = 0, fn = 0;
};

// Counts at threshold h straight from the definitions: a predicted segment is
// a false positive when the union of GT segments it touches has IoU 0 with it;
// a GT segment is found when the union of surviving touching predictions has
// IoU > 0 with it.
inline Tally count(const std::vector<Image>& images, const std::set<int>& foreground, double h) {
  Tally t;
  for (const auto& im : images) {
    const auto pred = components(im.prediction, foreground);
    const auto gt = components(im.ground_truth, foreground);
    for (const auto& q : pred) {
      PixelSet gt_union;
      for (const auto& g : gt)
        if (touches(q.pixels, g.pixels)) gt_union.insert(g.pixels.begin(), g.pixels.end());
      const double m = im.score_of.at(q.first);
      if (iou(q.pixels, gt_union) == 0.0 && m <= h) ++t.fp;
    }
    for (const auto& g : gt) {
      PixelSet kept;
      for (const auto& q : pred)
        if (touches(q.pixels, g.pixels) && im.score_of.at(q.first) <= h) kept.insert(q.pixels.begin(), q.pixels.end());
      if (iou(g.pixels, kept) > 0.0) ++t.tp;
      else ++t.fn;
    }
  }
  return t;
}

}  // namespace oracle
