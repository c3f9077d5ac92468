#include "segprune/geometry.hpp"

#include <algorithm>
#include <cstdint>

namespace segprune {
namespace {

constexpr int kNeighborRows[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
constexpr int kNeighborCols[8] = {-1, 0, 1, -1, 1, -1, 0, 1};

}  // namespace

SegmentSplit inner_boundary_split(std::span<const Pixel> pixels, int height, int width) {
  if (pixels.empty()) throw ValidationError("inner_boundary_split: empty segment");
  int r0 = pixels.front().row, r1 = r0, c0 = pixels.front().col, c1 = c0;
  for (const auto& p : pixels) {
    r0 = std::min(r0, p.row);
    r1 = std::max(r1, p.row);
    c0 = std::min(c0, p.col);
    c1 = std::max(c1, p.col);
  }
  // Local mask with a one-pixel frame so neighbor lookups never leave it.
  const int mh = r1 - r0 + 3;
  const int mw = c1 - c0 + 3;
  std::vector<std::uint8_t> mask(std::size_t(mh) * mw, 0);
  for (const auto& p : pixels) mask[std::size_t(p.row - r0 + 1) * mw + (p.col - c0 + 1)] = 1;

  SegmentSplit out;
  for (const auto& p : pixels) {
    bool inner = p.row > 0 && p.col > 0 && p.row < height - 1 && p.col < width - 1;
    for (int n = 0; inner && n < 8; ++n) {
      const int mr = p.row - r0 + 1 + kNeighborRows[n];
      const int mc = p.col - c0 + 1 + kNeighborCols[n];
      inner = mask[std::size_t(mr) * mw + mc] != 0;
    }
    (inner ? out.inner : out.boundary).push_back(p);
  }
  return out;
}

std::pair<double, double> geometric_center(std::span<const Pixel> pixels) {
  if (pixels.empty()) throw ValidationError("geometric_center: empty segment");
  std::int64_t rows = 0, cols = 0;
  for (const auto& p : pixels) {
    rows += p.row;
    cols += p.col;
  }
  const double n = static_cast<double>(pixels.size());
  return {static_cast<double>(rows) / n, static_cast<double>(cols) / n};
}

std::vector<Segment> connected_components(const LabelMap& labels, std::span<const int> classes) {
  std::vector<Segment> out;
  if (classes.empty()) return out;
  const int h = labels.height, w = labels.width;
  std::vector<std::uint8_t> wanted(65536, 0);
  for (int c : classes)
    if (c >= 0 && c < 65536) wanted[c] = 1;

  std::vector<std::uint8_t> visited(labels.pixel_count(), 0);
  std::vector<Pixel> stack;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t idx = std::size_t(r) * w + c;
      const ClassId cls = labels.values[idx];
      if (visited[idx] || !wanted[cls]) continue;
      Segment seg;
      seg.class_id = cls;
      visited[idx] = 1;
      stack.push_back({r, c});
      while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        seg.pixels.push_back(p);
        for (int n = 0; n < 8; ++n) {
          const int nr = p.row + kNeighborRows[n];
          const int nc = p.col + kNeighborCols[n];
          if (nr < 0 || nc < 0 || nr >= h || nc >= w) continue;
          const std::size_t nidx = std::size_t(nr) * w + nc;
          if (visited[nidx] || labels.values[nidx] != cls) continue;
          visited[nidx] = 1;
          stack.push_back({nr, nc});
        }
      }
      std::sort(seg.pixels.begin(), seg.pixels.end());
      auto split = inner_boundary_split(seg.pixels, h, w);
      seg.inner = std::move(split.inner);
      seg.boundary = std::move(split.boundary);
      std::tie(seg.center_row, seg.center_col) = geometric_center(seg.pixels);
      out.push_back(std::move(seg));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Segment& a, const Segment& b) { return a.class_id < b.class_id; });
  return out;
}

}  // namespace segprune
