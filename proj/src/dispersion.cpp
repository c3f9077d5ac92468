#include "segprune/dispersion.hpp"

#include <algorithm>
#include <cmath>

namespace segprune {
namespace {

double xlogx(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

struct BlockMeans {
  double all = 0.0;
  double inner = 0.0;
  double boundary = 0.0;
};

BlockMeans block_means(const std::vector<double>& map, const Segment& seg, int width) {
  auto mean_over = [&](const std::vector<Pixel>& pixels) {
    if (pixels.empty()) return 0.0;
    CompensatedSum s;
    for (const auto& p : pixels) s.add(map[std::size_t(p.row) * width + p.col]);
    return s.value() / static_cast<double>(pixels.size());
  };
  return {mean_over(seg.pixels), mean_over(seg.inner), mean_over(seg.boundary)};
}

}  // namespace

DispersionMaps dispersion_maps(const ProbTensor& probs, const ForegroundMap& fg) {
  if (probs.height != fg.height || probs.width != fg.width) throw ValidationError("dispersion_maps: shape mismatch");
  if (probs.classes < 2) throw ValidationError("dispersion_maps: need at least two classes");
  const std::size_t n = probs.pixel_count();
  DispersionMaps out;
  out.height = probs.height;
  out.width = probs.width;
  out.entropy.resize(n);
  out.variation_ratio.resize(n);
  out.margin.resize(n);
  out.fg_entropy.resize(n);
  const double log_c = std::log(static_cast<double>(probs.classes));
  const double log_2 = std::log(2.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = probs.pixel(i);
    double h = 0.0;
    int top = 0;
    for (int k = 0; k < probs.classes; ++k) {
      h -= xlogx(p[k]);
      if (p[k] > p[top]) top = k;
    }
    double second = 0.0;
    for (int k = 0; k < probs.classes; ++k)
      if (k != top) second = std::max(second, static_cast<double>(p[k]));
    const double v = 1.0 - static_cast<double>(p[top]);
    out.entropy[i] = clamp01(h / log_c);
    out.variation_ratio[i] = clamp01(v);
    out.margin[i] = clamp01(v + second);
    const double g = fg.values[i];
    out.fg_entropy[i] = clamp01(-(xlogx(g) + xlogx(1.0 - g)) / log_2);
  }
  return out;
}

std::vector<std::string> feature_names(const ClassSchema& schema) {
  std::vector<std::string> names = {"S", "S_in", "S_bd", "S_rel", "S_in_rel"};
  for (const char* d : {"E", "V", "M", "F"}) {
    const std::string b(d);
    for (const char* suffix : {"_mean", "_mean_in", "_mean_bd", "_rel", "_rel_in"}) names.push_back(b + suffix);
  }
  names.push_back("center_row");
  names.push_back("center_col");
  for (int id : schema.foreground_ids) names.push_back("P_" + schema.class_name(id));
  return names;
}

FeatureVector extract_features(const Segment& segment, const DispersionMaps& maps, const ProbTensor& probs,
                               const ClassSchema& schema) {
  if (segment.pixels.empty()) throw ValidationError("extract_features: empty segment");
  if (segment.inner.size() + segment.boundary.size() != segment.pixels.size())
    throw ValidationError("extract_features: segment inner/boundary split is inconsistent");
  for (const auto& p : segment.pixels)
    if (p.row < 0 || p.col < 0 || p.row >= maps.height || p.col >= maps.width)
      throw ValidationError("extract_features: segment pixel outside the maps");
  if (probs.height != maps.height || probs.width != maps.width) throw ValidationError("extract_features: shape mismatch");

  const double s = static_cast<double>(segment.size());
  const double s_in = static_cast<double>(segment.inner_size());
  const double s_bd = static_cast<double>(segment.boundary_size());
  const double s_rel = s / s_bd;
  const double s_in_rel = s_in / s_bd;

  FeatureVector f;
  f.values.reserve(kFixedFeatureCount + schema.foreground_ids.size());
  f.values.insert(f.values.end(), {s, s_in, s_bd, s_rel, s_in_rel});
  for (const auto* map : {&maps.entropy, &maps.variation_ratio, &maps.margin, &maps.fg_entropy}) {
    const BlockMeans m = block_means(*map, segment, maps.width);
    f.values.insert(f.values.end(), {m.all, m.inner, m.boundary, m.all * s_rel, m.inner * s_in_rel});
  }
  f.values.push_back(segment.center_row);
  f.values.push_back(segment.center_col);
  for (int id : schema.foreground_ids) {
    CompensatedSum sum;
    for (const auto& p : segment.pixels) sum.add(probs.at(p.row, p.col, id));
    f.values.push_back(clamp01(sum.value() / s));
  }
  return f;
}

}  // namespace segprune
