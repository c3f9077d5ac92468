#include "segprune/synth_bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "segprune/geometry.hpp"
#include "segprune/random.hpp"

namespace segprune {
namespace {

constexpr int kNeighborRows[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
constexpr int kNeighborCols[8] = {-1, 0, 1, -1, 1, -1, 0, 1};

// Pixel offsets of a blob inside its bounding box.
std::vector<Pixel> blob_mask(int h, int w, bool ellipse) {
  std::vector<Pixel> out;
  const double cr = (h - 1) / 2.0, cc = (w - 1) / 2.0;
  const double ar = h / 2.0, ac = w / 2.0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (ellipse) {
        const double dr = (r - cr) / ar, dc = (c - cc) / ac;
        if (dr * dr + dc * dc > 1.0) continue;
      }
      out.push_back({r, c});
    }
  }
  return out;
}

bool pick_ellipse(BlobShape shape, Rng& rng) {
  switch (shape) {
    case BlobShape::Rectangle: return false;
    case BlobShape::Ellipse: return true;
    case BlobShape::Mixed: return rng.bernoulli(0.5);
  }
  return false;
}

int pick_class(const SceneConfig& cfg, const ClassSchema& schema, Rng& rng) {
  const auto& ids = schema.foreground_ids;
  if (cfg.class_frequencies.empty()) return ids[rng.below(ids.size())];
  double u = rng.uniform();
  for (std::size_t k = 0; k < ids.size(); ++k) {
    u -= cfg.class_frequencies[k];
    if (u < 0.0) return ids[k];
  }
  return ids.back();
}

// Occupancy grid that also blocks the 8-neighborhood of every placed pixel.
class Occupancy {
 public:
  Occupancy(int h, int w) : h_(h), w_(w), blocked_(std::size_t(h) * w, 0) {}

  bool fits(const std::vector<Pixel>& shape, int r0, int c0) const {
    for (const auto& p : shape) {
      const int r = r0 + p.row, c = c0 + p.col;
      if (r < 0 || c < 0 || r >= h_ || c >= w_ || blocked_[std::size_t(r) * w_ + c]) return false;
    }
    return true;
  }
  void place(const std::vector<Pixel>& shape, int r0, int c0) {
    for (const auto& p : shape) {
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const int r = r0 + p.row + dr, c = c0 + p.col + dc;
          if (r >= 0 && c >= 0 && r < h_ && c < w_) blocked_[std::size_t(r) * w_ + c] = 1;
        }
    }
  }

 private:
  int h_, w_;
  std::vector<std::uint8_t> blocked_;
};

struct PlacedBlob {
  std::vector<Pixel> pixels;  // absolute coordinates
  int class_id = 0;
};

// Random blob placed where the occupancy grid allows; empty when no spot is found.
std::optional<PlacedBlob> place_blob(const SceneConfig& cfg, const ClassSchema& schema, Occupancy& occ, Rng& rng,
                                     int height, int width) {
  for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
    const int bh = rng.between(cfg.min_extent, std::min(cfg.max_extent, height));
    const int bw = rng.between(cfg.min_extent, std::min(cfg.max_extent, width));
    const bool ellipse = pick_ellipse(cfg.shape, rng);
    const int cls = pick_class(cfg, schema, rng);
    const int r0 = rng.between(0, height - bh);
    const int c0 = rng.between(0, width - bw);
    const auto shape = blob_mask(bh, bw, ellipse);
    if (!occ.fits(shape, r0, c0)) continue;
    occ.place(shape, r0, c0);
    PlacedBlob b;
    b.class_id = cls;
    for (const auto& p : shape) b.pixels.push_back({r0 + p.row, c0 + p.col});
    return b;
  }
  return std::nullopt;
}

// Most frequent background class on the outer ring of a pixel set.
int surrounding_background(const LabelMap& labels, const std::vector<Pixel>& pixels, const ClassSchema& schema) {
  std::map<int, int> votes;
  for (const auto& p : pixels) {
    for (int n = 0; n < 8; ++n) {
      const int r = p.row + kNeighborRows[n], c = p.col + kNeighborCols[n];
      if (r < 0 || c < 0 || r >= labels.height || c >= labels.width) continue;
      const int v = labels.at(r, c);
      if (v < schema.num_classes && !schema.is_foreground(v)) votes[v]++;
    }
  }
  int best = schema.background_ids().front();
  int best_votes = 0;
  for (const auto& [cls, n] : votes)
    if (n > best_votes) {
      best = cls;
      best_votes = n;
    }
  return best;
}

// Background band label per row, recovered from the ground truth.
std::vector<int> background_per_pixel(const LabelMap& gt, const ClassSchema& schema) {
  const auto bg = schema.background_ids();
  std::vector<int> out(gt.pixel_count(), bg.front());
  for (int r = 0; r < gt.height; ++r) {
    int row_class = -1;
    for (int c = 0; c < gt.width && row_class < 0; ++c) {
      const int v = gt.at(r, c);
      if (v < schema.num_classes && !schema.is_foreground(v)) row_class = v;
    }
    if (row_class < 0) row_class = r > 0 ? out[std::size_t(r - 1) * gt.width] : bg.front();
    for (int c = 0; c < gt.width; ++c) {
      const int v = gt.at(r, c);
      out[std::size_t(r) * gt.width + c] = (v < schema.num_classes && !schema.is_foreground(v)) ? v : row_class;
    }
  }
  return out;
}

// Per-pixel description of the simulated semantic output before softmax.
struct PixelPlan {
  int assigned = 0;
  int residual = -1;
  double confidence = 1.0;
  double residual_share = 0.0;
};

std::vector<Pixel> shifted(const std::vector<Pixel>& pixels, int dr, int dc, int h, int w) {
  std::vector<Pixel> out;
  out.reserve(pixels.size());
  for (const auto& p : pixels) {
    const int r = p.row + dr, c = p.col + dc;
    if (r >= 0 && c >= 0 && r < h && c < w) out.push_back({r, c});
  }
  return out;
}

std::vector<Pixel> pixels_of(const std::vector<int>& mask_owner, int owner, int h, int w) {
  std::vector<Pixel> out;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (mask_owner[std::size_t(r) * w + c] == owner) out.push_back({r, c});
  return out;
}

}  // namespace

void SceneConfig::validate(const ClassSchema& schema) const {
  if (height < 1 || width < 1) throw ValidationError("scene: image size must be positive");
  if (min_blobs < 0 || max_blobs < min_blobs) throw ValidationError("scene: invalid blob count range");
  if (min_extent < 1 || max_extent < min_extent) throw ValidationError("scene: invalid blob extent range");
  if (min_extent > height || min_extent > width) throw ValidationError("scene: blobs do not fit the image");
  if (background_bands < 1) throw ValidationError("scene: need at least one background band");
  if (max_retries < 1) throw ValidationError("scene: max_retries must be positive");
  if (!class_frequencies.empty()) {
    if (class_frequencies.size() != schema.foreground_ids.size())
      throw ValidationError("scene: class_frequencies must cover every foreground class");
    double sum = 0.0;
    for (double f : class_frequencies) {
      if (!(f >= 0.0)) throw ValidationError("scene: negative class frequency");
      sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("scene: class frequencies must sum to 1");
  }
}

nlohmann::json SceneConfig::to_json() const {
  const char* shape_name = shape == BlobShape::Rectangle ? "rectangle" : shape == BlobShape::Ellipse ? "ellipse" : "mixed";
  return {{"height", height},
          {"width", width},
          {"min_blobs", min_blobs},
          {"max_blobs", max_blobs},
          {"min_extent", min_extent},
          {"max_extent", max_extent},
          {"shape", shape_name},
          {"class_frequencies", class_frequencies},
          {"background_bands", background_bands},
          {"max_retries", max_retries},
          {"rng_seed", rng_seed}};
}

SceneConfig SceneConfig::from_json(const nlohmann::json& j) { return from_json(j, SceneConfig{}); }

SceneConfig SceneConfig::from_json(const nlohmann::json& j, SceneConfig c) {
  try {
    if (j.contains("height")) c.height = j["height"].get<int>();
    if (j.contains("width")) c.width = j["width"].get<int>();
    if (j.contains("min_blobs")) c.min_blobs = j["min_blobs"].get<int>();
    if (j.contains("max_blobs")) c.max_blobs = j["max_blobs"].get<int>();
    if (j.contains("min_extent")) c.min_extent = j["min_extent"].get<int>();
    if (j.contains("max_extent")) c.max_extent = j["max_extent"].get<int>();
    if (j.contains("shape")) {
      const auto s = j["shape"].get<std::string>();
      if (s == "rectangle") c.shape = BlobShape::Rectangle;
      else if (s == "ellipse") c.shape = BlobShape::Ellipse;
      else if (s == "mixed") c.shape = BlobShape::Mixed;
      else throw ValidationError("scene: unknown shape " + s);
    }
    if (j.contains("class_frequencies")) c.class_frequencies = j["class_frequencies"].get<std::vector<double>>();
    if (j.contains("background_bands")) c.background_bands = j["background_bands"].get<int>();
    if (j.contains("max_retries")) c.max_retries = j["max_retries"].get<int>();
    if (j.contains("rng_seed")) c.rng_seed = j["rng_seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("scene config: ") + e.what());
  }
  return c;
}

double CorruptionConfig::effective(double rate) const { return std::min(1.0, rate * domain_shift); }

void CorruptionConfig::validate() const {
  for (double r : {semantic_miss_rate, semantic_false_positive_rate, fg_miss_rate, fg_false_alarm_rate})
    if (!(r >= 0.0 && r <= 1.0)) throw ValidationError("corruption: rates must lie in [0,1]");
  if (!(temperature > 0.0)) throw ValidationError("corruption: temperature must be > 0");
  if (boundary_jitter < 0) throw ValidationError("corruption: jitter must be >= 0");
  if (false_positive_slots < 0) throw ValidationError("corruption: false_positive_slots must be >= 0");
  if (!(domain_shift >= 0.0)) throw ValidationError("corruption: domain_shift must be >= 0");
  if (!(confidence > 0.0)) throw ValidationError("corruption: confidence must be > 0");
  if (!(miss_residual >= 0.0 && miss_residual < 1.0)) throw ValidationError("corruption: miss_residual must lie in [0,1)");
  if (!(false_positive_confidence > 0.0 && false_positive_confidence <= 1.0))
    throw ValidationError("corruption: false_positive_confidence must lie in (0,1]");
}

nlohmann::json CorruptionConfig::to_json() const {
  return {{"semantic_miss_rate", semantic_miss_rate},
          {"semantic_false_positive_rate", semantic_false_positive_rate},
          {"false_positive_slots", false_positive_slots},
          {"boundary_jitter", boundary_jitter},
          {"temperature", temperature},
          {"fg_miss_rate", fg_miss_rate},
          {"fg_false_alarm_rate", fg_false_alarm_rate},
          {"domain_shift", domain_shift},
          {"confidence", confidence},
          {"miss_residual", miss_residual},
          {"false_positive_confidence", false_positive_confidence},
          {"rng_seed", rng_seed}};
}

CorruptionConfig CorruptionConfig::from_json(const nlohmann::json& j) { return from_json(j, CorruptionConfig{}); }

CorruptionConfig CorruptionConfig::from_json(const nlohmann::json& j, CorruptionConfig c) {
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
    };
    get("semantic_miss_rate", c.semantic_miss_rate);
    get("semantic_false_positive_rate", c.semantic_false_positive_rate);
    get("false_positive_slots", c.false_positive_slots);
    get("boundary_jitter", c.boundary_jitter);
    get("temperature", c.temperature);
    get("fg_miss_rate", c.fg_miss_rate);
    get("fg_false_alarm_rate", c.fg_false_alarm_rate);
    get("domain_shift", c.domain_shift);
    get("confidence", c.confidence);
    get("miss_residual", c.miss_residual);
    get("false_positive_confidence", c.false_positive_confidence);
    get("rng_seed", c.rng_seed);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("corruption config: ") + e.what());
  }
  c.validate();
  return c;
}

ClassSchema default_synthetic_schema() {
  ClassSchema s;
  s.num_classes = 6;
  s.foreground_ids = {0, 1, 2};
  s.class_names = {"person", "car", "bicycle", "road", "building", "sky"};
  s.ignore_id = 255;
  return s;
}

LabelMap generate_scene(const SceneConfig& cfg, const ClassSchema& schema) {
  schema.validate();
  cfg.validate(schema);
  Rng rng(mix_seed(cfg.rng_seed, 0x7363656e));
  const auto bg = schema.background_ids();

  // Background bands: sorted distinct cut rows, classes cycling from a random offset.
  const int bands = std::min(cfg.background_bands, cfg.height);
  std::vector<int> cuts;
  while (static_cast<int>(cuts.size()) < bands - 1) {
    const int r = rng.between(1, cfg.height - 1);
    if (std::find(cuts.begin(), cuts.end(), r) == cuts.end()) cuts.push_back(r);
  }
  std::sort(cuts.begin(), cuts.end());
  const std::size_t offset = rng.below(bg.size());
  LabelMap out(cfg.height, cfg.width);
  for (int r = 0; r < cfg.height; ++r) {
    const auto band = static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), r) - cuts.begin());
    const auto cls = static_cast<ClassId>(bg[(offset + band) % bg.size()]);
    for (int c = 0; c < cfg.width; ++c) out.at(r, c) = cls;
  }

  const int count = rng.between(cfg.min_blobs, cfg.max_blobs);
  Occupancy occ(cfg.height, cfg.width);
  for (int b = 0; b < count; ++b) {
    auto blob = place_blob(cfg, schema, occ, rng, cfg.height, cfg.width);
    if (!blob) throw ValidationError("scene: cannot place blob " + std::to_string(b) + " without overlap");
    for (const auto& p : blob->pixels) out.at(p.row, p.col) = static_cast<ClassId>(blob->class_id);
  }
  return out;
}

SemanticCorruption corrupt_semantic_detailed(const LabelMap& gt, const CorruptionConfig& cfg,
                                             const ClassSchema& schema) {
  schema.validate();
  cfg.validate();
  validate(gt, schema);
  Rng rng(mix_seed(cfg.rng_seed, 0x73656d61));
  const int h = gt.height, w = gt.width;
  const auto blobs = connected_components(gt, schema.foreground_ids);
  const auto band = background_per_pixel(gt, schema);

  std::vector<PixelPlan> plan(gt.pixel_count());
  std::vector<int> owner(gt.pixel_count(), -1);  // predicted foreground region id
  std::vector<double> region_conf;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    plan[i].assigned = band[i];
    plan[i].confidence = 1.0;
  }
  // Background bands get one confidence factor per class.
  std::vector<double> band_conf(schema.num_classes);
  for (auto& v : band_conf) v = rng.uniform(0.6, 1.0);
  for (std::size_t i = 0; i < plan.size(); ++i) plan[i].confidence = band_conf[plan[i].assigned];

  SemanticCorruption out;
  out.blob_missed.assign(blobs.size(), 0);
  const double miss_rate = cfg.effective(cfg.semantic_miss_rate);
  const int j = cfg.boundary_jitter;
  for (std::size_t b = 0; b < blobs.size(); ++b) {
    const auto& blob = blobs[b];
    const bool missed = rng.bernoulli(miss_rate);
    const double factor = rng.uniform(0.6, 1.0);
    const int dr = j > 0 ? rng.between(-j, j) : 0;
    const int dc = j > 0 ? rng.between(-j, j) : 0;
    out.blob_missed[b] = missed ? 1 : 0;
    if (missed) {
      const int under = surrounding_background(gt, blob.pixels, schema);
      for (const auto& p : blob.pixels) {
        auto& pp = plan[std::size_t(p.row) * w + p.col];
        pp.assigned = under;
        pp.confidence = 0.5 * factor;
        pp.residual = blob.class_id;
        pp.residual_share = cfg.miss_residual;
      }
      continue;
    }
    const int region = static_cast<int>(region_conf.size());
    region_conf.push_back(factor);
    for (const auto& p : shifted(blob.pixels, dr, dc, h, w)) {
      const std::size_t idx = std::size_t(p.row) * w + p.col;
      if (owner[idx] >= 0) continue;
      owner[idx] = region;
      plan[idx].assigned = blob.class_id;
    }
  }

  // Injected false-positive blobs away from the ground-truth blobs.
  Occupancy occ(h, w);
  for (const auto& blob : blobs) occ.place(blob.pixels, 0, 0);
  SceneConfig fp_shape;
  fp_shape.min_extent = 3;
  fp_shape.max_extent = 8;
  fp_shape.max_retries = 50;
  const double fp_rate = cfg.effective(cfg.semantic_false_positive_rate);
  for (int slot = 0; slot < cfg.false_positive_slots; ++slot) {
    if (!rng.bernoulli(fp_rate)) continue;
    auto blob = place_blob(fp_shape, schema, occ, rng, h, w);
    if (!blob) continue;
    const int region = static_cast<int>(region_conf.size());
    region_conf.push_back(cfg.false_positive_confidence * rng.uniform(0.6, 1.0));
    for (const auto& p : blob->pixels) {
      const std::size_t idx = std::size_t(p.row) * w + p.col;
      if (owner[idx] >= 0) continue;
      owner[idx] = region;
      plan[idx].residual = plan[idx].assigned;
      plan[idx].residual_share = 0.5;
      plan[idx].assigned = blob->class_id;
    }
  }

  // Ragged boundaries: erode/dilate the one-pixel ring of each region.
  if (j > 0) {
    for (int region = 0; region < static_cast<int>(region_conf.size()); ++region) {
      const auto pixels = pixels_of(owner, region, h, w);
      if (pixels.empty()) continue;
      const int cls = plan[std::size_t(pixels.front().row) * w + pixels.front().col].assigned;
      std::vector<std::size_t> erode, dilate;
      for (const auto& p : pixels) {
        for (int n = 0; n < 8; ++n) {
          const int r = p.row + kNeighborRows[n], c = p.col + kNeighborCols[n];
          if (r < 0 || c < 0 || r >= h || c >= w) continue;
          const std::size_t nidx = std::size_t(r) * w + c;
          if (owner[nidx] == region) continue;
          if (owner[nidx] < 0) dilate.push_back(nidx);
          erode.push_back(std::size_t(p.row) * w + p.col);
        }
      }
      std::sort(erode.begin(), erode.end());
      erode.erase(std::unique(erode.begin(), erode.end()), erode.end());
      std::sort(dilate.begin(), dilate.end());
      dilate.erase(std::unique(dilate.begin(), dilate.end()), dilate.end());
      for (std::size_t idx : erode) {
        if (erode.size() >= pixels.size() || !rng.bernoulli(0.2)) continue;
        owner[idx] = -1;
        plan[idx].assigned = band[idx];
        plan[idx].residual = cls;
        plan[idx].residual_share = 0.5;
      }
      for (std::size_t idx : dilate) {
        if (!rng.bernoulli(0.2)) continue;
        owner[idx] = region;
        plan[idx].residual = plan[idx].assigned;
        plan[idx].residual_share = 0.5;
        plan[idx].assigned = cls;
      }
    }
  }
  for (std::size_t i = 0; i < plan.size(); ++i)
    if (owner[i] >= 0) plan[i].confidence = region_conf[owner[i]];

  // Pixels next to a different class are less confident.
  std::vector<double> conf(plan.size());
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t idx = std::size_t(r) * w + c;
      bool edge = false;
      for (int n = 0; n < 8 && !edge; ++n) {
        const int rr = r + kNeighborRows[n], cc = c + kNeighborCols[n];
        if (rr < 0 || cc < 0 || rr >= h || cc >= w) continue;
        edge = plan[std::size_t(rr) * w + cc].assigned != plan[idx].assigned;
      }
      conf[idx] = plan[idx].confidence * (edge ? 0.5 : 1.0);
    }
  }

  out.probs = ProbTensor(h, w, schema.num_classes);
  std::vector<double> logits(schema.num_classes);
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& pp = plan[i];
    const double gap = cfg.confidence * conf[i];
    for (int k = 0; k < schema.num_classes; ++k) logits[k] = rng.uniform();
    logits[pp.assigned] = 1.0 + gap;
    if (pp.residual >= 0 && pp.residual != pp.assigned) logits[pp.residual] = 1.0 + gap * pp.residual_share;
    const double top = 1.0 + gap;
    double z = 0.0;
    for (auto& l : logits) {
      l = std::exp((l - top) / cfg.temperature);
      z += l;
    }
    auto px = out.probs.pixel(i);
    for (int k = 0; k < schema.num_classes; ++k) px[k] = static_cast<float>(logits[k] / z);
  }
  return out;
}

ProbTensor corrupt_semantic(const LabelMap& gt, const CorruptionConfig& config, const ClassSchema& schema) {
  return corrupt_semantic_detailed(gt, config, schema).probs;
}

ForegroundCorruption corrupt_foreground_detailed(const LabelMap& gt, const CorruptionConfig& cfg,
                                                 const ClassSchema& schema) {
  schema.validate();
  cfg.validate();
  validate(gt, schema);
  Rng rng(mix_seed(cfg.rng_seed, 0x66677264));
  const int h = gt.height, w = gt.width;
  const auto blobs = connected_components(gt, schema.foreground_ids);

  std::vector<double> margin(gt.pixel_count(), -1.0);  // > 0 marks predicted foreground
  ForegroundCorruption out;
  out.blob_missed.assign(blobs.size(), 0);
  const double miss_rate = cfg.effective(cfg.fg_miss_rate);
  const int j = cfg.boundary_jitter;
  for (std::size_t b = 0; b < blobs.size(); ++b) {
    const bool missed = rng.bernoulli(miss_rate);
    const double delta = rng.uniform(0.25, 0.49);
    const int dr = j > 0 ? rng.between(-j, j) : 0;
    const int dc = j > 0 ? rng.between(-j, j) : 0;
    out.blob_missed[b] = missed ? 1 : 0;
    if (missed) continue;
    for (const auto& p : shifted(blobs[b].pixels, dr, dc, h, w)) margin[std::size_t(p.row) * w + p.col] = delta;
  }

  Occupancy occ(h, w);
  for (const auto& blob : blobs) occ.place(blob.pixels, 0, 0);
  SceneConfig alarm_shape;
  alarm_shape.min_extent = 3;
  alarm_shape.max_extent = 10;
  alarm_shape.max_retries = 50;
  const double alarm_rate = cfg.effective(cfg.fg_false_alarm_rate);
  for (int slot = 0; slot < cfg.false_positive_slots; ++slot) {
    if (!rng.bernoulli(alarm_rate)) continue;
    auto blob = place_blob(alarm_shape, schema, occ, rng, h, w);
    if (!blob) continue;
    const double delta = rng.uniform(0.05, 0.3);
    for (const auto& p : blob->pixels) margin[std::size_t(p.row) * w + p.col] = delta;
  }

  out.foreground = ForegroundMap(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t idx = std::size_t(r) * w + c;
      const bool inside = margin[idx] > 0.0;
      bool edge = false;
      for (int n = 0; n < 8 && !edge; ++n) {
        const int rr = r + kNeighborRows[n], cc = c + kNeighborCols[n];
        if (rr < 0 || cc < 0 || rr >= h || cc >= w) continue;
        edge = (margin[std::size_t(rr) * w + cc] > 0.0) != inside;
      }
      double delta = inside ? margin[idx] : rng.uniform(0.3, 0.5);
      if (edge) delta *= 0.5;
      out.foreground.values[idx] = static_cast<float>(inside ? 0.5 + delta : 0.5 - delta);
    }
  }
  return out;
}

ForegroundMap corrupt_foreground(const LabelMap& gt, const CorruptionConfig& config, const ClassSchema& schema) {
  return corrupt_foreground_detailed(gt, config, schema).foreground;
}

nlohmann::json SynthConfig::to_json() const {
  return {{"scene", scene.to_json()}, {"corruption", corruption.to_json()}, {"num_images", num_images}, {"seed", seed}};
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) { return from_json(j, SynthConfig{}); }

SynthConfig SynthConfig::from_json(const nlohmann::json& j, SynthConfig c) {
  try {
    if (j.contains("scene")) c.scene = SceneConfig::from_json(j["scene"], c.scene);
    if (j.contains("corruption")) c.corruption = CorruptionConfig::from_json(j["corruption"], c.corruption);
    if (j.contains("num_images")) c.num_images = j["num_images"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("synth config: ") + e.what());
  }
  return c;
}

std::string synthetic_image_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "img%05d", index);
  return buf;
}

ImageTensors make_synthetic_image(const SynthConfig& config, const ClassSchema& schema, int index) {
  SceneConfig scene = config.scene;
  scene.rng_seed = mix_seed(config.seed, 2 * static_cast<std::uint64_t>(index));
  CorruptionConfig corruption = config.corruption;
  corruption.rng_seed = mix_seed(config.seed, 2 * static_cast<std::uint64_t>(index) + 1);
  ImageTensors out;
  out.ground_truth = generate_scene(scene, schema);
  out.probs = corrupt_semantic(out.ground_truth, corruption, schema);
  out.foreground = corrupt_foreground(out.ground_truth, corruption, schema);
  return out;
}

DatasetManifest write_synthetic_dataset(const std::filesystem::path& dir, const SynthConfig& config,
                                        const ClassSchema& schema) {
  if (config.num_images <= 0) throw ValidationError("empty dataset");
  schema.validate();
  config.scene.validate(schema);
  config.corruption.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  DatasetManifest manifest;
  manifest.schema = schema;
  for (int i = 0; i < config.num_images; ++i) {
    const auto id = synthetic_image_id(i);
    const auto tensors = make_synthetic_image(config, schema, i);
    ImageRecord rec{id, dir / (id + "_probs.sft"), dir / (id + "_fg.sft"), dir / (id + "_gt.sft")};
    save_tensor(rec.probs, tensors.probs);
    save_tensor(rec.foreground, tensors.foreground);
    save_tensor(rec.ground_truth, tensors.ground_truth);
    manifest.images.push_back(std::move(rec));
  }
  save_manifest(dir / "manifest.json", manifest);
  return manifest;
}

}  // namespace segprune
