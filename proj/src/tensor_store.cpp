#include "segprune/tensor_store.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace segprune {
namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'S', 'F', 'T', '1'};
constexpr std::uint8_t kDtypeF32 = 0;
constexpr std::uint8_t kDtypeU16 = 1;
constexpr std::size_t kMaxElements = std::size_t(1) << 31;

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) {
    bytes_.push_back(static_cast<std::uint8_t>(v & 0xFF));
    bytes_.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(std::span<const std::uint8_t> b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }
  void reserve(std::size_t n) { bytes_.reserve(n); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ValidationError("truncated tensor container");
  }
  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void write_header(ByteWriter& w, std::uint8_t dtype, std::initializer_list<int> dims) {
  for (auto b : kMagic) w.u8(b);
  w.u8(dtype);
  w.u8(static_cast<std::uint8_t>(dims.size()));
  for (int d : dims) w.u32(static_cast<std::uint32_t>(d));
}

struct Header {
  std::uint8_t dtype = 0;
  std::vector<std::uint32_t> dims;
};

Header read_header(ByteReader& r) {
  r.need(4);
  std::array<std::uint8_t, 4> magic{};
  for (auto& b : magic) b = r.u8();
  if (magic != kMagic) throw ValidationError("bad magic");
  Header h;
  h.dtype = r.u8();
  if (h.dtype != kDtypeF32 && h.dtype != kDtypeU16) throw ValidationError("unknown dtype code " + std::to_string(h.dtype));
  const std::uint8_t rank = r.u8();
  if (rank < 2 || rank > 3) throw ValidationError("unsupported rank " + std::to_string(rank));
  std::size_t total = 1;
  for (int i = 0; i < rank; ++i) {
    const std::uint32_t d = r.u32();
    if (d == 0 || d > (1u << 20)) throw ValidationError("invalid dimension " + std::to_string(d));
    total *= d;
    if (total > kMaxElements) throw ValidationError("tensor too large");
    h.dims.push_back(d);
  }
  if (h.dtype == kDtypeU16 && rank != 2) throw ValidationError("shape/dtype mismatch: label maps are rank 2");
  return h;
}

std::string shape_string(int h, int w) { return std::to_string(h) + "x" + std::to_string(w); }

}  // namespace

void ClassSchema::validate() const {
  if (num_classes < 2) throw ValidationError("schema: num_classes must be >= 2");
  if (num_classes > 65000) throw ValidationError("schema: num_classes too large");
  if (foreground_ids.empty()) throw ValidationError("schema: foreground_ids must be non-empty");
  if (static_cast<int>(foreground_ids.size()) >= num_classes)
    throw ValidationError("schema: foreground_ids must be a strict subset of the classes");
  for (std::size_t i = 0; i < foreground_ids.size(); ++i) {
    const int id = foreground_ids[i];
    if (id < 0 || id >= num_classes) throw ValidationError("schema: foreground id " + std::to_string(id) + " out of range");
    if (i > 0 && foreground_ids[i - 1] >= id) throw ValidationError("schema: foreground_ids must be sorted and unique");
  }
  if (!class_names.empty() && static_cast<int>(class_names.size()) != num_classes)
    throw ValidationError("schema: class_names must name every class");
  if (ignore_id && (*ignore_id >= 0 && *ignore_id <= num_classes))
    throw ValidationError("schema: ignore_id collides with a class id or the background code");
  if (ignore_id && (*ignore_id < 0 || *ignore_id > 0xFFFF)) throw ValidationError("schema: ignore_id out of range");
}

bool ClassSchema::is_foreground(int id) const {
  return std::binary_search(foreground_ids.begin(), foreground_ids.end(), id);
}

std::vector<int> ClassSchema::background_ids() const {
  std::vector<int> out;
  for (int k = 0; k < num_classes; ++k)
    if (!is_foreground(k)) out.push_back(k);
  return out;
}

std::string ClassSchema::class_name(int id) const {
  if (id >= 0 && id < static_cast<int>(class_names.size())) return class_names[id];
  return "class" + std::to_string(id);
}

nlohmann::json ClassSchema::to_json() const {
  nlohmann::json j;
  j["num_classes"] = num_classes;
  j["foreground_ids"] = foreground_ids;
  if (!class_names.empty()) j["class_names"] = class_names;
  if (ignore_id) j["ignore_id"] = *ignore_id;
  else j["ignore_id"] = nullptr;
  return j;
}

ClassSchema ClassSchema::from_json(const nlohmann::json& j) {
  ClassSchema s;
  try {
    s.num_classes = j.at("num_classes").get<int>();
    s.foreground_ids = j.at("foreground_ids").get<std::vector<int>>();
    std::sort(s.foreground_ids.begin(), s.foreground_ids.end());
    if (j.contains("class_names")) s.class_names = j.at("class_names").get<std::vector<std::string>>();
    if (j.contains("ignore_id")) {
      if (j.at("ignore_id").is_null()) s.ignore_id.reset();
      else s.ignore_id = j.at("ignore_id").get<int>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("schema: ") + e.what());
  }
  if (std::adjacent_find(s.foreground_ids.begin(), s.foreground_ids.end()) != s.foreground_ids.end())
    throw ValidationError("schema: duplicate foreground id");
  s.validate();
  return s;
}

void validate(const ProbTensor& probs) {
  if (probs.height <= 0 || probs.width <= 0 || probs.classes <= 0)
    throw ValidationError("probability tensor has an empty shape");
  if (probs.values.size() != probs.pixel_count() * probs.classes)
    throw ValidationError("probability tensor payload does not match its shape");
  for (std::size_t i = 0; i < probs.pixel_count(); ++i) {
    double sum = 0.0;
    for (float v : probs.pixel(i)) {
      if (!std::isfinite(v)) throw ValidationError("probability tensor contains NaN/Inf");
      if (v < 0.0f || v > 1.0f) throw ValidationError("probability outside [0,1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > kProbabilitySumTolerance) {
      std::ostringstream os;
      os << "probabilities at pixel " << i << " sum to " << sum << ", not 1";
      throw ValidationError(os.str());
    }
  }
}

void validate(const ForegroundMap& fg) {
  if (fg.height <= 0 || fg.width <= 0) throw ValidationError("foreground map has an empty shape");
  if (fg.values.size() != fg.pixel_count()) throw ValidationError("foreground map payload does not match its shape");
  for (float v : fg.values) {
    if (!std::isfinite(v)) throw ValidationError("foreground map contains NaN/Inf");
    if (v < 0.0f || v > 1.0f) throw ValidationError("foreground probability outside [0,1]");
  }
}

void validate(const LabelMap& labels, const ClassSchema& schema) {
  if (labels.height <= 0 || labels.width <= 0) throw ValidationError("label map has an empty shape");
  if (labels.values.size() != labels.pixel_count()) throw ValidationError("label map payload does not match its shape");
  for (ClassId v : labels.values) {
    if (v < schema.num_classes) continue;
    if (schema.ignore_id && v == *schema.ignore_id) continue;
    throw ValidationError("label map contains invalid class id " + std::to_string(v));
  }
}

std::vector<std::uint8_t> encode_tensor(const AnyTensor& any) {
  ByteWriter w;
  std::visit(
      [&w](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, ProbTensor>) {
          w.reserve(18 + t.values.size() * 4);
          write_header(w, kDtypeF32, {t.height, t.width, t.classes});
          for (float v : t.values) w.f32(v);
        } else if constexpr (std::is_same_v<T, ForegroundMap>) {
          w.reserve(14 + t.values.size() * 4);
          write_header(w, kDtypeF32, {t.height, t.width});
          for (float v : t.values) w.f32(v);
        } else {
          w.reserve(14 + t.values.size() * 2);
          write_header(w, kDtypeU16, {t.height, t.width});
          for (ClassId v : t.values) w.u16(v);
        }
      },
      any);
  return w.take();
}

AnyTensor decode_tensor(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const Header h = read_header(r);
  std::size_t total = 1;
  for (auto d : h.dims) total *= d;
  const std::size_t width = h.dtype == kDtypeF32 ? 4 : 2;
  if (r.remaining() != total * width)
    throw ValidationError("shape/dtype mismatch: payload has " + std::to_string(r.remaining()) + " bytes, expected " +
                          std::to_string(total * width));
  const int rows = static_cast<int>(h.dims[0]);
  const int cols = static_cast<int>(h.dims[1]);
  if (h.dtype == kDtypeU16) {
    LabelMap t(rows, cols);
    for (auto& v : t.values) v = r.u16();
    return t;
  }
  if (h.dims.size() == 3) {
    ProbTensor t(rows, cols, static_cast<int>(h.dims[2]));
    for (auto& v : t.values) v = r.f32();
    validate(t);
    return t;
  }
  ForegroundMap t(rows, cols);
  for (auto& v : t.values) v = r.f32();
  validate(t);
  return t;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failure on " + path.string());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::string read_text_file(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

void save_tensor(const std::filesystem::path& path, const ProbTensor& t) { write_file_bytes(path, encode_tensor(t)); }
void save_tensor(const std::filesystem::path& path, const ForegroundMap& t) { write_file_bytes(path, encode_tensor(t)); }
void save_tensor(const std::filesystem::path& path, const LabelMap& t) { write_file_bytes(path, encode_tensor(t)); }

AnyTensor load_tensor(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_tensor(bytes);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

namespace {
template <typename T>
T load_as(const std::filesystem::path& path, const char* kind) {
  AnyTensor any = load_tensor(path);
  if (auto* t = std::get_if<T>(&any)) return std::move(*t);
  throw ValidationError(path.string() + ": shape/dtype mismatch, expected a " + kind);
}

Header peek_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> head(18);
  in.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  ByteReader r(head);
  try {
    return read_header(r);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}
}  // namespace

ProbTensor load_prob_tensor(const std::filesystem::path& path) { return load_as<ProbTensor>(path, "probability tensor"); }
ForegroundMap load_foreground_map(const std::filesystem::path& path) {
  return load_as<ForegroundMap>(path, "foreground map");
}
LabelMap load_label_map(const std::filesystem::path& path) { return load_as<LabelMap>(path, "label map"); }

nlohmann::json DatasetManifest::to_json(const std::filesystem::path& relative_to) const {
  auto rel = [&](const std::filesystem::path& p) {
    if (relative_to.empty()) return p.generic_string();
    return p.lexically_relative(relative_to).generic_string();
  };
  nlohmann::json j;
  j["schema"] = schema.to_json();
  j["images"] = nlohmann::json::array();
  for (const auto& rec : images) {
    j["images"].push_back(
        {{"id", rec.id}, {"probs", rel(rec.probs)}, {"foreground", rel(rec.foreground)}, {"ground_truth", rel(rec.ground_truth)}});
  }
  return j;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  write_text_file(path, manifest.to_json(path.parent_path()).dump(2) + "\n");
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  DatasetManifest m;
  if (!j.contains("schema")) throw ValidationError("manifest: missing schema");
  m.schema = ClassSchema::from_json(j["schema"]);
  if (!j.contains("images") || !j["images"].is_array()) throw ValidationError("manifest: missing images list");
  if (j["images"].empty()) throw ValidationError("empty manifest");
  const auto base = path.parent_path();
  std::set<std::string> ids;
  for (const auto& item : j["images"]) {
    ImageRecord rec;
    try {
      rec.id = item.at("id").get<std::string>();
      rec.probs = base / item.at("probs").get<std::string>();
      rec.foreground = base / item.at("foreground").get<std::string>();
      rec.ground_truth = base / item.at("ground_truth").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("manifest record: ") + e.what());
    }
    if (!ids.insert(rec.id).second) throw ValidationError("manifest: duplicate image id " + rec.id);
    auto check = [&](const std::filesystem::path& p, const char* what) {
      if (!std::filesystem::exists(p))
        throw IoError("record " + rec.id + ": missing " + what + " file " + p.string());
      return peek_header(p);
    };
    const Header hp = check(rec.probs, "probs");
    const Header hf = check(rec.foreground, "foreground");
    const Header hg = check(rec.ground_truth, "ground_truth");
    if (hp.dtype != kDtypeF32 || hp.dims.size() != 3)
      throw ValidationError("record " + rec.id + ": probs is not a probability tensor");
    if (hf.dtype != kDtypeF32 || hf.dims.size() != 2)
      throw ValidationError("record " + rec.id + ": foreground is not a foreground map");
    if (hg.dtype != kDtypeU16) throw ValidationError("record " + rec.id + ": ground_truth is not a label map");
    if (static_cast<int>(hp.dims[2]) != m.schema.num_classes)
      throw ValidationError("record " + rec.id + ": probs has " + std::to_string(hp.dims[2]) + " classes, schema has " +
                            std::to_string(m.schema.num_classes));
    if (hp.dims[0] != hf.dims[0] || hp.dims[1] != hf.dims[1] || hp.dims[0] != hg.dims[0] || hp.dims[1] != hg.dims[1]) {
      throw ValidationError("record " + rec.id + ": shape mismatch (probs " +
                            shape_string(int(hp.dims[0]), int(hp.dims[1])) + ", foreground " +
                            shape_string(int(hf.dims[0]), int(hf.dims[1])) + ", ground_truth " +
                            shape_string(int(hg.dims[0]), int(hg.dims[1])) + ")");
    }
    m.images.push_back(std::move(rec));
  }
  return m;
}

ImageTensors load_image(const ImageRecord& record, const ClassSchema& schema) {
  auto tagged = [&](auto&& fn, const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) throw IoError("record " + record.id + ": missing file " + p.string());
    try {
      return fn(p);
    } catch (const ValidationError& e) {
      throw ValidationError("record " + record.id + ": " + e.what());
    }
  };
  ImageTensors out;
  out.probs = tagged(load_prob_tensor, record.probs);
  out.foreground = tagged(load_foreground_map, record.foreground);
  out.ground_truth = tagged(load_label_map, record.ground_truth);
  if (out.probs.classes != schema.num_classes)
    throw ValidationError("record " + record.id + ": class count does not match the schema");
  if (out.probs.height != out.foreground.height || out.probs.width != out.foreground.width ||
      out.probs.height != out.ground_truth.height || out.probs.width != out.ground_truth.width)
    throw ValidationError("record " + record.id + ": shape mismatch");
  try {
    validate(out.ground_truth, schema);
  } catch (const ValidationError& e) {
    throw ValidationError("record " + record.id + ": " + e.what());
  }
  return out;
}

}  // namespace segprune
