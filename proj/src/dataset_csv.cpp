#include "segprune/dataset_csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "segprune/tensor_store.hpp"

namespace segprune {
namespace {

const std::vector<std::string> kMetaColumns = {"image_id", "segment_id", "class_id", "iou", "target"};

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_real(const std::string& s, const std::string& column, std::size_t row) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ValidationError("csv row " + std::to_string(row) + ": non-finite or malformed value '" + s + "' in column " +
                          column);
  return v;
}

int parse_int(const std::string& s, const std::string& column, std::size_t row) {
  int v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ValidationError("csv row " + std::to_string(row) + ": malformed integer '" + s + "' in column " + column);
  return v;
}

}  // namespace

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_segment_csv(const SegmentTable& table) {
  std::string out = "image_id,segment_id,class_id";
  for (const auto& name : table.feature_names) out += "," + name;
  out += ",iou,target";
  const bool with_scores =
      !table.records.empty() && std::all_of(table.records.begin(), table.records.end(),
                                            [](const SegmentRecord& r) { return r.meta_score.has_value(); });
  if (with_scores) out += ",meta_score";
  out += "\n";
  for (const auto& r : table.records) {
    if (r.image_id.find_first_of(",\"\n\r") != std::string::npos)
      throw ValidationError("image id '" + r.image_id + "' cannot be written to csv");
    if (r.features.size() != table.feature_names.size())
      throw ValidationError("record feature count does not match the header");
    out += r.image_id + "," + std::to_string(r.segment_id) + "," + std::to_string(r.class_id);
    for (double v : r.features.values) out += "," + format_real(v);
    out += "," + format_real(r.adjusted_iou) + "," + std::to_string(r.target);
    if (with_scores) out += "," + format_real(*r.meta_score);
    out += "\n";
  }
  return out;
}

void write_segment_csv(const std::filesystem::path& path, const SegmentTable& table) {
  write_text_file(path, format_segment_csv(table));
}

SegmentTable parse_segment_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_line(line);
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!column.emplace(header[i], i).second) throw ValidationError("csv: duplicate column " + header[i]);
  }
  for (const auto& required : kMetaColumns)
    if (!column.count(required)) throw ValidationError("csv: missing column " + required);

  SegmentTable table;
  std::vector<std::size_t> feature_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto& name = header[i];
    if (std::find(kMetaColumns.begin(), kMetaColumns.end(), name) != kMetaColumns.end() || name == "meta_score") continue;
    feature_cols.push_back(i);
    table.feature_names.push_back(name);
  }
  if (table.feature_names.empty()) throw ValidationError("csv: no feature columns");
  const bool has_score = column.count("meta_score") > 0;

  std::size_t row = 0;
  while (std::getline(is, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size())
      throw ValidationError("csv row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                            " cells, got " + std::to_string(cells.size()));
    SegmentRecord r;
    r.image_id = cells[column["image_id"]];
    r.segment_id = parse_int(cells[column["segment_id"]], "segment_id", row);
    r.class_id = parse_int(cells[column["class_id"]], "class_id", row);
    r.adjusted_iou = parse_real(cells[column["iou"]], "iou", row);
    r.target = parse_int(cells[column["target"]], "target", row);
    if (r.adjusted_iou < 0.0 || r.adjusted_iou > 1.0) throw ValidationError("csv row " + std::to_string(row) + ": iou outside [0,1]");
    if (r.target != 0 && r.target != 1) throw ValidationError("csv row " + std::to_string(row) + ": target must be 0 or 1");
    if ((r.target == 1) != (r.adjusted_iou == 0.0))
      throw ValidationError("csv row " + std::to_string(row) + ": target disagrees with iou");
    r.features.values.reserve(feature_cols.size());
    for (std::size_t k = 0; k < feature_cols.size(); ++k)
      r.features.values.push_back(parse_real(cells[feature_cols[k]], table.feature_names[k], row));
    if (has_score) r.meta_score = parse_real(cells[column["meta_score"]], "meta_score", row);
    table.records.push_back(std::move(r));
  }
  return table;
}

SegmentTable read_segment_csv(const std::filesystem::path& path) { return parse_segment_csv(read_text_file(path)); }

}  // namespace segprune
