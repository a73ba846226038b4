#include "h2v/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "h2v/error.hpp"
#include "h2v/url.hpp"
#include "h2v/util.hpp"

namespace h2v {

namespace {

constexpr const char* kLabelsSchema = "# h2v labels v1";
constexpr const char* kMappingSchema = "# h2v mapping v1";
constexpr const char* kClassesSchema = "# h2v classes v1";
constexpr const char* kContentSchema = "# h2v content v1";

constexpr const char* kLabelsHeader = "url\tuid\tlabel\tlang";
constexpr const char* kMappingHeader = "lang\tsource_path\tenglish_path";

// The schema line is the first '#' line of a file. A '# h2v' line that
// names a different format is a hard error; foreign comments pass.
void check_schema_line(const std::string& line, const char* expected,
                       const char* what) {
  if (starts_with(line, "# h2v") && line != expected) {
    raise(ErrorKind::Validation,
          std::string(what) + ": unexpected schema line \"" + line + "\"");
  }
}

bool parse_int64(std::string_view s, int64_t& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

void require_tsv_safe(const std::string& field, const char* what) {
  if (field.find('\t') != std::string::npos ||
      field.find('\n') != std::string::npos) {
    raise(ErrorKind::Validation,
          std::string(what) + " contains a tab or newline: " + field);
  }
}

}  // namespace

ParsedLabels parse_label_records(std::istream& in) {
  if (!in) raise(ErrorKind::Io, "labels: unreadable stream");
  ParsedLabels out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (first) check_schema_line(line, kLabelsSchema, "labels");
      first = false;
      continue;
    }
    first = false;
    if (line == kLabelsHeader) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 4) {
      ++out.skipped;
      continue;
    }
    LabelRecord rec;
    rec.url = fields[0];
    rec.label = fields[2];
    rec.lang = fields[3];
    if (rec.url.empty() || rec.label.empty() || rec.lang.empty() ||
        !parse_int64(fields[1], rec.uid)) {
      ++out.skipped;
      continue;
    }
    out.records.push_back(std::move(rec));
  }
  if (in.bad()) raise(ErrorKind::Io, "labels: read failure");

  // Duplicate uid detection; duplicates are surfaced, never merged.
  std::set<int64_t> seen, dup;
  for (const auto& r : out.records) {
    if (!seen.insert(r.uid).second) dup.insert(r.uid);
  }
  if (!dup.empty()) {
    std::string msg = "labels: duplicate uid(s):";
    for (int64_t uid : dup) msg += " " + std::to_string(uid);
    raise(ErrorKind::Validation, msg);
  }
  return out;
}

void write_label_records(std::ostream& out,
                         const std::vector<LabelRecord>& records) {
  out << kLabelsSchema << "\n" << kLabelsHeader << "\n";
  for (const auto& r : records) {
    require_tsv_safe(r.url, "labels url");
    require_tsv_safe(r.label, "labels label");
    require_tsv_safe(r.lang, "labels lang");
    out << r.url << '\t' << r.uid << '\t' << r.label << '\t' << r.lang << "\n";
  }
  if (!out) raise(ErrorKind::Io, "labels: write failure");
}

bool is_homepage(const std::string& url) {
  const Url u = parse_url_or_throw(url);
  const bool path_empty = u.path.empty() || u.path == "/";
  return path_empty && !u.query && !u.fragment;
}

void LabelMapping::add(const std::string& lang, const std::string& source_path,
                       const std::string& english_path) {
  entries_[lang + "\t" + source_path] = english_path;
}

std::optional<std::string> LabelMapping::lookup(
    const std::string& lang, const std::string& source_path) const {
  auto it = entries_.find(lang + "\t" + source_path);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> resolve_english_label(const std::string& label,
                                                 const std::string& lang,
                                                 const LabelMapping& mapping) {
  if (lang == "en") return label;
  return mapping.lookup(lang, label);
}

std::optional<ClassVector> class_vector_from_labels(
    const std::vector<std::string>& english_paths) {
  ClassVector v;
  for (const auto& path : english_paths) {
    auto segments = split(path, '/');
    if (segments.empty() || segments[0] != "Top") {
      raise(ErrorKind::Validation, "label path must start with Top/: " + path);
    }
    if (segments.size() < 2 || segments[1].empty()) {
      raise(ErrorKind::Validation, "label path has no category segment: " + path);
    }
    if (auto idx = class_index_from_segment(segments[1])) {
      v.flags[*idx] = true;
    }
    // Regional and unrecognized categories fall through silently.
  }
  if (!v.any()) return std::nullopt;
  return v;
}

LabelMapping parse_label_mapping(std::istream& in) {
  if (!in) raise(ErrorKind::Io, "mapping: unreadable stream");
  LabelMapping mapping;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (first) check_schema_line(line, kMappingSchema, "mapping");
      first = false;
      continue;
    }
    first = false;
    if (line == kMappingHeader) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() ||
        fields[2].empty()) {
      raise(ErrorKind::Validation, "mapping: malformed line \"" + line + "\"");
    }
    mapping.add(fields[0], fields[1], fields[2]);
  }
  if (in.bad()) raise(ErrorKind::Io, "mapping: read failure");
  return mapping;
}

void write_label_mapping(std::ostream& out,
                         const std::vector<std::array<std::string, 3>>& rows) {
  out << kMappingSchema << "\n" << kMappingHeader << "\n";
  for (const auto& row : rows) {
    for (const auto& f : row) require_tsv_safe(f, "mapping field");
    out << row[0] << '\t' << row[1] << '\t' << row[2] << "\n";
  }
  if (!out) raise(ErrorKind::Io, "mapping: write failure");
}

std::vector<ClassRow> parse_classes_tsv(std::istream& in) {
  if (!in) raise(ErrorKind::Io, "classes: unreadable stream");
  std::vector<ClassRow> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (first) check_schema_line(line, kClassesSchema, "classes");
      first = false;
      continue;
    }
    first = false;
    if (starts_with(line, "uid\t")) continue;  // header
    auto fields = split(line, '\t');
    if (fields.size() != 1 + kNumClasses) {
      raise(ErrorKind::Validation, "classes: expected " +
                                       std::to_string(1 + kNumClasses) +
                                       " columns, line \"" + line + "\"");
    }
    ClassRow row;
    if (!parse_int64(fields[0], row.uid)) {
      raise(ErrorKind::Validation, "classes: bad uid \"" + fields[0] + "\"");
    }
    for (size_t k = 0; k < kNumClasses; ++k) {
      if (fields[1 + k] == "1") {
        row.classes.flags[k] = true;
      } else if (fields[1 + k] != "0") {
        raise(ErrorKind::Validation,
              "classes: flag must be 0 or 1, got \"" + fields[1 + k] + "\"");
      }
    }
    rows.push_back(row);
  }
  if (in.bad()) raise(ErrorKind::Io, "classes: read failure");
  return rows;
}

void write_classes_tsv(std::ostream& out, const std::vector<ClassRow>& rows) {
  out << kClassesSchema << "\n";
  out << "uid";
  for (auto name : kClassNames) out << '\t' << name;
  out << "\n";
  for (const auto& row : rows) {
    out << row.uid;
    for (size_t k = 0; k < kNumClasses; ++k)
      out << '\t' << (row.classes.flags[k] ? '1' : '0');
    out << "\n";
  }
  if (!out) raise(ErrorKind::Io, "classes: write failure");
}

std::vector<ContentRecord> parse_content_jsonl(std::istream& in) {
  if (!in) raise(ErrorKind::Io, "content: unreadable stream");
  std::vector<ContentRecord> records;
  std::string line;
  bool first = true;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (first) check_schema_line(line, kContentSchema, "content");
      first = false;
      continue;
    }
    first = false;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("uid") ||
        !j.contains("html") || !j["uid"].is_number_integer() ||
        !j["html"].is_string()) {
      raise(ErrorKind::Validation,
            "content: malformed record at line " + std::to_string(lineno));
    }
    records.push_back({j["uid"].get<int64_t>(), j["html"].get<std::string>()});
  }
  if (in.bad()) raise(ErrorKind::Io, "content: read failure");
  return records;
}

void write_content_jsonl(std::ostream& out,
                         const std::vector<ContentRecord>& records) {
  out << kContentSchema << "\n";
  for (const auto& rec : records) {
    nlohmann::ordered_json j;
    j["uid"] = rec.uid;
    j["html"] = rec.html;
    out << j.dump() << "\n";
  }
  if (!out) raise(ErrorKind::Io, "content: write failure");
}

}  // namespace h2v
