#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "h2v/classes.hpp"

namespace h2v {

// One line of labels.tsv: a homepage URL with its original Curlie
// category path and the language that path is written in.
struct LabelRecord {
  std::string url;
  int64_t uid = 0;
  std::string label;  // full path, e.g. "Top/Arts/Music"
  std::string lang;   // language code of the label path
};

struct ParsedLabels {
  std::vector<LabelRecord> records;
  size_t skipped = 0;  // malformed lines
};

// Interlanguage label table: (lang, full path) -> English full path.
// Lookups with lang == "en" are the identity and need no entry.
class LabelMapping {
 public:
  void add(const std::string& lang, const std::string& source_path,
           const std::string& english_path);
  std::optional<std::string> lookup(const std::string& lang,
                                    const std::string& source_path) const;
  size_t size() const { return entries_.size(); }

 private:
  std::unordered_map<std::string, std::string> entries_;  // "lang\tpath" keys
};

struct ProcessedRecord {
  int64_t uid = 0;
  std::string html;
  std::optional<std::vector<float>> visual;  // exactly 512 when present
  ClassVector classes;
  std::optional<std::string> lang;
};

struct ContentRecord {
  int64_t uid = 0;
  std::string html;
};

struct ClassRow {
  int64_t uid = 0;
  ClassVector classes;
};

// ---- operations ----

// Reads labels.tsv. Malformed lines are counted, not fatal; duplicate
// uids across valid records raise ErrorKind::Validation listing them.
ParsedLabels parse_label_records(std::istream& in);
void write_label_records(std::ostream& out,
                         const std::vector<LabelRecord>& records);

// True iff the URL path is empty or "/" and there is no query or
// fragment. Unparsable input raises ErrorKind::Validation.
bool is_homepage(const std::string& url);

// English path for (label, lang), or nullopt when the mapping has no
// entry. lang == "en" returns the label unchanged.
std::optional<std::string> resolve_english_label(const std::string& label,
                                                 const std::string& lang,
                                                 const LabelMapping& mapping);

// Collapses English "Top/<Category>/..." paths to the 14-class vector.
// Regional and unknown second segments are dropped; nullopt when no
// flag survives. A path without a second segment is a validation error.
std::optional<ClassVector> class_vector_from_labels(
    const std::vector<std::string>& english_paths);

// mapping.tsv
LabelMapping parse_label_mapping(std::istream& in);
void write_label_mapping(std::ostream& out,
                         const std::vector<std::array<std::string, 3>>& rows);

// classes.tsv
std::vector<ClassRow> parse_classes_tsv(std::istream& in);
void write_classes_tsv(std::ostream& out, const std::vector<ClassRow>& rows);

// content.jsonl
std::vector<ContentRecord> parse_content_jsonl(std::istream& in);
void write_content_jsonl(std::ostream& out,
                         const std::vector<ContentRecord>& records);

}  // namespace h2v
