#include "h2v/classes.hpp"

#include <algorithm>
#include <cctype>

namespace h2v {

namespace {

// Normalized key: lowercase with spaces/underscores removed, so that
// "Kids_and_Teens", "Kids and Teens" and "KidsAndTeens" coincide.
std::string normalize_segment(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == ' ' || c == '_') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

std::optional<size_t> class_index_from_segment(std::string_view segment) {
  const std::string key = normalize_segment(segment);
  // Curlie spells several categories in both singular and plural form.
  static const struct {
    const char* key;
    size_t index;
  } kTable[] = {
      {"arts", 0},        {"art", 0},
      {"business", 1},
      {"computers", 2},   {"computer", 2},
      {"games", 3},       {"game", 3},
      {"health", 4},
      {"home", 5},
      {"news", 6},
      {"recreation", 7},
      {"references", 8},  {"reference", 8},
      {"science", 9},
      {"shopping", 10},
      {"society", 11},
      {"sports", 12},     {"sport", 12},
      {"kidsandteens", 13},
  };
  for (const auto& row : kTable) {
    if (key == row.key) return row.index;
  }
  return std::nullopt;
}

bool ClassVector::any() const {
  return std::any_of(flags.begin(), flags.end(), [](bool f) { return f; });
}

size_t ClassVector::count() const {
  return static_cast<size_t>(std::count(flags.begin(), flags.end(), true));
}

ClassVector ClassVector::from_indices(std::initializer_list<size_t> idx) {
  ClassVector v;
  for (size_t i : idx) v.flags.at(i) = true;
  return v;
}

double multilabel_share(const std::vector<ClassVector>& classes) {
  if (classes.empty()) return 0.0;
  size_t multi = 0;
  for (const auto& c : classes)
    if (c.count() >= 2) ++multi;
  return static_cast<double>(multi) / static_cast<double>(classes.size());
}

}  // namespace h2v
