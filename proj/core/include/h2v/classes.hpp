#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace h2v {

// Canonical 14-class order. Frozen: serialized formats carry a schema
// version and this order must never be re-arranged within a version.
inline constexpr size_t kNumClasses = 14;
inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "Arts",      "Business", "Computers",  "Games",   "Health",
    "Home",      "News",     "Recreation", "References", "Science",
    "Shopping",  "Society",  "Sports",     "KidsAndTeens",
};

// Maps a raw category-path segment ("Arts", "Art", "Kids_and_Teens",
// "Kids and Teens", ...) to the canonical class index. "Regional" and
// anything unknown map to nullopt.
std::optional<size_t> class_index_from_segment(std::string_view segment);

struct ClassVector {
  std::array<bool, kNumClasses> flags{};

  bool any() const;
  size_t count() const;
  bool operator==(const ClassVector&) const = default;

  static ClassVector from_indices(std::initializer_list<size_t> idx);
};

// Fraction of vectors with two or more active classes. On the released
// Curlie data this hovers around 0.021.
double multilabel_share(const std::vector<ClassVector>& classes);

// Per-class negative:positive ratio on a training set, computed before
// any balancing. Feeds both the loss reweighting and score calibration.
struct ClassPriors {
  std::vector<double> p;  // one entry per class, all > 0
};

}  // namespace h2v
