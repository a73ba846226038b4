#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace h2v {

// ---- string helpers ----

std::string ascii_lower(std::string_view s);
std::string trim(std::string_view s);
// Collapses runs of Unicode whitespace (ASCII space/tab/newlines plus
// U+00A0) to a single space and trims the ends.
std::string collapse_whitespace(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
bool starts_with(std::string_view s, std::string_view prefix);
bool contains_icase(std::string_view haystack, std::string_view needle);

// ---- UTF-8 ----

// Decodes the code point starting at byte offset `i`, advancing `i`.
// Invalid sequences yield U+FFFD and advance by one byte.
char32_t utf8_next(std::string_view s, size_t& i);
void utf8_append(std::string& out, char32_t cp);
// Replaces invalid UTF-8 sequences with U+FFFD; valid input is unchanged.
std::string utf8_sanitize(std::string_view s);

// ---- hashing / deterministic RNG ----

uint64_t fnv1a64(std::string_view bytes);
uint64_t fnv1a64(const void* data, size_t n, uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex_u64(uint64_t v);

// splitmix64: tiny, portable, bit-stable generator used wherever the
// library needs reproducible pseudo-randomness independent of the
// standard library's unspecified distributions.
struct SplitMix64 {
  uint64_t state;
  explicit SplitMix64(uint64_t seed) : state(seed) {}
  uint64_t next();
  // Uniform in [0,1) from the top 53 bits; exact dyadic rational.
  double next_double();
  // Uniform in [0, n).
  uint64_t next_below(uint64_t n);
  // Standard normal via Box-Muller.
  double next_gaussian();

 private:
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Fisher-Yates shuffle driven by SplitMix64 (std::shuffle is
// implementation-defined per standard library).
template <typename T>
void deterministic_shuffle(std::vector<T>& v, SplitMix64& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.next_below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace h2v
