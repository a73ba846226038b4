#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace h2v {

inline constexpr size_t kMaxSentences = 100;
inline constexpr size_t kMaxLinkTokens = 50;
inline constexpr size_t kNumTlds = 19;
inline constexpr size_t kNumMetatags = 30;

// The 19 most frequent generic TLDs; ccTLDs carry geography, not topic,
// and are deliberately absent. Order is significant (one-hot index).
class TldTable {
 public:
  TldTable();  // built-in default list
  explicit TldTable(std::vector<std::string> entries);  // must be 19, ".xxx"
  static TldTable load(std::istream& in);               // tlds.v1.txt

  const std::string& at(size_t i) const { return entries_[i]; }
  std::optional<size_t> index_of(const std::string& dotted_tld) const;
  size_t size() const { return entries_.size(); }

 private:
  std::vector<std::string> entries_;
};

// The 30 metatag names whose presence is one-hot encoded. The default
// list ships as data; it is swappable because the canonical frequency
// ranking is not a published artifact.
class MetatagTable {
 public:
  MetatagTable();  // built-in default list
  explicit MetatagTable(std::vector<std::string> entries);  // must be 30
  static MetatagTable load(std::istream& in);               // metatags.v1.txt

  const std::string& at(size_t i) const { return entries_[i]; }
  std::optional<size_t> index_of(const std::string& name) const;
  size_t size() const { return entries_.size(); }

 private:
  std::vector<std::string> entries_;
};

// Structured parse of one homepage: everything downstream feature
// assembly needs, nothing else.
struct ExtractedPage {
  std::vector<std::string> sentences;  // <= 100, document order
  std::optional<std::string> title;
  std::optional<std::string> description;
  std::optional<std::string> keywords;
  std::vector<std::string> link_tokens;  // <= 50, by frequency then lex
  std::array<bool, kNumMetatags> metatag_flags{};
  std::optional<size_t> tld_index;  // 0..18, absent for unlisted TLDs
  std::vector<std::string> domain_tokens;

  bool operator==(const ExtractedPage&) const = default;
};

// ---- operations ----

// Removes every <div> whose class or id contains "popup", "modal" or
// "cookie" (case-insensitive), subtree included. Output is re-serialized
// from the repaired parse tree.
std::string strip_overlays(const std::string& html);

// Visible text split into sentences: terminators are . ! ? and their
// CJK fullwidth forms (terminator kept, ASCII ones only when followed by
// whitespace or end of run), plus block-level element boundaries.
// At most 100 sentences, document order, whitespace collapsed.
std::vector<std::string> extract_sentences(const std::string& html);

struct PageMetadata {
  std::optional<std::string> title;
  std::optional<std::string> description;
  std::optional<std::string> keywords;
};
PageMetadata extract_metadata(const std::string& html);

// Words from anchor URL paths (resolved against base_url), most
// frequent first, ties broken lexicographically, at most 50.
std::vector<std::string> extract_link_tokens(const std::string& html,
                                             const std::string& base_url);

std::array<bool, kNumMetatags> metatag_flags(const std::string& html,
                                             const MetatagTable& table);

// Index of the registrable suffix in the table; absent for anything
// else, ccTLDs included. Unparsable URL raises ErrorKind::Validation.
std::optional<size_t> tld_index(const std::string& url, const TldTable& table);

// Host minus "www." and the TLD, split at '.', '-', '_'. IP-literal
// hosts yield the literal address as a single token.
std::vector<std::string> tokenize_domain(const std::string& url);

ExtractedPage extract_page(const std::string& html, const std::string& url,
                           const TldTable& tlds, const MetatagTable& metatags);

// Stable-key-order JSON (the `extract` subcommand's output format).
std::string extracted_page_to_json(const ExtractedPage& page);
ExtractedPage extracted_page_from_json(const std::string& json_text);

}  // namespace h2v
