#include "h2v/extract.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "h2v/error.hpp"
#include "h2v/html.hpp"
#include "h2v/url.hpp"
#include "h2v/util.hpp"

namespace h2v {

namespace {

const char* kDefaultTlds[kNumTlds] = {
    ".com", ".org", ".net", ".info", ".xyz",  ".club", ".biz",
    ".top", ".edu", ".online", ".pro", ".site", ".vip", ".icu",
    ".buzz", ".app", ".asia", ".gov", ".space"};

// Default metatag list, ordered by rough frequency on public crawls.
// Non-authoritative; swap via metatags.v1.txt when reproducing against
// a specific ranking.
const char* kDefaultMetatags[kNumMetatags] = {
    "viewport",
    "description",
    "keywords",
    "generator",
    "robots",
    "author",
    "theme-color",
    "twitter:card",
    "twitter:title",
    "twitter:description",
    "twitter:image",
    "twitter:site",
    "google-site-verification",
    "msapplication-tilecolor",
    "msapplication-tileimage",
    "apple-mobile-web-app-capable",
    "apple-mobile-web-app-title",
    "apple-mobile-web-app-status-bar-style",
    "application-name",
    "mobile-web-app-capable",
    "format-detection",
    "copyright",
    "language",
    "rating",
    "revisit-after",
    "distribution",
    "referrer",
    "handheldfriendly",
    "title",
    "csrf-token",
};

std::vector<std::string> load_list(std::istream& in, size_t expected,
                                   const char* what) {
  std::vector<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    entries.push_back(trim(line));
  }
  if (entries.size() != expected) {
    raise(ErrorKind::Validation,
          std::string(what) + ": expected " + std::to_string(expected) +
              " entries, got " + std::to_string(entries.size()));
  }
  return entries;
}

bool has_overlay_marker(const html::Node& node) {
  for (const char* key : {"class", "id"}) {
    const html::Attr* a = node.attr(key);
    if (a && (contains_icase(a->value, "popup") ||
              contains_icase(a->value, "modal") ||
              contains_icase(a->value, "cookie")))
      return true;
  }
  return false;
}

void remove_overlay_divs(html::Node& node) {
  auto& children = node.children;
  children.erase(
      std::remove_if(children.begin(), children.end(),
                     [](const std::unique_ptr<html::Node>& c) {
                       return c->type == html::NodeType::Element &&
                              c->tag == "div" && has_overlay_marker(*c);
                     }),
      children.end());
  for (auto& c : children) remove_overlay_divs(*c);
}

bool is_cjk_terminator(char32_t cp) {
  return cp == 0x3002 || cp == 0xFF01 || cp == 0xFF1F;  // 。 ！ ？
}

bool is_unicode_space(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' ||
         cp == U'\f' || cp == U'\v' || cp == 0x00A0;
}

// Splits one text run into sentences. An ASCII terminator (. ! ?) ends a
// sentence when followed by whitespace or the end of the run, which keeps
// "3.14" and "e.g" intact; CJK fullwidth terminators end unconditionally.
void split_run_into_sentences(const std::string& run,
                              std::vector<std::string>& out) {
  std::vector<std::string> parts;
  std::string current;
  size_t i = 0;
  while (i < run.size()) {
    size_t start = i;
    char32_t cp = utf8_next(run, i);
    current.append(run.substr(start, i - start));
    bool boundary = false;
    if (cp == U'.' || cp == U'!' || cp == U'?') {
      size_t peek = i;
      char32_t next = peek < run.size() ? utf8_next(run, peek) : U' ';
      boundary = peek >= run.size() || is_unicode_space(next) ||
                 i >= run.size();
    } else if (is_cjk_terminator(cp)) {
      boundary = true;
    }
    if (boundary) {
      parts.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) parts.push_back(std::move(current));
  for (auto& p : parts) {
    std::string s = collapse_whitespace(p);
    if (!s.empty()) out.push_back(std::move(s));
  }
}

std::vector<std::string> sentences_from_tree(const html::Node& root) {
  std::vector<std::string> sentences;
  for (const std::string& run : html::text_runs(root)) {
    split_run_into_sentences(run, sentences);
    if (sentences.size() >= kMaxSentences) break;
  }
  if (sentences.size() > kMaxSentences) sentences.resize(kMaxSentences);
  return sentences;
}

std::optional<std::string> clean_optional(const std::string& s) {
  std::string c = collapse_whitespace(s);
  if (c.empty()) return std::nullopt;
  return c;
}

PageMetadata metadata_from_tree(const html::Node& root) {
  PageMetadata meta;
  html::for_each_element(root, [&](const html::Node& el) {
    if (el.tag == "title" && !meta.title) {
      std::string text;
      for (const auto& c : el.children)
        if (c->type == html::NodeType::RawText ||
            c->type == html::NodeType::Text)
          text += c->text;
      meta.title = clean_optional(html::decode_entities(text));
    } else if (el.tag == "meta") {
      const html::Attr* name = el.attr("name");
      const html::Attr* content = el.attr("content");
      if (!name || !content) return;
      std::string key = ascii_lower(name->value);
      if (key == "description" && !meta.description)
        meta.description = clean_optional(html::decode_entities(content->value));
      else if (key == "keywords" && !meta.keywords)
        meta.keywords = clean_optional(html::decode_entities(content->value));
    }
  });
  return meta;
}

// ASCII alphanumerics are word characters, as is any non-ASCII code
// point; everything else separates. ASCII letters are lowercased.
std::vector<std::string> split_path_words(const std::string& path) {
  std::vector<std::string> words;
  std::string current;
  size_t i = 0;
  while (i < path.size()) {
    size_t start = i;
    char32_t cp = utf8_next(path, i);
    bool word_char = (cp < 0x80 && (std::isalnum(static_cast<int>(cp)) != 0)) ||
                     cp >= 0x80;
    if (word_char) {
      if (cp < 0x80) {
        current.push_back(static_cast<char>(
            std::tolower(static_cast<int>(cp))));
      } else {
        current.append(path.substr(start, i - start));
      }
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

std::vector<std::string> link_tokens_from_tree(const html::Node& root,
                                               const std::string& base_url) {
  auto base = parse_url(base_url);
  std::map<std::string, size_t> counts;
  html::for_each_element(root, [&](const html::Node& el) {
    if (el.tag != "a") return;
    const html::Attr* href = el.attr("href");
    if (!href) return;
    std::string target = trim(html::decode_entities(href->value));
    if (target.empty()) return;
    std::optional<Url> resolved;
    if (base) {
      resolved = resolve_url(*base, target);
    } else {
      resolved = parse_url(target);
    }
    if (!resolved) return;  // mailto:, javascript:, fragments of nothing
    if (resolved->scheme != "http" && resolved->scheme != "https") return;
    for (auto& w : split_path_words(percent_decode(resolved->path)))
      counts[w] += 1;
  });

  std::vector<std::pair<std::string, size_t>> ranked(counts.begin(),
                                                     counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > kMaxLinkTokens) ranked.resize(kMaxLinkTokens);
  std::vector<std::string> tokens;
  tokens.reserve(ranked.size());
  for (auto& [word, n] : ranked) tokens.push_back(word);
  return tokens;
}

std::array<bool, kNumMetatags> metatag_flags_from_tree(
    const html::Node& root, const MetatagTable& table) {
  std::array<bool, kNumMetatags> flags{};
  html::for_each_element(root, [&](const html::Node& el) {
    if (el.tag != "meta") return;
    const html::Attr* name = el.attr("name");
    if (!name) return;
    if (auto idx = table.index_of(ascii_lower(name->value)))
      flags[*idx] = true;
  });
  return flags;
}

}  // namespace

TldTable::TldTable()
    : entries_(std::begin(kDefaultTlds), std::end(kDefaultTlds)) {}

TldTable::TldTable(std::vector<std::string> entries)
    : entries_(std::move(entries)) {
  if (entries_.size() != kNumTlds) {
    raise(ErrorKind::Validation, "TLD table must have exactly " +
                                     std::to_string(kNumTlds) + " entries");
  }
  for (const auto& e : entries_) {
    if (e.empty() || e[0] != '.')
      raise(ErrorKind::Validation, "TLD entry must start with '.': " + e);
  }
}

TldTable TldTable::load(std::istream& in) {
  return TldTable(load_list(in, kNumTlds, "tlds"));
}

std::optional<size_t> TldTable::index_of(const std::string& dotted_tld) const {
  for (size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i] == dotted_tld) return i;
  return std::nullopt;
}

MetatagTable::MetatagTable()
    : entries_(std::begin(kDefaultMetatags), std::end(kDefaultMetatags)) {}

MetatagTable::MetatagTable(std::vector<std::string> entries)
    : entries_(std::move(entries)) {
  if (entries_.size() != kNumMetatags) {
    raise(ErrorKind::Validation, "metatag table must have exactly " +
                                     std::to_string(kNumMetatags) + " entries");
  }
  for (auto& e : entries_) e = ascii_lower(e);
}

MetatagTable MetatagTable::load(std::istream& in) {
  return MetatagTable(load_list(in, kNumMetatags, "metatags"));
}

std::optional<size_t> MetatagTable::index_of(const std::string& name) const {
  for (size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i] == name) return i;
  return std::nullopt;
}

std::string strip_overlays(const std::string& html_text) {
  auto doc = html::parse(html_text);
  remove_overlay_divs(*doc);
  return html::serialize(*doc);
}

std::vector<std::string> extract_sentences(const std::string& html_text) {
  auto doc = html::parse(html_text);
  return sentences_from_tree(*doc);
}

PageMetadata extract_metadata(const std::string& html_text) {
  auto doc = html::parse(html_text);
  return metadata_from_tree(*doc);
}

std::vector<std::string> extract_link_tokens(const std::string& html_text,
                                             const std::string& base_url) {
  auto doc = html::parse(html_text);
  return link_tokens_from_tree(*doc, base_url);
}

std::array<bool, kNumMetatags> metatag_flags(const std::string& html_text,
                                             const MetatagTable& table) {
  auto doc = html::parse(html_text);
  return metatag_flags_from_tree(*doc, table);
}

std::optional<size_t> tld_index(const std::string& url, const TldTable& table) {
  const Url u = parse_url_or_throw(url);
  if (u.host.empty()) raise(ErrorKind::Validation, "URL has no host: " + url);
  if (u.host_is_ip()) return std::nullopt;
  size_t dot = u.host.rfind('.');
  if (dot == std::string::npos) return std::nullopt;
  return table.index_of(u.host.substr(dot));
}

std::vector<std::string> tokenize_domain(const std::string& url) {
  const Url u = parse_url_or_throw(url);
  if (u.host.empty()) raise(ErrorKind::Validation, "URL has no host: " + url);
  if (u.host_is_ip()) return {u.host};

  std::string host = u.host;  // already lowercase
  if (starts_with(host, "www.")) host.erase(0, 4);
  size_t dot = host.rfind('.');
  if (dot != std::string::npos) host.erase(dot);

  std::vector<std::string> tokens;
  std::string current;
  for (char c : host) {
    if (c == '.' || c == '-' || c == '_') {
      if (!current.empty()) {
        tokens.push_back(std::move(current));
        current.clear();
      }
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

ExtractedPage extract_page(const std::string& html_text, const std::string& url,
                           const TldTable& tlds, const MetatagTable& metatags) {
  // One parse of the stripped document feeds every extractor.
  auto doc = html::parse(html_text);
  remove_overlay_divs(*doc);

  ExtractedPage page;
  page.sentences = sentences_from_tree(*doc);
  PageMetadata meta = metadata_from_tree(*doc);
  page.title = std::move(meta.title);
  page.description = std::move(meta.description);
  page.keywords = std::move(meta.keywords);
  page.link_tokens = link_tokens_from_tree(*doc, url);
  page.metatag_flags = metatag_flags_from_tree(*doc, metatags);
  page.tld_index = tld_index(url, tlds);
  page.domain_tokens = tokenize_domain(url);
  return page;
}

std::string extracted_page_to_json(const ExtractedPage& page) {
  nlohmann::ordered_json j;
  j["sentences"] = page.sentences;
  j["title"] = page.title ? nlohmann::json(*page.title) : nlohmann::json();
  j["description"] =
      page.description ? nlohmann::json(*page.description) : nlohmann::json();
  j["keywords"] =
      page.keywords ? nlohmann::json(*page.keywords) : nlohmann::json();
  j["link_tokens"] = page.link_tokens;
  j["metatag_flags"] = page.metatag_flags;
  if (page.tld_index)
    j["tld_index"] = *page.tld_index;
  else
    j["tld_index"] = nullptr;
  j["domain_tokens"] = page.domain_tokens;
  return j.dump();
}

ExtractedPage extracted_page_from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    raise(ErrorKind::Validation, "extracted page: malformed JSON");
  ExtractedPage page;
  try {
    page.sentences = j.at("sentences").get<std::vector<std::string>>();
    if (!j.at("title").is_null()) page.title = j["title"].get<std::string>();
    if (!j.at("description").is_null())
      page.description = j["description"].get<std::string>();
    if (!j.at("keywords").is_null())
      page.keywords = j["keywords"].get<std::string>();
    page.link_tokens = j.at("link_tokens").get<std::vector<std::string>>();
    auto flags = j.at("metatag_flags").get<std::vector<bool>>();
    if (flags.size() != kNumMetatags)
      raise(ErrorKind::Validation, "extracted page: metatag_flags length");
    std::copy(flags.begin(), flags.end(), page.metatag_flags.begin());
    if (!j.at("tld_index").is_null())
      page.tld_index = j["tld_index"].get<size_t>();
    page.domain_tokens = j.at("domain_tokens").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::Validation,
          std::string("extracted page: missing or mistyped field: ") + e.what());
  }
  return page;
}

}  // namespace h2v
