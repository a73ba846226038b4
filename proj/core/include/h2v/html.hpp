#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace h2v::html {

// Tolerant tag-soup parser. It never fails: unclosed tags are repaired
// by the stack rules, stray close tags are ignored, and everything
// else is kept as text. The tree is sufficient for boilerplate
// stripping, text extraction, and metadata queries; it is not a
// spec-complete HTML5 tree builder.

enum class NodeType { Document, Element, Text, Comment, Doctype, RawText };

struct Attr {
  std::string name;   // lowercase
  std::string value;  // raw source value, quotes stripped, entities kept
  bool has_value = true;
};

struct Node {
  NodeType type = NodeType::Document;
  std::string tag;   // lowercase; empty unless Element
  std::string text;  // raw source text for Text/Comment/Doctype/RawText
  std::vector<Attr> attrs;
  std::vector<std::unique_ptr<Node>> children;

  // First attribute with this (lowercase) name, or nullptr.
  const Attr* attr(std::string_view name) const;
};

std::unique_ptr<Node> parse(std::string_view source);

// Renders the tree back to HTML text. Output is normalized (lowercase
// tags, double-quoted attributes), not byte-identical to the input.
std::string serialize(const Node& root);

// Decodes numeric references and the common named entities; unknown
// references pass through verbatim.
std::string decode_entities(std::string_view s);

// Visible text runs in document order. Block-level boundaries separate
// runs; script/style/template/noscript/head subtrees and comments are
// skipped. Entities are decoded; whitespace is NOT yet collapsed.
std::vector<std::string> text_runs(const Node& root);

bool is_void_element(std::string_view tag);
bool is_block_element(std::string_view tag);
bool is_raw_text_element(std::string_view tag);

// Depth-first walk over the subtree, element nodes only.
template <typename Fn>
void for_each_element(const Node& node, Fn&& fn) {
  if (node.type == NodeType::Element) fn(node);
  for (const auto& child : node.children) for_each_element(*child, fn);
}

}  // namespace h2v::html
