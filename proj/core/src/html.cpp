#include "h2v/html.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

#include "h2v/util.hpp"

namespace h2v::html {

namespace {

const std::unordered_set<std::string_view> kVoidElements = {
    "area", "base",  "br",    "col",  "embed",  "hr",  "img",
    "input", "link", "meta",  "param", "source", "track", "wbr"};

const std::unordered_set<std::string_view> kRawTextElements = {
    "script", "style", "textarea", "title", "noscript", "xmp"};

const std::unordered_set<std::string_view> kBlockElements = {
    "address", "article", "aside",  "blockquote", "body",    "br",
    "caption", "dd",      "details", "dialog",    "div",     "dl",
    "dt",      "fieldset", "figcaption", "figure", "footer", "form",
    "h1",      "h2",      "h3",     "h4",         "h5",      "h6",
    "head",    "header",  "hgroup", "hr",         "html",    "li",
    "main",    "menu",    "nav",    "ol",         "option",  "p",
    "pre",     "section", "select", "summary",    "table",   "tbody",
    "td",      "tfoot",   "th",     "thead",      "tr",      "ul"};

// Subtrees that contribute no visible text.
const std::unordered_set<std::string_view> kInvisibleElements = {
    "script", "style", "template", "noscript", "head", "title", "textarea"};

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f';
}

// Start tag T implicitly closes an open S at the top of the stack.
bool closes_sibling(std::string_view open, std::string_view incoming) {
  if (open == "p") return kBlockElements.count(incoming) > 0;
  if (open == "li") return incoming == "li";
  if (open == "dd" || open == "dt")
    return incoming == "dd" || incoming == "dt";
  if (open == "option") return incoming == "option" || incoming == "optgroup";
  if (open == "tr") return incoming == "tr";
  if (open == "td" || open == "th")
    return incoming == "td" || incoming == "th" || incoming == "tr";
  if (open == "thead" || open == "tbody" || open == "tfoot")
    return incoming == "thead" || incoming == "tbody" || incoming == "tfoot";
  return false;
}

struct Parser {
  std::string_view src;
  size_t pos = 0;

  bool eof() const { return pos >= src.size(); }
  char peek(size_t ahead = 0) const {
    return pos + ahead < src.size() ? src[pos + ahead] : '\0';
  }

  std::unique_ptr<Node> run() {
    auto doc = std::make_unique<Node>();
    doc->type = NodeType::Document;
    std::vector<Node*> stack = {doc.get()};

    while (!eof()) {
      if (peek() == '<') {
        if (peek(1) == '!') {
          parse_markup_declaration(*stack.back());
        } else if (peek(1) == '?') {
          skip_until('>');
        } else if (peek(1) == '/') {
          parse_end_tag(stack);
        } else if (std::isalpha(static_cast<unsigned char>(peek(1)))) {
          parse_start_tag(stack);
        } else {
          append_text(*stack.back(), pos, pos + 1);
          ++pos;
        }
      } else {
        size_t start = pos;
        size_t lt = src.find('<', pos);
        pos = lt == std::string_view::npos ? src.size() : lt;
        append_text(*stack.back(), start, pos);
      }
    }
    return doc;
  }

  void append_text(Node& parent, size_t begin, size_t end) {
    if (begin >= end) return;
    if (!parent.children.empty() &&
        parent.children.back()->type == NodeType::Text) {
      parent.children.back()->text.append(src.substr(begin, end - begin));
      return;
    }
    auto n = std::make_unique<Node>();
    n->type = NodeType::Text;
    n->text = std::string(src.substr(begin, end - begin));
    parent.children.push_back(std::move(n));
  }

  void skip_until(char c) {
    size_t p = src.find(c, pos);
    pos = p == std::string_view::npos ? src.size() : p + 1;
  }

  void parse_markup_declaration(Node& parent) {
    if (src.substr(pos, 4) == "<!--") {
      size_t end = src.find("-->", pos + 4);
      auto n = std::make_unique<Node>();
      n->type = NodeType::Comment;
      if (end == std::string_view::npos) {
        n->text = std::string(src.substr(pos + 4));
        pos = src.size();
      } else {
        n->text = std::string(src.substr(pos + 4, end - pos - 4));
        pos = end + 3;
      }
      parent.children.push_back(std::move(n));
      return;
    }
    // <!DOCTYPE ...> or bogus declaration
    size_t end = src.find('>', pos);
    auto n = std::make_unique<Node>();
    n->type = NodeType::Doctype;
    if (end == std::string_view::npos) {
      n->text = std::string(src.substr(pos + 2));
      pos = src.size();
    } else {
      n->text = std::string(src.substr(pos + 2, end - pos - 2));
      pos = end + 1;
    }
    parent.children.push_back(std::move(n));
  }

  std::string read_tag_name() {
    size_t start = pos;
    while (!eof() && !is_space(peek()) && peek() != '>' && peek() != '/')
      ++pos;
    return ascii_lower(src.substr(start, pos - start));
  }

  void parse_attrs(Node& node, bool& self_closing) {
    self_closing = false;
    while (!eof()) {
      while (!eof() && is_space(peek())) ++pos;
      if (eof()) return;
      if (peek() == '>') {
        ++pos;
        return;
      }
      if (peek() == '/') {
        ++pos;
        if (peek() == '>') {
          ++pos;
          self_closing = true;
          return;
        }
        continue;
      }
      size_t name_start = pos;
      while (!eof() && !is_space(peek()) && peek() != '=' && peek() != '>' &&
             peek() != '/')
        ++pos;
      if (pos == name_start) {  // stray character
        ++pos;
        continue;
      }
      Attr attr;
      attr.name = ascii_lower(src.substr(name_start, pos - name_start));
      while (!eof() && is_space(peek())) ++pos;
      if (peek() == '=') {
        ++pos;
        while (!eof() && is_space(peek())) ++pos;
        if (peek() == '"' || peek() == '\'') {
          char quote = peek();
          ++pos;
          size_t vstart = pos;
          size_t vend = src.find(quote, pos);
          if (vend == std::string_view::npos) {
            attr.value = std::string(src.substr(vstart));
            pos = src.size();
          } else {
            attr.value = std::string(src.substr(vstart, vend - vstart));
            pos = vend + 1;
          }
        } else {
          size_t vstart = pos;
          while (!eof() && !is_space(peek()) && peek() != '>') ++pos;
          attr.value = std::string(src.substr(vstart, pos - vstart));
        }
      } else {
        attr.has_value = false;
      }
      node.attrs.push_back(std::move(attr));
    }
  }

  void parse_start_tag(std::vector<Node*>& stack) {
    ++pos;  // '<'
    auto node = std::make_unique<Node>();
    node->type = NodeType::Element;
    node->tag = read_tag_name();
    bool self_closing = false;
    parse_attrs(*node, self_closing);

    while (stack.size() > 1 && closes_sibling(stack.back()->tag, node->tag))
      stack.pop_back();

    Node* raw = node.get();
    stack.back()->children.push_back(std::move(node));

    if (is_void_element(raw->tag) || self_closing) return;

    if (is_raw_text_element(raw->tag)) {
      consume_raw_text(*raw);
      return;
    }
    stack.push_back(raw);
  }

  void consume_raw_text(Node& element) {
    // Content runs verbatim until the matching case-insensitive close tag
    // (or EOF, which closes the element implicitly).
    const std::string close = "</" + element.tag;
    size_t content_end = std::string_view::npos;
    size_t resume = src.size();
    for (size_t cand = pos; cand + close.size() <= src.size(); ++cand) {
      size_t j = 0;
      while (j < close.size() &&
             std::tolower(static_cast<unsigned char>(src[cand + j])) == close[j])
        ++j;
      if (j != close.size()) continue;
      char after = cand + j < src.size() ? src[cand + j] : '>';
      if (after == '>' || is_space(after) || after == '/') {
        content_end = cand;
        size_t gt = src.find('>', cand);
        resume = gt == std::string_view::npos ? src.size() : gt + 1;
        break;
      }
    }
    size_t end = content_end == std::string_view::npos ? src.size() : content_end;
    if (end > pos) {
      auto n = std::make_unique<Node>();
      n->type = NodeType::RawText;
      n->text = std::string(src.substr(pos, end - pos));
      element.children.push_back(std::move(n));
    }
    pos = content_end == std::string_view::npos ? src.size() : resume;
  }

  void parse_end_tag(std::vector<Node*>& stack) {
    pos += 2;  // '</'
    std::string tag = read_tag_name();
    skip_until('>');
    if (tag.empty()) return;
    // Find the matching open element; ignore a stray close.
    for (size_t i = stack.size(); i-- > 1;) {
      if (stack[i]->tag == tag) {
        stack.resize(i);
        return;
      }
    }
  }
};

void serialize_node(const Node& node, std::string& out) {
  switch (node.type) {
    case NodeType::Document:
      for (const auto& c : node.children) serialize_node(*c, out);
      break;
    case NodeType::Text:
    case NodeType::RawText:
      out += node.text;
      break;
    case NodeType::Comment:
      out += "<!--" + node.text + "-->";
      break;
    case NodeType::Doctype:
      out += "<!" + node.text + ">";
      break;
    case NodeType::Element: {
      out += "<" + node.tag;
      for (const auto& a : node.attrs) {
        out += " " + a.name;
        if (a.has_value) {
          out += "=\"";
          for (char c : a.value) {
            if (c == '"')
              out += "&quot;";
            else
              out += c;
          }
          out += "\"";
        }
      }
      out += ">";
      if (is_void_element(node.tag)) break;
      for (const auto& c : node.children) serialize_node(*c, out);
      out += "</" + node.tag + ">";
      break;
    }
  }
}

const std::unordered_map<std::string_view, char32_t>& named_entities() {
  static const std::unordered_map<std::string_view, char32_t> table = {
      {"amp", U'&'},    {"lt", U'<'},      {"gt", U'>'},
      {"quot", U'"'},   {"apos", U'\''},   {"nbsp", 0x00A0},
      {"copy", 0x00A9}, {"reg", 0x00AE},   {"trade", 0x2122},
      {"hellip", 0x2026}, {"mdash", 0x2014}, {"ndash", 0x2013},
      {"lsquo", 0x2018}, {"rsquo", 0x2019}, {"ldquo", 0x201C},
      {"rdquo", 0x201D}, {"laquo", 0x00AB}, {"raquo", 0x00BB},
      {"deg", 0x00B0},  {"middot", 0x00B7}, {"bull", 0x2022},
      {"sect", 0x00A7}, {"para", 0x00B6},  {"plusmn", 0x00B1},
      {"times", 0x00D7}, {"divide", 0x00F7}, {"frac12", 0x00BD},
      {"eacute", 0x00E9}, {"egrave", 0x00E8}, {"agrave", 0x00E0},
      {"ccedil", 0x00E7}, {"ouml", 0x00F6}, {"uuml", 0x00FC},
      {"auml", 0x00E4}, {"szlig", 0x00DF}, {"ntilde", 0x00F1},
      {"aacute", 0x00E1}, {"iacute", 0x00ED}, {"oacute", 0x00F3},
      {"uacute", 0x00FA}, {"euro", 0x20AC}, {"pound", 0x00A3},
      {"yen", 0x00A5},  {"cent", 0x00A2},  {"shy", 0x00AD},
  };
  return table;
}

}  // namespace

const Attr* Node::attr(std::string_view name) const {
  for (const auto& a : attrs)
    if (a.name == name) return &a;
  return nullptr;
}

std::unique_ptr<Node> parse(std::string_view source) {
  Parser p{source};
  return p.run();
}

std::string serialize(const Node& root) {
  std::string out;
  out.reserve(256);
  serialize_node(root, out);
  return out;
}

std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '&') {
      out.push_back(s[i]);
      ++i;
      continue;
    }
    size_t semi = s.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out.push_back('&');
      ++i;
      continue;
    }
    std::string_view body = s.substr(i + 1, semi - i - 1);
    char32_t cp = 0;
    bool ok = false;
    if (!body.empty() && body[0] == '#') {
      uint64_t v = 0;
      if (body.size() > 2 && (body[1] == 'x' || body[1] == 'X')) {
        ok = body.size() > 2;
        for (size_t k = 2; k < body.size() && ok; ++k) {
          char c = body[k];
          int d = c >= '0' && c <= '9'   ? c - '0'
                  : c >= 'a' && c <= 'f' ? c - 'a' + 10
                  : c >= 'A' && c <= 'F' ? c - 'A' + 10
                                         : -1;
          if (d < 0) ok = false;
          v = v * 16 + static_cast<uint64_t>(d < 0 ? 0 : d);
        }
      } else {
        ok = body.size() > 1;
        for (size_t k = 1; k < body.size() && ok; ++k) {
          if (body[k] < '0' || body[k] > '9') ok = false;
          v = v * 10 + static_cast<uint64_t>(body[k] - '0');
        }
      }
      if (ok && v > 0 && v <= 0x10FFFF) cp = static_cast<char32_t>(v);
      else ok = false;
    } else {
      auto it = named_entities().find(body);
      if (it != named_entities().end()) {
        cp = it->second;
        ok = true;
      }
    }
    if (ok) {
      utf8_append(out, cp);
      i = semi + 1;
    } else {
      out.push_back('&');
      ++i;
    }
  }
  return out;
}

namespace {

void collect_text(const Node& node, std::vector<std::string>& runs,
                  std::string& current) {
  auto flush = [&] {
    if (!current.empty()) {
      runs.push_back(std::move(current));
      current.clear();
    }
  };
  switch (node.type) {
    case NodeType::Text:
      current += decode_entities(node.text);
      break;
    case NodeType::RawText:
    case NodeType::Comment:
    case NodeType::Doctype:
      break;
    case NodeType::Document:
      for (const auto& c : node.children) collect_text(*c, runs, current);
      break;
    case NodeType::Element: {
      if (kInvisibleElements.count(node.tag)) break;
      const bool block = is_block_element(node.tag);
      if (block) flush();
      for (const auto& c : node.children) collect_text(*c, runs, current);
      if (block) flush();
      break;
    }
  }
}

}  // namespace

std::vector<std::string> text_runs(const Node& root) {
  std::vector<std::string> runs;
  std::string current;
  collect_text(root, runs, current);
  if (!current.empty()) runs.push_back(std::move(current));
  return runs;
}

bool is_void_element(std::string_view tag) {
  return kVoidElements.count(tag) > 0;
}
bool is_block_element(std::string_view tag) {
  return kBlockElements.count(tag) > 0;
}
bool is_raw_text_element(std::string_view tag) {
  return kRawTextElements.count(tag) > 0;
}

}  // namespace h2v::html
