#include "h2v/url.hpp"

#include <cctype>

#include "h2v/error.hpp"
#include "h2v/util.hpp"

namespace h2v {

namespace {

bool is_scheme_char(char c, bool first) {
  if (std::isalpha(static_cast<unsigned char>(c))) return true;
  if (first) return false;
  return std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' ||
         c == '.';
}

bool looks_like_ipv4(std::string_view host) {
  int dots = 0;
  int digits_in_part = 0;
  for (char c : host) {
    if (c == '.') {
      if (digits_in_part == 0) return false;
      ++dots;
      digits_in_part = 0;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      if (++digits_in_part > 3) return false;
    } else {
      return false;
    }
  }
  return dots == 3 && digits_in_part > 0;
}

}  // namespace

uint16_t Url::effective_port() const {
  if (port) return *port;
  if (scheme == "https") return 443;
  if (scheme == "http") return 80;
  return 0;
}

bool Url::host_is_ip() const { return ipv6_host || looks_like_ipv4(host); }

std::string Url::origin() const {
  std::string out = scheme + "://";
  if (ipv6_host)
    out += "[" + host + "]";
  else
    out += host;
  if (port) out += ":" + std::to_string(*port);
  return out;
}

std::string Url::request_target() const {
  std::string out = path.empty() ? "/" : path;
  if (query) out += "?" + *query;
  return out;
}

std::string Url::to_string() const {
  std::string out = origin();
  if (!userinfo.empty()) {
    out = scheme + "://" + userinfo + "@";
    if (ipv6_host)
      out += "[" + host + "]";
    else
      out += host;
    if (port) out += ":" + std::to_string(*port);
  }
  out += path;
  if (query) out += "?" + *query;
  if (fragment) out += "#" + *fragment;
  return out;
}

std::optional<Url> parse_url(std::string_view input) {
  std::string_view s = input;
  // scheme
  size_t colon = 0;
  while (colon < s.size() && is_scheme_char(s[colon], colon == 0)) ++colon;
  if (colon == 0 || colon >= s.size() || s[colon] != ':') return std::nullopt;
  Url url;
  url.scheme = ascii_lower(s.substr(0, colon));
  s.remove_prefix(colon + 1);
  if (!starts_with(s, "//")) return std::nullopt;  // authority required
  s.remove_prefix(2);

  // authority ends at '/', '?' or '#'
  size_t auth_end = s.find_first_of("/?#");
  std::string_view authority =
      auth_end == std::string_view::npos ? s : s.substr(0, auth_end);
  std::string_view rest =
      auth_end == std::string_view::npos ? std::string_view{} : s.substr(auth_end);

  size_t at = authority.rfind('@');
  if (at != std::string_view::npos) {
    url.userinfo = std::string(authority.substr(0, at));
    authority.remove_prefix(at + 1);
  }
  if (authority.empty()) return std::nullopt;

  std::string_view host_part = authority;
  std::string_view port_part;
  if (authority.front() == '[') {
    size_t close = authority.find(']');
    if (close == std::string_view::npos) return std::nullopt;
    host_part = authority.substr(1, close - 1);
    url.ipv6_host = true;
    std::string_view after = authority.substr(close + 1);
    if (!after.empty()) {
      if (after.front() != ':') return std::nullopt;
      port_part = after.substr(1);
    }
  } else {
    size_t port_colon = authority.rfind(':');
    if (port_colon != std::string_view::npos) {
      host_part = authority.substr(0, port_colon);
      port_part = authority.substr(port_colon + 1);
    }
  }
  if (host_part.empty()) return std::nullopt;
  url.host = ascii_lower(host_part);
  if (!port_part.empty()) {
    uint32_t p = 0;
    for (char c : port_part) {
      if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
      p = p * 10 + static_cast<uint32_t>(c - '0');
      if (p > 65535) return std::nullopt;
    }
    url.port = static_cast<uint16_t>(p);
  }

  // path / query / fragment
  size_t qpos = rest.find('?');
  size_t fpos = rest.find('#');
  if (fpos != std::string_view::npos && qpos != std::string_view::npos &&
      fpos < qpos) {
    qpos = std::string_view::npos;  // '?' inside the fragment
  }
  size_t path_end = std::min(qpos, fpos);
  url.path = std::string(rest.substr(0, path_end));
  if (qpos != std::string_view::npos) {
    size_t qend = fpos == std::string_view::npos ? rest.size() : fpos;
    url.query = std::string(rest.substr(qpos + 1, qend - qpos - 1));
  }
  if (fpos != std::string_view::npos) {
    url.fragment = std::string(rest.substr(fpos + 1));
  }
  return url;
}

Url parse_url_or_throw(std::string_view input) {
  auto url = parse_url(input);
  if (!url) raise(ErrorKind::Validation, "unparsable URL: " + std::string(input));
  return *url;
}

std::string remove_dot_segments(std::string_view path) {
  std::string input(path);
  std::string output;
  while (!input.empty()) {
    if (starts_with(input, "../")) {
      input.erase(0, 3);
    } else if (starts_with(input, "./")) {
      input.erase(0, 2);
    } else if (starts_with(input, "/./")) {
      input.erase(0, 2);
    } else if (input == "/.") {
      input = "/";
    } else if (starts_with(input, "/../")) {
      input.erase(0, 3);
      size_t slash = output.rfind('/');
      output.erase(slash == std::string::npos ? 0 : slash);
    } else if (input == "/..") {
      input = "/";
      size_t slash = output.rfind('/');
      output.erase(slash == std::string::npos ? 0 : slash);
    } else if (input == "." || input == "..") {
      input.clear();
    } else {
      size_t start = input.front() == '/' ? 1 : 0;
      size_t slash = input.find('/', start);
      size_t seg_end = slash == std::string::npos ? input.size() : slash;
      output += input.substr(0, seg_end);
      input.erase(0, seg_end);
    }
  }
  return output;
}

std::optional<Url> resolve_url(const Url& base, std::string_view reference) {
  if (reference.empty()) {
    Url out = base;
    out.fragment.reset();
    return out;
  }
  // Absolute reference with a scheme of its own?
  size_t colon = 0;
  while (colon < reference.size() && is_scheme_char(reference[colon], colon == 0))
    ++colon;
  if (colon > 0 && colon < reference.size() && reference[colon] == ':') {
    auto abs = parse_url(reference);
    if (abs) {
      abs->path = remove_dot_segments(abs->path);
      return abs;
    }
    return std::nullopt;  // mailto:, javascript:, data:, tel: ...
  }

  if (starts_with(reference, "//")) {
    auto abs = parse_url(base.scheme + ":" + std::string(reference));
    if (abs) abs->path = remove_dot_segments(abs->path);
    return abs;
  }

  Url out = base;
  out.fragment.reset();
  out.query.reset();

  size_t fpos = reference.find('#');
  if (fpos != std::string_view::npos) {
    out.fragment = std::string(reference.substr(fpos + 1));
    reference = reference.substr(0, fpos);
  }
  size_t qpos = reference.find('?');
  if (qpos != std::string_view::npos) {
    out.query = std::string(reference.substr(qpos + 1));
    reference = reference.substr(0, qpos);
  }

  if (reference.empty()) {
    if (!out.query && base.query) out.query = base.query;
    return out;
  }
  if (reference.front() == '/') {
    out.path = remove_dot_segments(reference);
  } else {
    // merge with the base path
    std::string merged;
    if (base.path.empty()) {
      merged = "/" + std::string(reference);
    } else {
      size_t slash = base.path.rfind('/');
      merged = base.path.substr(0, slash + 1) + std::string(reference);
    }
    out.path = remove_dot_segments(merged);
  }
  return out;
}

std::string percent_decode(std::string_view s) {
  auto hex_val = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      int hi = hex_val(s[i + 1]);
      int lo = hex_val(s[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out.push_back(static_cast<char>(hi * 16 + lo));
        i += 2;
        continue;
      }
    }
    out.push_back(s[i]);
  }
  return out;
}

}  // namespace h2v
