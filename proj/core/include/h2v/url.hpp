#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace h2v {

// Minimal absolute-URL representation, enough for http(s) homepages,
// redirect chains, and link resolution. Not a general URI library.
struct Url {
  std::string scheme;            // lowercase
  std::string userinfo;          // may be empty
  std::string host;              // lowercase; "[...]" stripped for IPv6
  std::optional<uint16_t> port;  // absent means scheme default
  std::string path;              // may be empty; includes leading '/'
  std::optional<std::string> query;     // without '?'
  std::optional<std::string> fragment;  // without '#'
  bool ipv6_host = false;

  uint16_t effective_port() const;
  bool host_is_ip() const;
  std::string to_string() const;
  // scheme://host[:port] part, used as an HTTP client base.
  std::string origin() const;
  // Path plus query, never empty ("/" minimum); what goes on the request line.
  std::string request_target() const;
};

// Parses an absolute URL; std::nullopt when the input has no scheme,
// no host, or malformed structure.
std::optional<Url> parse_url(std::string_view input);

// Same but throws Error(ErrorKind::Validation) with the input echoed.
Url parse_url_or_throw(std::string_view input);

// RFC 3986 section 5 reference resolution over a parsed absolute base.
// Handles relative paths, absolute paths, protocol-relative and
// fragment-only references. Returns nullopt for references with
// non-hierarchical schemes (mailto:, javascript:, data:).
std::optional<Url> resolve_url(const Url& base, std::string_view reference);

// Percent-decoding; invalid escapes are kept verbatim.
std::string percent_decode(std::string_view s);

// Dot-segment removal per RFC 3986 section 5.2.4.
std::string remove_dot_segments(std::string_view path);

}  // namespace h2v
