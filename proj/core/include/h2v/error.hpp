#pragma once

#include <stdexcept>
#include <string>

namespace h2v {

// Error taxonomy shared by the whole library. The CLI maps kinds onto
// process exit codes (network -> 2, compatibility -> 3, data -> 4).
enum class ErrorKind {
  Io,
  Validation,
  Data,
  Corruption,
  Compatibility,
  Network,
  Timeout,
  Http,
  Redirect,
  Shape,
  Layout,
  Backend,
  Numeric,
  DegenerateClass,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  Error(ErrorKind kind, const std::string& message, int http_status)
      : std::runtime_error(message), kind_(kind), http_status_(http_status) {}

  ErrorKind kind() const noexcept { return kind_; }
  // Meaningful only for ErrorKind::Http.
  int http_status() const noexcept { return http_status_; }

 private:
  ErrorKind kind_;
  int http_status_ = 0;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace h2v
