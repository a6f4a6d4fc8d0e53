#pragma once

#include <stdexcept>
#include <string>

namespace ibf {

enum class ErrorKind {
  invalid_argument,
  numeric_failure,
  unsupported_for_family,
  resource_limit,
  assembly_inconsistency,
  convergence_failure,
  invalid_input,
  usage,
};

const char* to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so that
/// callers (notably the command-line front end) can map it to an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorKind::invalid_argument, what);
}

}  // namespace ibf
