#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wdsel {

/// Failure categories. Each maps to a distinct CLI exit code.
enum class ErrorKind {
  config = 2,
  input = 3,
  structural = 4,
  decomposition = 5,
  degenerate = 6,
  saturation = 7,
  empty_selection = 8,
  analysis = 9,
  alignment = 10,
  usage = 11,
  numeric = 12,
  io = 13,
  corrupt = 14,
  version = 15,
  hash_mismatch = 16,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace wdsel
