#pragma once

#include <stdexcept>
#include <string>

namespace modematch {

// Numeric values match the CLI exit codes and the C API status codes.
enum class ErrorKind {
  InvalidArgument = 1,
  Data = 2,
  Numerical = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void throw_invalid(const std::string& message);
[[noreturn]] void throw_data(const std::string& message);
[[noreturn]] void throw_numerical(const std::string& message);

}  // namespace modematch
