#pragma once

#include <stdexcept>
#include <string>

namespace ionshuttle {

enum class ErrorKind {
  InvalidSpec,
  InvalidCircuit,
  InvalidInput,
  ContractViolation,
  MaskedAction,
  DependencyViolation,
  Capacity,
  Numeric,
  BudgetExhausted,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

// Single exception type for the library; the kind drives C API status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace ionshuttle
