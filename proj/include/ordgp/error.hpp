#pragma once

#include <stdexcept>
#include <string>

namespace ordgp {

enum class ErrorCode {
  InvalidArgument,
  NonDecreasingInput,
  Overflow,
  NotPositiveDefinite,
  DegenerateVariance,
  SingularUpdate,
  OptimizationFailed,
  LengthMismatch,
  ParseError,
  SchemaError,
  EmptyDataset,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ordgp
