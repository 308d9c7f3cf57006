#include "ordgp/error.hpp"

namespace ordgp {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonDecreasingInput: return "NonDecreasingInput";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::SingularUpdate: return "SingularUpdate";
    case ErrorCode::OptimizationFailed: return "OptimizationFailed";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
  }
  return "Unknown";
}

}  // namespace ordgp
