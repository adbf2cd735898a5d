#include "byzcode/common.hpp"

namespace byzcode {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_threshold: return "invalid-threshold";
    case ErrorCode::invalid_m: return "invalid-m";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::out_of_range: return "out-of-range";
    case ErrorCode::budget_exceeded: return "budget-exceeded";
    case ErrorCode::rank_deficient: return "rank-deficient";
    case ErrorCode::invalid_u: return "invalid-U";
    case ErrorCode::config_parse: return "config-parse-error";
    case ErrorCode::io: return "io-error";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace byzcode
