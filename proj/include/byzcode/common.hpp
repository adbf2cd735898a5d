#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace byzcode {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class ErrorCode {
  invalid_threshold,
  invalid_m,
  dimension_mismatch,
  out_of_range,
  budget_exceeded,
  rank_deficient,
  invalid_u,
  config_parse,
  io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Counts floating-point multiply/add operations. Passed by pointer; null
// means "don't count".
struct OpCounter {
  std::uint64_t flops = 0;
  void add(std::uint64_t n) { flops += n; }
};

inline void count_flops(OpCounter* c, std::uint64_t n) {
  if (c) c->add(n);
}

}  // namespace byzcode
