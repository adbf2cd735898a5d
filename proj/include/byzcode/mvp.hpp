#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "byzcode/common.hpp"
#include "byzcode/encoder.hpp"
#include "byzcode/locator.hpp"

namespace byzcode {

struct WorkerResponse {
  int worker = 0;
  std::optional<Vector> payload;  // empty for a straggler
};

struct DecodeOutcome {
  Vector product;
  std::vector<int> corrupt;
  std::vector<int> erased;
  double residual = 0.0;
  std::uint64_t seed = 0;
};

struct DecodeOptions {
  std::uint64_t seed = 0;
  Tolerance tol{1e-10, 0.0};
  double zero_floor = 1e-10;  // syndrome counts as zero below this * ||responses||
  double gate = 1e-8;         // honest residual must stay below gate * ||responses||
  // A priori bound on an honest payload entry, 0 if unknown. Both
  // thresholds above are floored by it, so results that are small through
  // cancellation (a gradient near an optimum) still decode.
  double scale = 0.0;
  OpCounter* ops = nullptr;
};

Vector worker_product(const EncodedShare& share, const Vector& v, OpCounter* ops = nullptr);

// Product with a vector that is zero outside `index`.
Vector sparse_product(const EncodedShare& share, const std::vector<Index>& index,
                      const Vector& values, OpCounter* ops = nullptr);

// Every payload holds one value per block; block b has `widths[b]` unknowns,
// which are the first widths[b] columns of the basis. The result stacks the
// recovered blocks in order.
DecodeOutcome decode_blocks(const std::vector<WorkerResponse>& responses,
                            const ErrorLocatorMatrix& locator, const NullBasis& basis,
                            const std::vector<Index>& widths, const DecodeOptions& options = {});

DecodeOutcome decode(const std::vector<WorkerResponse>& responses,
                     const ErrorLocatorMatrix& locator, const NullBasis& basis,
                     const BlockGeometry& geometry, const DecodeOptions& options = {});

}  // namespace byzcode
