#pragma once

#include <vector>

#include "byzcode/common.hpp"
#include "byzcode/locator.hpp"

namespace byzcode {

// Source rows are cut into p contiguous blocks of q; the last holds l.
struct BlockGeometry {
  Index rows = 0;
  Index q = 1;
  Index p = 0;
  Index l = 0;

  static BlockGeometry make(Index rows, Index q);
  Index width(Index block) const { return block + 1 == p ? l : q; }
  Index start(Index block) const { return block * q; }
};

enum class Provenance { x, xt, identity, xr };

// Worker i's S_i, kept implicit as a coefficient row plus geometry.
struct WorkerEncoder {
  int worker = 0;
  Vector coeffs;  // row i of the null basis, length q
  BlockGeometry geometry;

  Matrix dense() const;  // p x rows, for tests and reference checks
};

WorkerEncoder worker_encoder(const NullBasis& basis, int worker, Index rows);

struct EncodedShare {
  int worker = 0;
  Matrix data;  // p x cols, the stored S_i A
  Vector coeffs;
  BlockGeometry geometry;
  Provenance provenance = Provenance::x;
};

std::vector<EncodedShare> encode(const NullBasis& basis, const Matrix& A,
                                 Provenance provenance = Provenance::x,
                                 OpCounter* ops = nullptr);

// A gains a row x (length cols).
void append_row(std::vector<EncodedShare>& shares, const NullBasis& basis,
                const Vector& x, OpCounter* ops = nullptr);

// A gains a column (length rows).
void append_column(std::vector<EncodedShare>& shares, const NullBasis& basis,
                   const Vector& column, OpCounter* ops = nullptr);

struct StorageReport {
  Index total_reals = 0;
  double redundancy = 0.0;
};

// Redundancy is measured against the raw n x d size of the first x or xt
// share set found.
StorageReport storage_report(const std::vector<EncodedShare>& shares);

}  // namespace byzcode
