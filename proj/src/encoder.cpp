#include "byzcode/encoder.hpp"

namespace byzcode {

namespace {

using StridedRows = Eigen::Map<const Matrix, 0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>;

// Rows j, j+q, j+2q, ... of A as a strided view, count rows.
StridedRows every_qth_row(const Matrix& a, Index j, Index q, Index count) {
  return StridedRows(a.data() + j, count, a.cols(),
                     Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(a.rows(), q));
}

void check_basis(const NullBasis& basis, const std::vector<EncodedShare>& shares) {
  if (static_cast<Index>(shares.size()) != basis.m()) {
    throw Error(ErrorCode::dimension_mismatch, "share count != m");
  }
}

}  // namespace

BlockGeometry BlockGeometry::make(Index rows, Index q) {
  if (q < 1) throw Error(ErrorCode::dimension_mismatch, "block width must be positive");
  if (rows < 1) throw Error(ErrorCode::dimension_mismatch, "empty source");
  BlockGeometry g;
  g.rows = rows;
  g.q = q;
  g.p = (rows + q - 1) / q;
  g.l = rows - (g.p - 1) * q;
  return g;
}

Matrix WorkerEncoder::dense() const {
  Matrix s = Matrix::Zero(geometry.p, geometry.rows);
  for (Index b = 0; b < geometry.p; ++b) {
    for (Index j = 0; j < geometry.width(b); ++j) s(b, geometry.start(b) + j) = coeffs(j);
  }
  return s;
}

WorkerEncoder worker_encoder(const NullBasis& basis, int worker, Index rows) {
  if (worker < 0 || worker >= basis.m()) throw Error(ErrorCode::out_of_range, "worker id");
  WorkerEncoder enc;
  enc.worker = worker;
  enc.coeffs = basis.coeffs.row(worker).transpose();
  enc.geometry = BlockGeometry::make(rows, basis.q());
  return enc;
}

std::vector<EncodedShare> encode(const NullBasis& basis, const Matrix& A, Provenance provenance,
                                 OpCounter* ops) {
  if (A.size() == 0) throw Error(ErrorCode::dimension_mismatch, "empty matrix");
  const BlockGeometry g = BlockGeometry::make(A.rows(), basis.q());
  std::vector<EncodedShare> shares(basis.m());
  for (int i = 0; i < basis.m(); ++i) {
    EncodedShare& sh = shares[i];
    sh.worker = i;
    sh.coeffs = basis.coeffs.row(i).transpose();
    sh.geometry = g;
    sh.provenance = provenance;
    sh.data = Matrix::Zero(g.p, A.cols());
    for (Index j = 0; j < g.q; ++j) {
      const double b = sh.coeffs(j);
      if (b == 0.0) continue;
      const Index count = j < g.l ? g.p : g.p - 1;
      sh.data.topRows(count) += b * every_qth_row(A, j, g.q, count);
      count_flops(ops, 2 * count * A.cols());
    }
  }
  return shares;
}

void append_row(std::vector<EncodedShare>& shares, const NullBasis& basis, const Vector& x,
                OpCounter* ops) {
  check_basis(basis, shares);
  for (EncodedShare& sh : shares) {
    if (x.size() != sh.data.cols()) throw Error(ErrorCode::dimension_mismatch, "row length");
    BlockGeometry& g = sh.geometry;
    Index slot;
    if (g.l < g.q) {
      slot = g.l;
      ++g.l;
    } else {
      sh.data.conservativeResize(g.p + 1, Eigen::NoChange);
      sh.data.row(g.p).setZero();
      ++g.p;
      g.l = 1;
      slot = 0;
    }
    ++g.rows;
    const double b = sh.coeffs(slot);
    if (b != 0.0) {
      sh.data.row(g.p - 1) += b * x.transpose();
      count_flops(ops, 2 * x.size());
    }
  }
}

void append_column(std::vector<EncodedShare>& shares, const NullBasis& basis,
                   const Vector& column, OpCounter* ops) {
  check_basis(basis, shares);
  for (EncodedShare& sh : shares) {
    const BlockGeometry& g = sh.geometry;
    if (column.size() != g.rows) throw Error(ErrorCode::dimension_mismatch, "column length");
    Vector enc = Vector::Zero(g.p);
    for (Index j = 0; j < g.q; ++j) {
      const double b = sh.coeffs(j);
      if (b == 0.0) continue;
      const Index count = j < g.l ? g.p : g.p - 1;
      for (Index r = 0; r < count; ++r) enc(r) += b * column(r * g.q + j);
      count_flops(ops, 2 * count);
    }
    sh.data.conservativeResize(Eigen::NoChange, sh.data.cols() + 1);
    sh.data.col(sh.data.cols() - 1) = enc;
  }
}

StorageReport storage_report(const std::vector<EncodedShare>& shares) {
  StorageReport rep;
  Index raw = 0;
  for (const EncodedShare& sh : shares) {
    rep.total_reals += sh.data.size();
    if (raw == 0 && (sh.provenance == Provenance::x || sh.provenance == Provenance::xt)) {
      raw = sh.geometry.rows * sh.data.cols();
    }
  }
  if (raw > 0) rep.redundancy = static_cast<double>(rep.total_reals) / static_cast<double>(raw);
  return rep;
}

}  // namespace byzcode
