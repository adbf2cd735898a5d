#include "byzcode/mvp.hpp"

#include <algorithm>
#include <iterator>
#include <map>
#include <random>

namespace byzcode {

Vector worker_product(const EncodedShare& share, const Vector& v, OpCounter* ops) {
  if (v.size() != share.data.cols()) throw Error(ErrorCode::dimension_mismatch, "vector length");
  count_flops(ops, 2 * share.data.size());
  return share.data * v;
}

Vector sparse_product(const EncodedShare& share, const std::vector<Index>& index,
                      const Vector& values, OpCounter* ops) {
  if (static_cast<Index>(index.size()) != values.size()) {
    throw Error(ErrorCode::dimension_mismatch, "index/value length");
  }
  Vector out = Vector::Zero(share.data.rows());
  for (std::size_t c = 0; c < index.size(); ++c) {
    const Index j = index[c];
    if (j < 0 || j >= share.data.cols()) throw Error(ErrorCode::out_of_range, "column index");
    out += values(static_cast<Index>(c)) * share.data.col(j);
  }
  count_flops(ops, 2 * share.data.rows() * static_cast<Index>(index.size()));
  return out;
}

DecodeOutcome decode_blocks(const std::vector<WorkerResponse>& responses,
                            const ErrorLocatorMatrix& locator, const NullBasis& basis,
                            const std::vector<Index>& widths, const DecodeOptions& options) {
  const int m = locator.m();
  const Index nb = static_cast<Index>(widths.size());
  if (static_cast<int>(responses.size()) != m || basis.m() != m) {
    throw Error(ErrorCode::dimension_mismatch, "need one response per worker");
  }
  DecodeOutcome out;
  out.seed = options.seed;

  std::vector<const Vector*> payload(m, nullptr);
  for (const WorkerResponse& r : responses) {
    if (r.worker < 0 || r.worker >= m) throw Error(ErrorCode::out_of_range, "worker id");
    if (r.payload) {
      if (r.payload->size() != nb) throw Error(ErrorCode::dimension_mismatch, "payload length");
      payload[r.worker] = &*r.payload;
    }
  }
  for (int i = 0; i < m; ++i) {
    if (!payload[i]) out.erased.push_back(i);
  }
  const int budget = locator.k() / 2;
  if (static_cast<int>(out.erased.size()) > budget) {
    throw Error(ErrorCode::budget_exceeded, "too many stragglers");
  }

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss;
  Vector alpha(nb);
  for (Index j = 0; j < nb; ++j) alpha(j) = gauss(rng);

  std::map<Index, std::vector<Index>> by_width;
  for (Index b = 0; b < nb; ++b) by_width[widths[b]].push_back(b);
  std::vector<Index> offset(nb + 1, 0);
  for (Index b = 0; b < nb; ++b) offset[b + 1] = offset[b] + widths[b];

  // Errors far below the largest one sit under the zero floor and survive a
  // pass. Workers already located are then dropped like stragglers and the
  // rest is located again at its own scale. Each pass costs what the
  // dropped workers already cost as errors.
  std::vector<int> located;
  for (;;) {
    std::vector<int> gone;
    std::set_union(out.erased.begin(), out.erased.end(), located.begin(), located.end(),
                   std::back_inserter(gone));
    const int dropped = static_cast<int>(gone.size());

    // 1. syndromes of the p transposed systems, restricted to responders
    SyndromeSpace space(locator, gone);
    const std::vector<int>& active = space.active();
    const Index na = static_cast<Index>(active.size());
    Matrix h(na, nb);
    for (Index a = 0; a < na; ++a) h.row(a) = payload[active[a]]->transpose();
    const Matrix syn = space.basis().transpose() * h;
    count_flops(options.ops, 2 * space.dim() * na * nb);

    // 2. one Gaussian combination locates the union of all supports
    const Vector combined = syn * alpha;
    const double scale = std::max((h * alpha).norm(), options.scale * alpha.norm());
    count_flops(options.ops, 2 * (space.dim() + na) * nb);
    Tolerance tol = options.tol;
    tol.absolute = std::max(tol.absolute, options.zero_floor * scale);
    const SupportReport rep = space.locate(combined, budget - dropped, tol);
    count_flops(options.ops, 8 * na * space.dim() * space.dim());
    if (rep.failed) throw Error(ErrorCode::budget_exceeded, "no consistent error pattern within budget");

    // 3. honest rows, then F_T^+ per distinct block width
    std::vector<Index> honest;
    for (Index a = 0; a < na; ++a) {
      if (!std::binary_search(rep.support.begin(), rep.support.end(), active[a])) honest.push_back(a);
    }
    const Index nh = static_cast<Index>(honest.size());
    Matrix ft(nh, basis.q());
    Matrix r(nh, nb);
    for (Index a = 0; a < nh; ++a) {
      ft.row(a) = basis.coeffs.row(active[honest[a]]);
      r.row(a) = h.row(honest[a]);
    }

    out.product = Vector::Zero(offset[nb]);
    double resid2 = 0.0;
    for (const auto& [w, blocks] : by_width) {
      if (w > basis.q() || w < 1) throw Error(ErrorCode::dimension_mismatch, "block width");
      const Index nw = static_cast<Index>(blocks.size());
      Matrix rhs(nh, nw);
      for (Index c = 0; c < nw; ++c) rhs.col(c) = r.col(blocks[c]);
      Eigen::ColPivHouseholderQR<Matrix> qr(ft.leftCols(w));
      qr.setThreshold(1e-12);
      if (qr.rank() < w) throw Error(ErrorCode::rank_deficient, "honest rows lost column rank");
      Matrix sol = qr.solve(rhs);
      resid2 += (ft.leftCols(w) * sol - rhs).squaredNorm();
      count_flops(options.ops, 2 * nh * w * w + 6 * nh * w * nw);
      for (Index c = 0; c < nw; ++c) {
        out.product.segment(offset[blocks[c]], w) = sol.col(c);
      }
    }
    out.residual = std::sqrt(resid2);
    std::vector<int> found;
    std::set_union(located.begin(), located.end(), rep.support.begin(), rep.support.end(),
                   std::back_inserter(found));
    const double floor = options.scale * std::sqrt(static_cast<double>(nh * nb));
    if (out.residual <= options.gate * std::max({r.norm(), floor, 1e-300})) {
      out.corrupt = std::move(found);
      return out;
    }
    if (rep.support.empty()) {
      throw Error(ErrorCode::budget_exceeded, "honest responses are inconsistent after decoding");
    }
    located = std::move(found);
  }
}

DecodeOutcome decode(const std::vector<WorkerResponse>& responses,
                     const ErrorLocatorMatrix& locator, const NullBasis& basis,
                     const BlockGeometry& geometry, const DecodeOptions& options) {
  if (geometry.q != basis.q()) throw Error(ErrorCode::dimension_mismatch, "geometry q != basis q");
  std::vector<Index> widths(geometry.p);
  for (Index b = 0; b < geometry.p; ++b) widths[b] = geometry.width(b);
  return decode_blocks(responses, locator, basis, widths, options);
}

}  // namespace byzcode
