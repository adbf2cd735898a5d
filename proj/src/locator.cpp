#include "byzcode/locator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace byzcode {

Matrix arnoldi_basis(const Vector& x, const Vector& start, int cols) {
  const Index n = x.size();
  Matrix q(n, cols);
  if (cols == 0) return q;
  q.col(0) = start / start.norm();
  for (int j = 1; j < cols; ++j) {
    Vector v = x.cwiseProduct(q.col(j - 1));
    // two passes of Gram-Schmidt keep the columns orthonormal to eps
    for (int pass = 0; pass < 2; ++pass) {
      v -= q.leftCols(j) * (q.leftCols(j).transpose() * v);
    }
    q.col(j) = v / v.norm();
  }
  return q;
}

int numerical_rank(const Matrix& a, double rtol) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int r = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > rtol * sv(0)) ++r;
  }
  return r;
}

ErrorLocatorMatrix::ErrorLocatorMatrix(std::vector<double> nodes, int k)
    : nodes_(std::move(nodes)), k_(k) {
  const int m = static_cast<int>(nodes_.size());
  if (m < 2) throw Error(ErrorCode::invalid_m, "need at least 2 workers");
  if (k < 0 || k >= m) throw Error(ErrorCode::invalid_threshold, "need 0 <= k < m");
  z_ = Eigen::Map<const Vector>(nodes_.data(), m);
  for (int i = 0; i < m; ++i) {
    if (nodes_[i] == 0.0) throw Error(ErrorCode::invalid_m, "nodes must be nonzero");
    for (int j = 0; j < i; ++j) {
      if (nodes_[i] == nodes_[j]) throw Error(ErrorCode::invalid_m, "nodes must be distinct");
    }
  }
  row_basis_ = arnoldi_basis(z_, Vector::Ones(m), k);
}

Matrix ErrorLocatorMatrix::monomial() const {
  Matrix f(k_, m());
  for (int i = 0; i < m(); ++i) {
    double p = 1.0;
    for (int j = 0; j < k_; ++j) {
      f(j, i) = p;
      p *= z_(i);
    }
  }
  return f;
}

Vector ErrorLocatorMatrix::syndrome(const Vector& e) const {
  if (e.size() != m()) throw Error(ErrorCode::dimension_mismatch, "error vector length != m");
  return row_basis_.transpose() * e;
}

Matrix ErrorLocatorMatrix::syndromes(const Matrix& e) const {
  if (e.rows() != m()) throw Error(ErrorCode::dimension_mismatch, "error rows != m");
  return row_basis_.transpose() * e;
}

Vector ErrorLocatorMatrix::from_monomial(const Vector& s) const {
  if (s.size() != k_) throw Error(ErrorCode::dimension_mismatch, "syndrome length != k");
  // monomial F^T = Q R with R upper triangular, so F e = R^T (Q^T e)
  Matrix r = row_basis_.transpose() * monomial().transpose();
  return r.triangularView<Eigen::Upper>().transpose().solve(s);
}

ErrorLocatorMatrix build_locator(int m, int t, NodeScheme scheme) {
  if (m < 2) throw Error(ErrorCode::invalid_m, "m must be at least 2");
  if (t < 0 || t > (m - 1) / 2) {
    throw Error(ErrorCode::invalid_threshold,
                "t must lie in [0, floor((m-1)/2)]");
  }
  std::vector<double> grid(m);
  for (int i = 1; i <= m; ++i) {
    if (scheme == NodeScheme::chebyshev) {
      grid[i - 1] = std::cos((2.0 * i - 1.0) * std::numbers::pi / (2.0 * m)) + 1.5;
    } else {
      grid[i - 1] = static_cast<double>(i) / m;
    }
  }
  // Workers 0..k-1 carry the dense rows of the RREF basis, whose entries
  // are Lagrange weights of those k nodes. Taking every (m/k)-th grid point
  // keeps them spread over the interval; a contiguous run would put
  // cond(F_perp) near 1e13 at m = 31.
  const int k = 2 * t;
  std::vector<double> z;
  std::vector<char> used(m, 0);
  for (int j = 0; j < k; ++j) {
    const int id = static_cast<int>((j + 0.5) * m / k);
    used[id] = 1;
    z.push_back(grid[id]);
  }
  for (int i = 0; i < m; ++i) {
    if (!used[i]) z.push_back(grid[i]);
  }
  return ErrorLocatorMatrix(std::move(z), k);
}

NullBasis null_basis(const ErrorLocatorMatrix& F, BasisVariant variant) {
  const int m = F.m(), k = F.k(), q = F.q();
  const Vector& z = F.nodes();
  // Column j is the null vector supported on workers {0..k-1, k+j} with a
  // unit entry at k+j: the divided-difference weights of those k+1 nodes.
  Matrix b = Matrix::Zero(m, q);
  for (int j = 0; j < q; ++j) {
    const int pivot = k + j;
    b(pivot, j) = 1.0;
    for (int i = 0; i < k; ++i) {
      double v = -1.0;
      for (int l = 0; l < k; ++l) {
        if (l == i) continue;
        v *= (z(pivot) - z(l)) / (z(i) - z(l));
      }
      b(i, j) = v;
    }
  }
  NullBasis out;
  out.variant = variant;
  if (variant == BasisVariant::rref) {
    out.coeffs = std::move(b);
  } else {
    Eigen::HouseholderQR<Matrix> qr(b);
    out.coeffs = qr.householderQ() * Matrix::Identity(m, q);
  }
  return out;
}

SyndromeSpace::SyndromeSpace(const ErrorLocatorMatrix& F, const std::vector<int>& erased)
    : m_(F.m()) {
  std::vector<char> gone(m_, 0);
  for (int e : erased) {
    if (e < 0 || e >= m_) throw Error(ErrorCode::out_of_range, "erased worker id");
    gone[e] = 1;
  }
  for (int i = 0; i < m_; ++i) {
    if (!gone[i]) active_.push_back(i);
  }
  const int n = static_cast<int>(active_.size());
  const int nerased = m_ - n;
  const int dim = std::max(0, F.k() - nerased);
  x_.resize(n);
  weight_.resize(n);
  for (int a = 0; a < n; ++a) {
    const double zi = F.nodes()(active_[a]);
    x_(a) = zi;
    double w = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (gone[i]) w *= zi - F.nodes()(i);
    }
    weight_(a) = w;
  }
  if (n > 0) weight_ /= weight_.cwiseAbs().maxCoeff();
  basis_ = arnoldi_basis(x_, weight_, dim);
  poly_ = arnoldi_basis(x_, Vector::Ones(n), dim);
}

bool SyndromeSpace::fit(const std::vector<int>& cols, const Vector& s, double thr,
                        SupportReport& out) const {
  const Index r = s.size();
  Matrix a(r, static_cast<Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) a.col(c) = basis_.row(cols[c]).transpose();
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  Vector y = qr.solve(s);
  const double res = (a * y - s).norm();
  if (!(res <= thr)) return false;
  out.support.clear();
  out.magnitudes = Vector::Zero(m_);
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out.support.push_back(active_[cols[c]]);
    out.magnitudes(active_[cols[c]]) = y(c);
  }
  out.residual = res;
  out.failed = false;
  return true;
}

bool SyndromeSpace::prony(const Vector& s, int nu, double thr, SupportReport& out,
                          Starts& starts) const {
  const int r = dim();
  const Index n = x_.size();
  // H c = 0 iff sigma = Phi c vanishes on the error support.
  Vector we = weight_.cwiseProduct(basis_ * s);
  Matrix psi = poly_.leftCols(r - nu);
  Matrix phi = poly_.leftCols(nu + 1);
  Matrix h = psi.transpose() * we.asDiagonal() * phi;
  Eigen::JacobiSVD<Matrix> svd(h, Eigen::ComputeFullV);
  Vector sigma = phi * svd.matrixV().col(nu);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + nu, order.end(), [&](int a, int b) {
    return std::abs(sigma(a)) < std::abs(sigma(b));
  });
  std::vector<int> cols(order.begin(), order.begin() + nu);
  std::sort(cols.begin(), cols.end());
  if (fit(cols, s, thr, out)) return true;
  starts.push_back(cols);

  // The nu smallest |sigma| can miss a root when errors cluster. Fit over a
  // wider candidate set (still <= r columns, so the fit is unique whenever
  // it contains the support), keep the nu largest magnitudes, refit.
  const int wide = std::min<int>({r, static_cast<int>(n), 2 * nu + 2});
  if (wide <= nu) return pencil(s, nu, thr, out, starts);
  std::partial_sort(order.begin(), order.begin() + wide, order.end(), [&](int a, int b) {
    return std::abs(sigma(a)) < std::abs(sigma(b));
  });
  Matrix a(r, wide);
  for (int c = 0; c < wide; ++c) a.col(c) = basis_.row(order[c]).transpose();
  Vector y = a.colPivHouseholderQr().solve(s);
  std::vector<int> rank(wide);
  std::iota(rank.begin(), rank.end(), 0);
  std::partial_sort(rank.begin(), rank.begin() + nu, rank.end(), [&](int a, int b) {
    return std::abs(y(a)) > std::abs(y(b));
  });
  cols.clear();
  for (int c = 0; c < nu; ++c) cols.push_back(order[rank[c]]);
  std::sort(cols.begin(), cols.end());
  if (fit(cols, s, thr, out)) return true;
  starts.insert(starts.begin(), cols);
  return pencil(s, nu, thr, out, starts);
}

bool SyndromeSpace::refine(std::vector<int> cols, const Vector& s, double thr,
                           SupportReport& out) const {
  // Greedy single swaps on the candidate set, taking the best residual drop
  // each pass. Rescues clustered supports where a weak error's root is
  // misplaced by rounding.
  const int n = static_cast<int>(x_.size());
  auto residual = [&](const std::vector<int>& c) {
    Matrix a(s.size(), static_cast<Index>(c.size()));
    for (std::size_t j = 0; j < c.size(); ++j) a.col(j) = basis_.row(c[j]).transpose();
    return (a * a.colPivHouseholderQr().solve(s) - s).norm();
  };
  double current = residual(cols);
  const int passes = 2 * static_cast<int>(cols.size()) + 4;
  for (int pass = 0; pass < passes && current > thr; ++pass) {
    double best = current;
    int best_slot = -1, best_node = -1;
    for (std::size_t slot = 0; slot < cols.size(); ++slot) {
      for (int node = 0; node < n; ++node) {
        if (std::find(cols.begin(), cols.end(), node) != cols.end()) continue;
        std::vector<int> trial = cols;
        trial[slot] = node;
        const double r = residual(trial);
        if (r < best) {
          best = r;
          best_slot = static_cast<int>(slot);
          best_node = node;
        }
      }
    }
    if (best_slot < 0) break;
    cols[best_slot] = best_node;
    current = best;
  }
  std::sort(cols.begin(), cols.end());
  return fit(cols, s, thr, out);
}

bool SyndromeSpace::pencil(const Vector& s, int nu, double thr, SupportReport& out,
                           Starts& starts) const {
  // Shifted pair H1 v = lambda H0 v has the support nodes as eigenvalues.
  const int r = dim();
  const Index n = x_.size();
  Vector we = weight_.cwiseProduct(basis_ * s);
  Matrix psi = poly_.leftCols(r - nu);
  Matrix phi = poly_.leftCols(nu);
  Matrix h0 = psi.transpose() * we.asDiagonal() * phi;
  Matrix h1 = psi.transpose() * we.cwiseProduct(x_).asDiagonal() * phi;
  Matrix pen = h0.completeOrthogonalDecomposition().solve(h1);
  Eigen::EigenSolver<Matrix> es(pen, false);
  std::vector<char> taken(n, 0);
  std::vector<int> cols;
  for (Index j = 0; j < es.eigenvalues().size(); ++j) {
    const double lam = es.eigenvalues()(j).real();
    int best = -1;
    for (Index i = 0; i < n; ++i) {
      if (taken[i]) continue;
      if (best < 0 || std::abs(x_(i) - lam) < std::abs(x_(best) - lam)) best = static_cast<int>(i);
    }
    if (best < 0) return false;
    taken[best] = 1;
    cols.push_back(best);
  }
  std::sort(cols.begin(), cols.end());
  return fit(cols, s, thr, out);
}

bool SyndromeSpace::exhaustive(const Vector& s, int t, double thr,
                               SupportReport& out) const {
  const int n = static_cast<int>(x_.size());
  for (int size = 1; size <= t; ++size) {
    std::vector<int> pick(size);
    std::iota(pick.begin(), pick.end(), 0);
    SupportReport best;
    double best_res = INFINITY;
    while (true) {
      SupportReport trial;
      if (fit(pick, s, thr, trial) && trial.residual < best_res) {
        best_res = trial.residual;
        best = trial;
      }
      int i = size - 1;
      while (i >= 0 && pick[i] == n - size + i) --i;
      if (i < 0) break;
      ++pick[i];
      for (int j = i + 1; j < size; ++j) pick[j] = pick[j - 1] + 1;
    }
    if (best_res <= thr) {
      out = best;
      return true;
    }
  }
  return false;
}

SupportReport SyndromeSpace::locate(const Vector& s, int t, Tolerance tol) const {
  if (s.size() != dim()) throw Error(ErrorCode::dimension_mismatch, "syndrome length");
  SupportReport out;
  out.magnitudes = Vector::Zero(m_);
  const double norm = s.norm();
  const double thr = tol.relative * norm + tol.absolute;
  if (norm == 0.0 || norm <= tol.absolute) {
    out.residual = norm;
    return out;
  }
  const int numax = std::min(t, dim() / 2);
  if (numax > 0) {
    // first guess: rank of the largest locator system
    Vector we = weight_.cwiseProduct(basis_ * s);
    Matrix h = poly_.leftCols(dim() - numax).transpose() * we.asDiagonal() *
               poly_.leftCols(numax + 1);
    const int guess = std::clamp(numerical_rank(h, 1e-8), 1, numax);
    std::vector<int> tries{guess};
    for (int nu = 1; nu <= numax; ++nu) {
      if (nu != guess) tries.push_back(nu);
    }
    std::vector<Starts> starts(tries.size());
    for (std::size_t i = 0; i < tries.size(); ++i) {
      if (prony(s, tries[i], thr, out, starts[i])) {
        out.method = LocateMethod::prony;
        return out;
      }
    }
    for (const Starts& group : starts) {
      for (const auto& cols : group) {
        if (refine(cols, s, thr, out)) {
          out.method = LocateMethod::prony;
          return out;
        }
      }
    }
    if (active_.size() <= 12 && exhaustive(s, numax, thr, out)) {
      out.method = LocateMethod::exhaustive;
      return out;
    }
  }
  out.failed = true;
  out.residual = norm;
  out.support.clear();
  out.magnitudes = Vector::Zero(m_);
  return out;
}

SupportReport recover_support(const ErrorLocatorMatrix& F, const Vector& syndrome, int t,
                              Tolerance tol) {
  return SyndromeSpace(F, {}).locate(syndrome, t, tol);
}

SupportReport joint_support(const ErrorLocatorMatrix& F, const Matrix& syndromes,
                            std::uint64_t seed, Tolerance tol) {
  if (syndromes.cols() != F.k()) {
    throw Error(ErrorCode::dimension_mismatch, "syndrome rows must have length k");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Vector alpha(syndromes.rows());
  for (Index i = 0; i < alpha.size(); ++i) alpha(i) = gauss(rng);
  Vector combined = syndromes.transpose() * alpha;
  return recover_support(F, combined, F.k() / 2, tol);
}

}  // namespace byzcode
