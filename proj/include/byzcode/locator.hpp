#pragma once

#include <cstdint>
#include <vector>

#include "byzcode/common.hpp"

namespace byzcode {

enum class NodeScheme { chebyshev, equispaced };
enum class BasisVariant { rref, orthonormal };

// The k x m real Vandermonde matrix F, entry (j, i) = z_i^j.
//
// The monomial form is badly conditioned once k passes ~20, so syndromes
// are kept in "canonical" coordinates: s = Q^T e, where Q (m x k) is an
// orthonormal basis of the row space of F built by Arnoldi on the nodes.
// F e = R^T Q^T e for an invertible upper-triangular R, so both forms
// carry the same information; from_monomial converts between them.
class ErrorLocatorMatrix {
 public:
  ErrorLocatorMatrix(std::vector<double> nodes, int k);

  int m() const { return static_cast<int>(nodes_.size()); }
  int k() const { return k_; }
  int q() const { return m() - k_; }
  const Vector& nodes() const { return z_; }

  Matrix monomial() const;
  const Matrix& row_basis() const { return row_basis_; }

  Vector syndrome(const Vector& e) const;
  Matrix syndromes(const Matrix& e) const;  // e is m x p, result k x p
  Vector from_monomial(const Vector& s) const;

 private:
  std::vector<double> nodes_;
  Vector z_;
  int k_;
  Matrix row_basis_;
};

ErrorLocatorMatrix build_locator(int m, int t,
                                 NodeScheme scheme = NodeScheme::chebyshev);

struct NullBasis {
  Matrix coeffs;  // m x q, columns b_1..b_q
  BasisVariant variant = BasisVariant::rref;
  int q() const { return static_cast<int>(coeffs.cols()); }
  int m() const { return static_cast<int>(coeffs.rows()); }
};

NullBasis null_basis(const ErrorLocatorMatrix& F,
                     BasisVariant variant = BasisVariant::rref);

// Threshold used when deciding whether a fit reproduces a syndrome:
// relative * ||s|| + absolute. A syndrome with norm <= absolute is zero.
struct Tolerance {
  double relative = 1e-8;
  double absolute = 0.0;
};

enum class LocateMethod { none, prony, exhaustive };

struct SupportReport {
  std::vector<int> support;  // 0-based worker ids, ascending
  Vector magnitudes;         // length m, zero off the support
  double residual = 0.0;
  bool failed = false;
  LocateMethod method = LocateMethod::none;
};

// Syndrome decoding restricted to the workers that responded. With erased
// set E the usable syndrome space is {Lambda_E * p : deg p < k - |E|}
// evaluated on the remaining nodes, Lambda_E(z) = prod_{e in E} (z - z_e).
class SyndromeSpace {
 public:
  SyndromeSpace(const ErrorLocatorMatrix& F, const std::vector<int>& erased);

  int m() const { return m_; }
  int dim() const { return static_cast<int>(basis_.cols()); }
  const std::vector<int>& active() const { return active_; }
  // active.size() x dim orthonormal basis; syndrome of h is basis^T h_active
  const Matrix& basis() const { return basis_; }

  SupportReport locate(const Vector& s, int t, Tolerance tol) const;

 private:
  bool fit(const std::vector<int>& cols, const Vector& s, double thr,
           SupportReport& out) const;
  // Candidate sets tried by prony/pencil; refine restarts from them.
  using Starts = std::vector<std::vector<int>>;
  bool prony(const Vector& s, int nu, double thr, SupportReport& out, Starts& starts) const;
  bool pencil(const Vector& s, int nu, double thr, SupportReport& out, Starts& starts) const;
  bool refine(std::vector<int> cols, const Vector& s, double thr, SupportReport& out) const;
  bool exhaustive(const Vector& s, int t, double thr,
                  SupportReport& out) const;

  int m_;
  std::vector<int> active_;
  Vector x_;        // active nodes
  Vector weight_;   // Lambda_E on active nodes
  Matrix basis_;    // weighted orthonormal polynomials, degree < dim
  Matrix poly_;     // unweighted orthonormal polynomials, degree < dim
};

SupportReport recover_support(const ErrorLocatorMatrix& F, const Vector& syndrome,
                              int t, Tolerance tol = {});

// syndromes: p x k, each row a canonical syndrome.
SupportReport joint_support(const ErrorLocatorMatrix& F, const Matrix& syndromes,
                            std::uint64_t seed, Tolerance tol = {});

// Orthonormal basis of {start .* p(x) : deg p < cols} on the nodes x.
Matrix arnoldi_basis(const Vector& x, const Vector& start, int cols);

// Numerical rank by SVD with threshold rtol * sigma_max.
int numerical_rank(const Matrix& a, double rtol = 1e-8);

}  // namespace byzcode
