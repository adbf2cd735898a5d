#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "byzcode/cluster.hpp"
#include "byzcode/common.hpp"
#include "byzcode/encoder.hpp"

namespace byzcode {

enum class Loss { squared, logistic };

struct Regularizer {
  enum class Kind { none, l1, l2, box };
  Kind kind = Kind::none;
  double lambda = 0.0;
  double lo = 0.0;
  double hi = 0.0;

  static Regularizer none() { return {}; }
  static Regularizer l1(double lambda) { return {Kind::l1, lambda, 0.0, 0.0}; }
  static Regularizer l2(double lambda) { return {Kind::l2, lambda, 0.0, 0.0}; }
  static Regularizer box(double lo, double hi) { return {Kind::box, 0.0, lo, hi}; }
  double value(const Vector& w) const;
};

// Constant step unless per_iteration is non-empty. A nonpositive constant
// means "not chosen yet"; see with_default_step.
struct StepSchedule {
  double constant = 0.0;
  std::vector<double> per_iteration;
  double at(std::size_t iteration) const;
};

struct ModelSpec {
  Loss loss = Loss::squared;
  Regularizer reg;
  StepSchedule step;
  void validate() const;
};

Vector prox(const Regularizer& reg, const Vector& z, double alpha);

// Per-sample derivative of the loss in its first argument.
Vector loss_derivative(Loss loss, const Vector& u, const Vector& y);
double loss_value(Loss loss, const Vector& u, const Vector& y);
double objective(const ModelSpec& model, const Matrix& X, const Vector& y, const Vector& w);

// Largest eigenvalue of X^T X by power iteration (20 steps, fixed start).
double lipschitz_estimate(const Matrix& X, int iterations = 20);
ModelSpec with_default_step(ModelSpec model, const Matrix& X);

struct GlmState {
  Vector w;
  std::size_t iteration = 0;
  // Master cache: xw = X (w + delta), where delta is nonzero only on
  // `stale`; it holds the coordinates changed since xw was last refreshed.
  Vector xw;
  bool xw_valid = false;
  std::vector<Index> stale;
  Vector stale_delta;

  static GlmState start(const Vector& w0);
};

// Cluster plus what the master keeps: labels and the problem shape.
struct EncodedProblem {
  Cluster* cluster = nullptr;
  Vector y;
  Index n = 0;
  Index d = 0;
};

// Installs S1 X ("x") and S2 X^T ("xt") with the sparse basis.
EncodedProblem encode_problem(Cluster& cluster, const Matrix& X, const Vector& y,
                              OpCounter* ops = nullptr);

struct IterationStats {
  std::uint64_t max_worker_flops = 0;  // summed over the rounds of the step
  std::uint64_t master_flops = 0;
  double worker_seconds = 0.0;
  double master_seconds = 0.0;
  std::vector<int> corrupt;
};

// Two coded rounds: X w, then X^T f'(w). Refreshes the state's cache.
Vector coded_gradient(EncodedProblem& problem, Loss loss, GlmState& state,
                      IterationStats* stats = nullptr);

GlmState pgd_step(EncodedProblem& problem, const GlmState& state, const ModelSpec& model,
                  IterationStats* stats = nullptr);

struct CdCodebook {
  NullBasis l_basis;   // sparse basis, first round (stored as "x")
  NullBasis r_basis;   // orthonormal basis, R^+ = S
  BlockGeometry param;   // over the d coordinates, p2 blocks
  BlockGeometry sample;  // over the n samples, p1 blocks

  Index blocks() const { return param.p; }
  // f(u) for 0-based block u: the coordinates it owns
  std::vector<Index> f(Index u) const;
  std::vector<Index> f(const std::vector<Index>& U) const;
};

// Installs "xr" (the columns X R_i, stored as S_i X^T with the orthonormal
// basis) and sets every worker's v_i = S_i w0. Requires encode_problem.
CdCodebook make_codebook(EncodedProblem& problem, const Matrix& X, const Vector& w0);

// v held by each worker, for invariant checks
const std::vector<Vector>& cd_worker_vectors(const EncodedProblem& problem);

GlmState cd_iteration(EncodedProblem& problem, const CdCodebook& codebook, const GlmState& state,
                      const std::vector<Index>& U, const ModelSpec& model,
                      IterationStats* stats = nullptr);

// Round-robin block selection: iteration it takes blocks it*tau .. it*tau+tau-1 mod p2.
std::vector<Index> round_robin_blocks(Index p2, Index tau, std::size_t iteration);

using SampleGradient = std::function<Vector(const Vector& x, double y, const Vector& w)>;
SampleGradient sample_gradient(Loss loss);

// Draws r uniformly from [0, n) with rng, recovers x_r from the coded
// columns, steps on f_r. `recovered` (optional) receives x_r.
GlmState sgd_step(EncodedProblem& problem, const GlmState& state, const ModelSpec& model,
                  std::mt19937_64& rng, IterationStats* stats = nullptr,
                  Vector* recovered = nullptr, const SampleGradient& grad = {});

// Uncoded references. Each returns w^0 .. w^iterations.
std::vector<Vector> serial_pgd(const Matrix& X, const Vector& y, const ModelSpec& model,
                               const Vector& w0, std::size_t iterations);
std::vector<Vector> serial_cd(const Matrix& X, const Vector& y, const ModelSpec& model,
                              const Vector& w0, Index q, Index tau, std::size_t iterations);
std::vector<Vector> serial_sgd(const Matrix& X, const Vector& y, const ModelSpec& model,
                               const Vector& w0, const std::vector<Index>& indices,
                               const SampleGradient& grad = {});

}  // namespace byzcode
