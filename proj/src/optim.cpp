#include "byzcode/optim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace byzcode {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

double softplus(double u) { return u > 0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u)); }
double sigmoid(double u) {
  if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

void accumulate(IterationStats* stats, const RoundStats& rs) {
  if (!stats) return;
  stats->max_worker_flops += rs.max_worker_flops;
  stats->worker_seconds += rs.max_worker_seconds;
}

// One coded round, decoded with `basis`. `scale` bounds an honest payload entry.
Vector coded_round(Cluster& cl, const Vector& request,
                   const WorkerCompute& compute, const NullBasis& basis,
                   const std::vector<Index>& widths, double scale, IterationStats* stats) {
  RoundStats rs;
  auto responses = cl.run_round(request, compute, &rs);
  accumulate(stats, rs);
  OpCounter master;
  const auto t0 = clock_type::now();
  DecodeOptions opt;
  opt.seed = cl.decode_seed();
  opt.ops = &master;
  opt.scale = scale;
  DecodeOutcome out = decode_blocks(responses, cl.locator(), basis, widths, opt);
  if (stats) {
    stats->master_seconds += seconds_since(t0);
    stats->master_flops += master.flops;
    for (int c : out.corrupt) {
      if (std::find(stats->corrupt.begin(), stats->corrupt.end(), c) == stats->corrupt.end()) {
        stats->corrupt.push_back(c);
      }
    }
  }
  return out.product;
}

std::vector<Index> block_widths(const BlockGeometry& g) {
  std::vector<Index> w(g.p);
  for (Index b = 0; b < g.p; ++b) w[b] = g.width(b);
  return w;
}

Vector matvec_round(Cluster& cl, const std::string& store, const Vector& v, IterationStats* stats) {
  const auto& shares = cl.store(store);
  WorkerCompute compute = [&shares](int i, const Vector& req, OpCounter* ops) {
    return worker_product(shares[i], req, ops);
  };
  const double scale = cl.coeff_bound(BasisVariant::rref) * cl.source_norm(store) * v.norm();
  return coded_round(cl, v, compute, cl.rref_basis(), block_widths(shares[0].geometry), scale, stats);
}

Index index_from(double value, Index n) {
  const long long r = std::llround(value) % static_cast<long long>(n);
  return static_cast<Index>(r < 0 ? r + n : r);
}

}  // namespace

double Regularizer::value(const Vector& w) const {
  switch (kind) {
    case Kind::none: return 0.0;
    case Kind::l1: return lambda * w.lpNorm<1>();
    case Kind::l2: return 0.5 * lambda * w.squaredNorm();
    case Kind::box:
      for (Index i = 0; i < w.size(); ++i) {
        if (w(i) < lo || w(i) > hi) return std::numeric_limits<double>::infinity();
      }
      return 0.0;
  }
  return 0.0;
}

double StepSchedule::at(std::size_t iteration) const {
  if (!per_iteration.empty()) return per_iteration[std::min(iteration, per_iteration.size() - 1)];
  return constant;
}

void ModelSpec::validate() const {
  if (reg.lambda < 0.0) throw Error(ErrorCode::config_parse, "lambda must be nonnegative");
  if (reg.kind == Regularizer::Kind::box && reg.lo > reg.hi) {
    throw Error(ErrorCode::config_parse, "box needs lo <= hi");
  }
}

Vector prox(const Regularizer& reg, const Vector& z, double alpha) {
  switch (reg.kind) {
    case Regularizer::Kind::none: return z;
    case Regularizer::Kind::l1: {
      const double th = reg.lambda * alpha;
      return z.unaryExpr([th](double v) {
        if (v > th) return v - th;
        if (v < -th) return v + th;
        return 0.0;
      });
    }
    case Regularizer::Kind::l2: return z / (1.0 + reg.lambda * alpha);
    case Regularizer::Kind::box: return z.cwiseMax(reg.lo).cwiseMin(reg.hi);
  }
  return z;
}

Vector loss_derivative(Loss loss, const Vector& u, const Vector& y) {
  if (u.size() != y.size()) throw Error(ErrorCode::dimension_mismatch, "prediction/label length");
  if (loss == Loss::squared) return u - y;
  return u.unaryExpr([](double v) { return sigmoid(v); }) - y;
}

double loss_value(Loss loss, const Vector& u, const Vector& y) {
  if (loss == Loss::squared) return 0.5 * (u - y).squaredNorm();
  double total = 0.0;
  for (Index i = 0; i < u.size(); ++i) total += softplus(u(i)) - y(i) * u(i);
  return total;
}

double objective(const ModelSpec& model, const Matrix& X, const Vector& y, const Vector& w) {
  return loss_value(model.loss, X * w, y) + model.reg.value(w);
}

double lipschitz_estimate(const Matrix& X, int iterations) {
  Vector v = Vector::Ones(X.cols()) / std::sqrt(static_cast<double>(X.cols()));
  for (int it = 0; it < iterations; ++it) {
    Vector next = X.transpose() * (X * v);
    const double nrm = next.norm();
    if (nrm == 0.0) return 0.0;
    v = next / nrm;
  }
  return (X * v).squaredNorm();
}

ModelSpec with_default_step(ModelSpec model, const Matrix& X) {
  if (model.step.per_iteration.empty() && model.step.constant <= 0.0) {
    double L = lipschitz_estimate(X);
    if (model.loss == Loss::logistic) L /= 4.0;
    model.step.constant = L > 0.0 ? 1.0 / L : 1.0;
  }
  return model;
}

GlmState GlmState::start(const Vector& w0) {
  GlmState s;
  s.w = w0;
  s.stale_delta = Vector();
  return s;
}

EncodedProblem encode_problem(Cluster& cluster, const Matrix& X, const Vector& y, OpCounter* ops) {
  if (X.rows() != y.size()) throw Error(ErrorCode::dimension_mismatch, "X rows != y length");
  cluster.install("x", X, BasisVariant::rref, Provenance::x, ops);
  cluster.install("xt", X.transpose(), BasisVariant::rref, Provenance::xt, ops);
  EncodedProblem p;
  p.cluster = &cluster;
  p.y = y;
  p.n = X.rows();
  p.d = X.cols();
  return p;
}

Vector coded_gradient(EncodedProblem& problem, Loss loss, GlmState& state, IterationStats* stats) {
  Cluster& cl = *problem.cluster;
  if (state.w.size() != problem.d) throw Error(ErrorCode::dimension_mismatch, "w length != d");
  Vector xw = matvec_round(cl, "x", state.w, stats);
  const auto t0 = clock_type::now();
  Vector fprime = loss_derivative(loss, xw, problem.y);
  if (stats) {
    stats->master_seconds += seconds_since(t0);
    stats->master_flops += 4 * static_cast<std::uint64_t>(problem.n);
  }
  Vector grad = matvec_round(cl, "xt", fprime, stats);
  state.xw = std::move(xw);
  state.xw_valid = true;
  state.stale.clear();
  state.stale_delta = Vector();
  return grad;
}

GlmState pgd_step(EncodedProblem& problem, const GlmState& state, const ModelSpec& model,
                  IterationStats* stats) {
  GlmState next = state;
  const Vector g = coded_gradient(problem, model.loss, next, stats);
  const double alpha = model.step.at(state.iteration);
  next.w = prox(model.reg, state.w - alpha * g, alpha);
  next.stale.resize(problem.d);
  for (Index i = 0; i < problem.d; ++i) next.stale[i] = i;
  next.stale_delta = state.w - next.w;
  ++next.iteration;
  return next;
}

std::vector<Index> CdCodebook::f(Index u) const {
  if (u < 0 || u >= param.p) throw Error(ErrorCode::invalid_u, "block index outside [p2]");
  std::vector<Index> out(param.width(u));
  for (Index j = 0; j < param.width(u); ++j) out[j] = param.start(u) + j;
  return out;
}

std::vector<Index> CdCodebook::f(const std::vector<Index>& U) const {
  std::vector<Index> out;
  for (Index u : U) {
    auto part = f(u);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

CdCodebook make_codebook(EncodedProblem& problem, const Matrix& X, const Vector& w0) {
  Cluster& cl = *problem.cluster;
  if (!cl.has_store("x")) throw Error(ErrorCode::out_of_range, "encode_problem must run first");
  if (w0.size() != X.cols()) throw Error(ErrorCode::dimension_mismatch, "w0 length != d");
  CdCodebook cb;
  cb.l_basis = cl.rref_basis();
  cb.r_basis = cl.orthonormal_basis();
  cb.param = BlockGeometry::make(X.cols(), cb.r_basis.q());
  cb.sample = BlockGeometry::make(X.rows(), cb.l_basis.q());
  cl.install("xr", X.transpose(), BasisVariant::orthonormal, Provenance::xr);
  auto v = encode(cb.r_basis, w0);
  auto& held = cl.worker_state("cd_v");
  for (int i = 0; i < cl.m(); ++i) held[i] = v[i].data.col(0);
  return cb;
}

const std::vector<Vector>& cd_worker_vectors(const EncodedProblem& problem) {
  return problem.cluster->worker_state("cd_v");
}

std::vector<Index> round_robin_blocks(Index p2, Index tau, std::size_t iteration) {
  tau = std::clamp<Index>(tau, 1, p2);
  std::vector<Index> U(tau);
  for (Index c = 0; c < tau; ++c) {
    U[c] = static_cast<Index>((static_cast<std::uint64_t>(iteration) * tau + c) % p2);
  }
  return U;
}

GlmState cd_iteration(EncodedProblem& problem, const CdCodebook& codebook, const GlmState& state,
                      const std::vector<Index>& U, const ModelSpec& model, IterationStats* stats) {
  if (model.reg.kind != Regularizer::Kind::none) {
    throw Error(ErrorCode::config_parse, "coordinate descent runs without a regularizer");
  }
  if (U.empty()) throw Error(ErrorCode::invalid_u, "empty block set");
  std::vector<char> seen(codebook.param.p, 0);
  for (Index u : U) {
    if (u < 0 || u >= codebook.param.p) throw Error(ErrorCode::invalid_u, "block index outside [p2]");
    if (seen[u]++) throw Error(ErrorCode::invalid_u, "repeated block");
  }
  Cluster& cl = *problem.cluster;
  GlmState next = state;

  // (a)-(b): bring the cached X w up to date
  const auto& xs = cl.store("x");
  if (!next.xw_valid) {
    next.xw = matvec_round(cl, "x", next.w, stats);
  } else if (!next.stale.empty()) {
    const std::vector<Index> idx = next.stale;
    WorkerCompute compute = [&xs, &idx](int i, const Vector& req, OpCounter* ops) {
      return sparse_product(xs[i], idx, req, ops);
    };
    const double scale = cl.coeff_bound(BasisVariant::rref) * cl.source_norm("x") * next.stale_delta.norm();
    next.xw -= coded_round(cl, next.stale_delta, compute, cl.rref_basis(),
                           block_widths(xs[0].geometry), scale, stats);
  }
  next.xw_valid = true;
  next.stale.clear();

  const auto t0 = clock_type::now();
  const Vector phi = loss_derivative(model.loss, next.xw, problem.y);
  if (stats) {
    stats->master_seconds += seconds_since(t0);
    stats->master_flops += 4 * static_cast<std::uint64_t>(problem.n);
  }

  // (c): workers step their own v_iU using the stored X R_i columns
  const double alpha = model.step.at(state.iteration);
  const auto& xr = cl.store("xr");
  auto& held = cl.worker_state("cd_v");
  WorkerCompute compute = [&](int i, const Vector& req, OpCounter* ops) {
    Vector out(static_cast<Index>(U.size()));
    for (std::size_t c = 0; c < U.size(); ++c) {
      out(c) = held[i](U[c]) - alpha * xr[i].data.row(U[c]).dot(req);
    }
    count_flops(ops, (2 * problem.n + 2) * static_cast<Index>(U.size()));
    return out;
  };
  std::vector<Index> widths;
  for (Index u : U) widths.push_back(codebook.param.width(u));
  const double scale = cl.coeff_bound(BasisVariant::orthonormal) *
                       (state.w.norm() + alpha * cl.source_norm("xr") * phi.norm());
  const Vector wnew = coded_round(cl, phi, compute, codebook.r_basis, widths, scale, stats);
  for (int i = 0; i < cl.m(); ++i) {
    const Vector& mine = cl.honest_output(i);
    for (std::size_t c = 0; c < U.size(); ++c) held[i](U[c]) = mine(c);
  }

  // (d): master takes the decoded block values
  next.stale = codebook.f(U);
  next.stale_delta.resize(static_cast<Index>(next.stale.size()));
  for (std::size_t c = 0; c < next.stale.size(); ++c) {
    next.stale_delta(c) = next.w(next.stale[c]) - wnew(c);
    next.w(next.stale[c]) = wnew(c);
  }
  ++next.iteration;
  return next;
}

SampleGradient sample_gradient(Loss loss) {
  if (loss == Loss::squared) {
    return [](const Vector& x, double y, const Vector& w) -> Vector { return x * (x.dot(w) - y); };
  }
  return [](const Vector& x, double y, const Vector& w) -> Vector { return x * (sigmoid(x.dot(w)) - y); };
}

GlmState sgd_step(EncodedProblem& problem, const GlmState& state, const ModelSpec& model,
                  std::mt19937_64& rng, IterationStats* stats, Vector* recovered,
                  const SampleGradient& grad) {
  Cluster& cl = *problem.cluster;
  const auto& xt = cl.store("xt");
  const Index n = problem.n;
  const Index r = std::uniform_int_distribution<Index>(0, n - 1)(rng);
  Vector request(1);
  request(0) = static_cast<double>(r);
  WorkerCompute compute = [&xt, n](int i, const Vector& req, OpCounter* ops) {
    count_flops(ops, static_cast<std::uint64_t>(xt[i].data.rows()));
    return Vector(xt[i].data.col(index_from(req(0), n)));
  };
  const double scale = cl.coeff_bound(BasisVariant::rref) * cl.source_norm("xt");
  Vector x = coded_round(cl, request, compute, cl.rref_basis(),
                         block_widths(xt[0].geometry), scale, stats);
  const auto t0 = clock_type::now();
  const SampleGradient& g = grad ? grad : sample_gradient(model.loss);
  GlmState next = state;
  next.w = state.w - model.step.at(state.iteration) * g(x, problem.y(r), state.w);
  next.xw_valid = false;
  ++next.iteration;
  if (stats) {
    stats->master_seconds += seconds_since(t0);
    stats->master_flops += 6 * static_cast<std::uint64_t>(problem.d);
  }
  if (recovered) *recovered = std::move(x);
  return next;
}

std::vector<Vector> serial_pgd(const Matrix& X, const Vector& y, const ModelSpec& model,
                               const Vector& w0, std::size_t iterations) {
  std::vector<Vector> traj{w0};
  Vector w = w0;
  for (std::size_t it = 0; it < iterations; ++it) {
    const Vector g = X.transpose() * loss_derivative(model.loss, X * w, y);
    const double alpha = model.step.at(it);
    w = prox(model.reg, w - alpha * g, alpha);
    traj.push_back(w);
  }
  return traj;
}

std::vector<Vector> serial_cd(const Matrix& X, const Vector& y, const ModelSpec& model,
                              const Vector& w0, Index q, Index tau, std::size_t iterations) {
  const BlockGeometry g = BlockGeometry::make(X.cols(), q);
  std::vector<Vector> traj{w0};
  Vector w = w0;
  for (std::size_t it = 0; it < iterations; ++it) {
    const Vector phi = loss_derivative(model.loss, X * w, y);
    const double alpha = model.step.at(it);
    for (Index u : round_robin_blocks(g.p, tau, it)) {
      for (Index j = 0; j < g.width(u); ++j) {
        const Index c = g.start(u) + j;
        w(c) -= alpha * X.col(c).dot(phi);
      }
    }
    traj.push_back(w);
  }
  return traj;
}

std::vector<Vector> serial_sgd(const Matrix& X, const Vector& y, const ModelSpec& model,
                               const Vector& w0, const std::vector<Index>& indices,
                               const SampleGradient& grad) {
  const SampleGradient& g = grad ? grad : sample_gradient(model.loss);
  std::vector<Vector> traj{w0};
  Vector w = w0;
  for (std::size_t it = 0; it < indices.size(); ++it) {
    const Index r = indices[it];
    w = w - model.step.at(it) * g(X.row(r).transpose(), y(r), w);
    traj.push_back(w);
  }
  return traj;
}

}  // namespace byzcode
