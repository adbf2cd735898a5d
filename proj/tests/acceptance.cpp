// Acceptance checks. Each criterion prints one PASS/FAIL line; ctest runs
// them one at a time with --criterion N.
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "byzcode/experiment.hpp"
#include "byzcode/mvp.hpp"
#include "byzcode/optim.hpp"
#include "oracles.hpp"

using namespace byzcode;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ClusterConfig cluster(int m, int t, int s, AdversaryKind kind, std::uint64_t seed) {
  ClusterConfig c;
  c.m = m;
  c.t = t;
  c.s = s;
  c.seed = seed;
  c.adversary.kind = kind;
  c.adversary.selection = TargetSelection::per_round_random;
  c.straggler_policy = s > 0 ? StragglerPolicy::random_per_round : StragglerPolicy::none;
  return c;
}

DecodeOutcome coded_product(Cluster& cl, const Vector& v) {
  const auto& shares = cl.store("a");
  auto resp = cl.run_round(v, [&shares](int i, const Vector& req, OpCounter* ops) {
    return worker_product(shares[i], req, ops);
  });
  DecodeOptions opt;
  opt.seed = cl.decode_seed();
  opt.scale = cl.coeff_bound(BasisVariant::rref) * cl.source_norm("a") * v.norm();
  return decode(resp, cl.locator(), cl.rref_basis(), shares[0].geometry, opt);
}

// 1. Exact coded MV products with exact localization.
Verdict criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  Verdict v;
  long decodes = 0, wrong = 0, mislocated = 0, thrown = 0;
  double worst = 0.0;
  for (int m : {5, 10, 15, 31}) {
    for (int t = 0; t <= (m - 1) / 2; ++t) {
      for (auto kind : {AdversaryKind::gaussian_noise, AdversaryKind::sign_flip, AdversaryKind::decoy_vector}) {
        Cluster cl(cluster(m, t, 0, kind, 1000 * m + 10 * t + static_cast<int>(kind)));
        const Index rows = 2 * cl.locator().q() + 1 + static_cast<Index>(rng() % 7);
        const Matrix A = oracle::gaussian(rows, 4, rng);
        cl.install("a", A, BasisVariant::rref, Provenance::x);
        for (int trial = 0; trial < 500; ++trial) {
          const Vector x = oracle::gaussian(4, rng);
          ++decodes;
          try {
            const auto out = coded_product(cl, x);
            const double gap = oracle::rel(out.product, A * x);
            worst = std::max(worst, gap);
            if (gap > 1e-8) ++wrong;
            if (out.corrupt != cl.last_selection().corrupt) ++mislocated;
          } catch (const Error&) {
            ++thrown;
          }
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  v.pass = wrong == 0 && mislocated == 0 && thrown == 0 && secs < 120.0;
  v.detail = fmt("%ld decodes, %ld inexact, %ld mislocated, %ld refused, worst rel err %.2e, %.1f s",
                 decodes, wrong, mislocated, thrown, worst, secs);
  return v;
}

// 2. Stragglers and corruptions together at m = 15.
Verdict criterion2() {
  std::mt19937_64 rng(202);
  Verdict v;
  long runs = 0, failed = 0;
  double worst = 0.0;
  const AdversaryKind kinds[] = {AdversaryKind::gaussian_noise, AdversaryKind::sign_flip,
                                 AdversaryKind::decoy_vector, AdversaryKind::adaptive_random_subset};
  for (int s = 0; s <= 7; ++s) {
    for (int t = 0; s + t <= 7; ++t) {
      Cluster cl(cluster(15, t, s, kinds[(s + t) % 4], 77 + 16 * s + t));
      const Index rows = 3 * cl.locator().q() + static_cast<Index>(rng() % 5) + 1;
      const Matrix A = oracle::gaussian(rows, 3, rng);
      cl.install("a", A, BasisVariant::rref, Provenance::x);
      for (int trial = 0; trial < 100; ++trial) {
        const Vector x = oracle::gaussian(3, rng);
        ++runs;
        try {
          const auto out = coded_product(cl, x);
          const double gap = oracle::rel(out.product, A * x);
          worst = std::max(worst, gap);
          const auto& sel = cl.last_selection();
          if (gap > 1e-8 || out.corrupt != sel.corrupt || out.erased != sel.stragglers) ++failed;
        } catch (const Error&) {
          ++failed;
        }
      }
    }
  }
  v.pass = failed == 0;
  v.detail = fmt("%ld runs over all s + t <= 7, %ld failures, worst rel err %.2e", runs, failed, worst);
  return v;
}

// 3. Support recovery agrees with exhaustive least squares on the monomial F.
Verdict criterion3() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> mag(1.0, 100.0);
  Verdict v;
  int disagreements = 0, close_calls = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int t = 1 + static_cast<int>(rng() % 2);
    const int m = 2 * t + 1 + static_cast<int>(rng() % (10 - 2 * t));
    const auto F = build_locator(m, t, trial % 2 ? NodeScheme::chebyshev : NodeScheme::equispaced);
    const Matrix mono = F.monomial();
    const int size = static_cast<int>(rng() % (t + 1));
    Vector e = Vector::Zero(m);
    for (int i : oracle::random_subset(m, size, rng)) e(i) = (rng() & 1 ? 1.0 : -1.0) * mag(rng);
    const Vector s = mono * e;
    const double tol = 1e-8 * s.norm();
    const auto ref = oracle::exhaustive_support(mono, s, t, tol);
    const auto got = recover_support(F, F.from_monomial(s), t);
    if (ref.found && ref.second_residual < 100 * tol) ++close_calls;
    if (!ref.found || got.failed || got.support != ref.best) ++disagreements;
  }
  v.pass = disagreements == 0;
  v.detail = fmt("1000 instances (m <= 10, t <= 2), %d disagreements, %d near-ties in the oracle",
                 disagreements, close_calls);
  return v;
}

// 4. Coded PGD trajectories on the 10000 x 250 synthetic set.
Verdict criterion4() {
  Verdict v;
  std::ostringstream detail;
  double worst_all = 0.0;
  for (const char* task : {"gd", "lasso", "box"}) {
    std::istringstream in(std::string("m = 15\nt = 1..7\nseed = 4\nadversary = gaussian-noise:per-round-random\n") +
                          "dataset = synthetic:10000x250\niterations = 50\nlambda = 0.5\ntask = " + task);
    const auto records = run_experiment(parse_config(in));
    double worst = 0.0;
    for (const auto& r : records) worst = std::max(worst, r.trajectory_deviation);
    worst_all = std::max(worst_all, worst);
    if (records.size() != 7 * 50 || worst >= 1e-6) v.pass = false;
    detail << task << " " << fmt("%.2e", worst) << "; ";
  }
  v.detail = "worst per-iterate deviation over t=1..7, 50 iterations: " + detail.str();
  return v;
}

// 5. Coded CD: per-step update and the worker-side invariant.
Verdict criterion5() {
  Verdict v;
  const Dataset ds = gen_dataset(10000, 250, 5);
  ModelSpec spec = with_default_step(ModelSpec{}, ds.X);
  double worst_step = 0.0, worst_traj = 0.0, worst_inv = 0.0;
  int runs = 0;
  for (int t = 1; t <= 6; ++t) {
    Cluster probe(cluster(15, t, 0, AdversaryKind::honest, 1));
    const Index p2 = BlockGeometry::make(250, probe.locator().q()).p;
    const std::vector<Index> taus{1, (p2 + 9) / 10, (p2 + 3) / 4};
    for (Index tau : taus) {
      Cluster cl(cluster(15, t, 0, AdversaryKind::adaptive_random_subset, 500 + 10 * t + tau));
      auto prob = encode_problem(cl, ds.X, ds.y);
      const Vector w0 = Vector::Zero(250);
      const auto cb = make_codebook(prob, ds.X, w0);
      const auto serial = serial_cd(ds.X, ds.y, spec, w0, cb.param.q, tau, 100);
      auto st = GlmState::start(w0);
      for (std::size_t it = 0; it < 100; ++it) {
        const auto U = round_robin_blocks(cb.blocks(), tau, it);
        // the update rule on f(U), applied to the coded run's own iterate
        const Vector phi = ds.X * st.w - ds.y;
        Vector expect = st.w;
        for (Index c : cb.f(U)) expect(c) -= spec.step.at(it) * ds.X.col(c).dot(phi);
        st = cd_iteration(prob, cb, st, U, spec);
        worst_step = std::max(worst_step, (st.w - expect).norm() / std::max(1.0, expect.norm()));
        worst_traj = std::max(worst_traj, (st.w - serial[it + 1]).norm() / std::max(1.0, serial[it + 1].norm()));
        const auto held = cd_worker_vectors(prob);
        const auto want = encode(cb.r_basis, st.w);
        for (int i = 0; i < 15; ++i) {
          worst_inv = std::max(worst_inv, (held[i] - want[i].data.col(0)).norm() / std::max(1.0, st.w.norm()));
        }
      }
      ++runs;
    }
  }
  v.pass = worst_step < 1e-8 && worst_traj < 1e-8 && worst_inv < 1e-8;
  v.detail = fmt("%d runs x 100 iterations; update err %.2e, serial trajectory err %.2e, v = R+ w err %.2e",
                 runs, worst_step, worst_traj, worst_inv);
  return v;
}

// 6. Worker flop counters.
Verdict criterion6() {
  Verdict v;
  const Dataset ds = gen_dataset(10000, 250, 6);
  const ModelSpec spec = with_default_step(ModelSpec{}, ds.X);

  // CD worker work against tau at t = 1 (q = 13, p2 = 20)
  std::vector<double> taus{1, 2, 5, 10, 20}, work;
  for (double tau : taus) {
    Cluster cl(cluster(15, 1, 0, AdversaryKind::gaussian_noise, 61));
    auto prob = encode_problem(cl, ds.X, ds.y);
    const auto cb = make_codebook(prob, ds.X, Vector::Zero(250));
    auto st = GlmState::start(Vector::Zero(250));
    std::uint64_t total = 0;
    for (std::size_t it = 0; it < 4; ++it) {
      IterationStats stats;
      st = cd_iteration(prob, cb, st, round_robin_blocks(cb.blocks(), static_cast<Index>(tau), it), spec, &stats);
      if (it > 0) total += stats.max_worker_flops;  // the first step also refreshes X w in full
    }
    work.push_back(total / 3.0);
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    num += taus[i] * work[i];
    den += taus[i] * taus[i];
  }
  const double slope = num / den;
  double worst_fit = 0.0;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    worst_fit = std::max(worst_fit, std::abs(work[i] - slope * taus[i]) / (slope * taus[i]));
  }

  // GD worker work against (1 + eps) n d / m across t
  std::vector<double> ratio;
  double gd_t1 = 0.0;
  for (int t = 1; t <= 7; ++t) {
    Cluster cl(cluster(15, t, 0, AdversaryKind::sign_flip, 62));
    auto prob = encode_problem(cl, ds.X, ds.y);
    IterationStats stats;
    pgd_step(prob, GlmState::start(Vector::Zero(250)), spec, &stats);
    const double eps = cl.config().resolved_epsilon();
    ratio.push_back(stats.max_worker_flops / ((1 + eps) * 10000.0 * 250.0 / 15.0));
    if (t == 1) gd_t1 = static_cast<double>(stats.max_worker_flops);
  }
  const double spread = *std::max_element(ratio.begin(), ratio.end()) / *std::min_element(ratio.begin(), ratio.end());
  const double cd_frac = work[1] / gd_t1;  // tau = 2 = ceil(0.1 p2)

  v.pass = worst_fit <= 0.20 && spread <= 1.2 && cd_frac <= 0.15;
  v.detail = fmt("CD vs tau: worst deviation from linear fit %.1f%%; GD flops / ((1+eps)nd/m) spread %.3f "
                 "(%.2f..%.2f); CD(0.1 p2) / GD = %.3f",
                 100 * worst_fit, spread, *std::min_element(ratio.begin(), ratio.end()),
                 *std::max_element(ratio.begin(), ratio.end()), cd_frac);
  return v;
}

// 7. Storage redundancy 2m/(m - 2t) when q divides n and d.
Verdict criterion7() {
  Verdict v;
  std::mt19937_64 rng(707);
  int cases = 0, off = 0;
  double m15t5 = 0.0;
  for (int m = 3; m <= 31; m += 2) {
    for (int t = 0; t <= (m - 1) / 2; ++t) {
      const auto F = build_locator(m, t);
      const auto B = null_basis(F);
      const Index q = F.q();
      const Index n = q * (1 + static_cast<Index>(rng() % 6));
      const Index d = q * (1 + static_cast<Index>(rng() % 4));
      const Matrix X = oracle::gaussian(n, d, rng);
      auto shares = encode(B, X, Provenance::x);
      const auto xt = encode(B, X.transpose(), Provenance::xt);
      shares.insert(shares.end(), xt.begin(), xt.end());
      const auto rep = storage_report(shares);
      ++cases;
      if (rep.redundancy != 2.0 * m / static_cast<double>(q)) ++off;
    }
  }
  {
    const auto F = build_locator(15, 5);
    const auto B = null_basis(F);
    const Matrix X = Matrix::Ones(5 * 100, 5 * 10);
    auto shares = encode(B, X, Provenance::x);
    const auto xt = encode(B, X.transpose(), Provenance::xt);
    shares.insert(shares.end(), xt.begin(), xt.end());
    m15t5 = storage_report(shares).redundancy;
  }
  v.pass = off == 0 && m15t5 == 6.0;
  v.detail = fmt("%d (m, t) cases, %d not exactly 2m/q; m=15 t=5 gives %.17g", cases, off, m15t5);
  return v;
}

// 8. Coded SGD at m = 15, t = 7.
Verdict criterion8() {
  Verdict v;
  const Dataset ds = gen_dataset(2000, 50, 8);
  ModelSpec spec;
  spec.step.constant = 1e-3;
  Cluster cl(cluster(15, 7, 0, AdversaryKind::adaptive_random_subset, 88));
  auto prob = encode_problem(cl, ds.X, ds.y);
  std::mt19937_64 draw(808);
  std::mt19937_64 peek = draw;
  std::vector<Index> idx(1000);
  for (auto& r : idx) r = std::uniform_int_distribution<Index>(0, 1999)(peek);
  const auto serial = serial_sgd(ds.X, ds.y, spec, Vector::Zero(50), idx);
  auto st = GlmState::start(Vector::Zero(50));
  double worst_row = 0.0, worst_traj = 0.0;
  for (std::size_t it = 0; it < 1000; ++it) {
    Vector row;
    st = sgd_step(prob, st, spec, draw, nullptr, &row);
    worst_row = std::max(worst_row, oracle::rel(row, ds.X.row(idx[it]).transpose()));
    worst_traj = std::max(worst_traj, (st.w - serial[it + 1]).norm() / std::max(1.0, serial[it + 1].norm()));
  }
  v.pass = worst_row < 1e-10 && worst_traj < 1e-8;
  v.detail = fmt("1000 steps; worst recovered-row err %.2e, worst trajectory err %.2e", worst_row, worst_traj);
  return v;
}

// 9. Streaming appends equal batch encoding; per-append flops vs (2t+1) d.
Verdict criterion9() {
  Verdict v;
  std::mt19937_64 rng(909);
  double worst_gap = 0.0, worst_flops = 0.0;
  int appends = 0;
  for (int seq = 0; seq < 500; ++seq) {
    const int m = 3 + static_cast<int>(rng() % 30);
    const int t = static_cast<int>(rng() % ((m - 1) / 2 + 1));
    const auto F = build_locator(m, t);
    const auto B = null_basis(F);
    const Index q = F.q();
    // x-style store (rows are samples) and xt-style store (columns are samples)
    const Index d = q + static_cast<Index>(rng() % 20);
    Matrix X = oracle::gaussian(1 + static_cast<Index>(rng() % 30), d, rng);
    auto xs = encode(B, X, Provenance::x);
    auto xts = encode(B, X.transpose(), Provenance::xt);
    const int steps = 1 + static_cast<int>(rng() % 10);
    for (int s = 0; s < steps; ++s) {
      const Vector x = oracle::gaussian(d, rng);
      OpCounter row_ops, col_ops;
      append_row(xs, B, x, &row_ops);
      append_column(xts, B, x, &col_ops);
      X.conservativeResize(X.rows() + 1, Eigen::NoChange);
      X.row(X.rows() - 1) = x.transpose();
      const double unit = (2.0 * t + 1.0) * static_cast<double>(d);
      worst_flops = std::max({worst_flops, row_ops.flops / unit, col_ops.flops / unit});
      ++appends;
    }
    const auto bx = encode(B, X, Provenance::x);
    const auto bxt = encode(B, X.transpose(), Provenance::xt);
    for (int i = 0; i < m; ++i) {
      for (const auto& [a, b] : {std::pair{&xs[i], &bx[i]}, std::pair{&xts[i], &bxt[i]}}) {
        if (a->data.rows() != b->data.rows() || a->data.cols() != b->data.cols()) {
          worst_gap = 1.0;
          continue;
        }
        worst_gap = std::max(worst_gap, (a->data - b->data).norm() / std::max(b->data.norm(), 1e-300));
      }
    }
  }
  constexpr double c = 2.0;
  v.pass = worst_gap <= 1e-12 && worst_flops <= c;
  v.detail = fmt("500 sequences, %d appends; worst batch gap %.2e; max flops / ((2t+1)d) = %.3f (bound %.0f)",
                 appends, worst_gap, worst_flops, c);
  return v;
}

// 10. Rank claims on random subsets.
Verdict criterion10() {
  Verdict v;
  std::mt19937_64 rng(1010);
  int deficient[3] = {0, 0, 0};
  double worst_annihilation = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 3 + static_cast<int>(rng() % 30);
    const int t = 1 + static_cast<int>(rng() % ((m - 1) / 2));
    const auto F = build_locator(m, t);
    const auto variant = trial % 2 ? BasisVariant::rref : BasisVariant::orthonormal;
    const auto B = null_basis(F, variant);
    const int q = F.q();
    const int keep = m - t + static_cast<int>(rng() % (t + 1));
    const auto T = oracle::random_subset(m, keep, rng);

    // Claim 1: F-perp restricted to T has full column rank
    Matrix ft(keep, q);
    for (int a = 0; a < keep; ++a) ft.row(a) = B.coeffs.row(T[a]);
    if (oracle::svd_rank(ft) != q) ++deficient[0];

    // Claim 2: F S~_j = 0, with F the literal Vandermonde
    const Index rows = q * (1 + static_cast<Index>(rng() % 3)) + static_cast<Index>(rng() % q);
    const Index p = (rows + q - 1) / q;
    const Matrix mono = oracle::vandermonde(F.nodes(), F.k());
    for (Index j = 0; j < p; ++j) {
      Matrix st(m, rows);
      for (int i = 0; i < m; ++i) st.row(i) = oracle::dense_encoder(B.coeffs.row(i).transpose(), rows).row(j);
      const double scale = mono.norm() * std::max(st.norm(), 1e-300);
      worst_annihilation = std::max(worst_annihilation, (mono * st).norm() / scale);
    }

    // Claim 3: stacked S_T has full column rank
    Matrix s_t(static_cast<Index>(keep) * p, rows);
    for (int a = 0; a < keep; ++a) {
      s_t.middleRows(static_cast<Index>(a) * p, p) = oracle::dense_encoder(B.coeffs.row(T[a]).transpose(), rows);
    }
    if (oracle::svd_rank(s_t) != rows) ++deficient[2];
  }
  deficient[1] = worst_annihilation > 1e-12 ? 1 : 0;
  v.pass = deficient[0] == 0 && deficient[1] == 0 && deficient[2] == 0;
  v.detail = fmt("1000 subsets each at m <= 32: F-perp_T deficient %d, S_T deficient %d, "
                 "worst ||F S~|| / (||F|| ||S~||) = %.2e",
                 deficient[0], deficient[2], worst_annihilation);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::function<Verdict()> criteria[] = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                               criterion6, criterion7, criterion8, criterion9, criterion10};
  std::vector<int> which;
  for (int a = 1; a < argc; ++a) {
    if (std::strcmp(argv[a], "--criterion") == 0 && a + 1 < argc) which.push_back(std::atoi(argv[++a]));
  }
  if (which.empty()) {
    for (int n = 1; n <= 10; ++n) which.push_back(n);
  }
  int failed = 0;
  for (int n : which) {
    if (n < 1 || n > 10) {
      std::cerr << "criterion must be 1..10\n";
      return 2;
    }
    Verdict v;
    try {
      v = criteria[n - 1]();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << v.detail << std::endl;
    if (!v.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
