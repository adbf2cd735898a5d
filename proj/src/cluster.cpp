#include "byzcode/cluster.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace byzcode {

namespace {

enum Tag : std::uint32_t { fixed_tag = 1, round_tag, straggler_tag, decoy_tag, kind_tag, noise_tag, seed_tag };

std::mt19937_64 stream(std::uint64_t seed, Tag tag, std::uint64_t round, std::uint64_t worker = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(round),
                    static_cast<std::uint32_t>(round >> 32), static_cast<std::uint32_t>(worker)};
  return std::mt19937_64(seq);
}

// k distinct draws from pool, ascending.
std::vector<int> sample(std::vector<int> pool, int k, std::mt19937_64& rng) {
  k = std::min<int>(k, static_cast<int>(pool.size()));
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, static_cast<int>(pool.size()) - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<int> all_workers(int m) {
  std::vector<int> w(m);
  std::iota(w.begin(), w.end(), 0);
  return w;
}

Vector gaussian_vector(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

}  // namespace

double ClusterConfig::resolved_epsilon() const {
  if (epsilon >= 0.0) return epsilon;
  const int b = s + t;
  if (2 * b >= m) return static_cast<double>(m - 1);
  return 2.0 * b / (m - 2.0 * b);
}

int ClusterConfig::design_budget() const {
  const double e = resolved_epsilon();
  return static_cast<int>(std::floor(e / (1.0 + e) * m / 2.0 + 1e-9));
}

void ClusterConfig::validate() const {
  if (m < 2) throw Error(ErrorCode::invalid_m, "m must be at least 2");
  if (t < 0 || s < 0) throw Error(ErrorCode::invalid_threshold, "t and s must be nonnegative");
  const double e = resolved_epsilon();
  if (e < 0.0 || e > m - 1) throw Error(ErrorCode::invalid_threshold, "epsilon must lie in [0, m-1]");
  if (s + t > design_budget()) {
    throw Error(ErrorCode::invalid_threshold, "s + t exceeds floor(eps/(1+eps) * m/2)");
  }
  if (adversary.sigma < 0.0) throw Error(ErrorCode::invalid_threshold, "sigma must be nonnegative");
}

std::string to_string(AdversaryKind kind) {
  switch (kind) {
    case AdversaryKind::honest: return "honest";
    case AdversaryKind::gaussian_noise: return "gaussian-noise";
    case AdversaryKind::sign_flip: return "sign-flip";
    case AdversaryKind::decoy_vector: return "decoy-vector";
    case AdversaryKind::adaptive_random_subset: return "adaptive-random-subset";
  }
  return "honest";
}

AdversaryKind parse_adversary_kind(const std::string& name) {
  for (auto k : {AdversaryKind::honest, AdversaryKind::gaussian_noise, AdversaryKind::sign_flip,
                 AdversaryKind::decoy_vector, AdversaryKind::adaptive_random_subset}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::config_parse, "unknown adversary '" + name + "'");
}

std::string to_string(StragglerPolicy policy) {
  return policy == StragglerPolicy::none ? "none" : "random-per-round";
}

StragglerPolicy parse_straggler_policy(const std::string& name) {
  if (name == "none") return StragglerPolicy::none;
  if (name == "random-per-round") return StragglerPolicy::random_per_round;
  throw Error(ErrorCode::config_parse, "unknown straggler policy '" + name + "'");
}

RoundSelection replay(const ClusterConfig& config, std::uint64_t seed, std::uint64_t round) {
  RoundSelection sel;
  const int m = config.m;
  const AdversarySpec& adv = config.adversary;
  if (adv.kind != AdversaryKind::honest && config.t > 0) {
    std::vector<int> pool = all_workers(m);
    if (adv.selection == TargetSelection::fixed_set) {
      auto rng = stream(seed, fixed_tag, 0);
      pool = sample(pool, config.t, rng);
    }
    auto rng = stream(seed, round_tag, round);
    int count = config.t;
    if (adv.kind == AdversaryKind::adaptive_random_subset) {
      count = std::uniform_int_distribution<int>(1, config.t)(rng);
    }
    sel.corrupt = (adv.selection == TargetSelection::fixed_set && count == config.t)
                      ? pool
                      : sample(pool, count, rng);
  }
  if (config.straggler_policy == StragglerPolicy::random_per_round && config.s > 0) {
    std::vector<int> pool;
    for (int i = 0; i < m; ++i) {
      if (!std::binary_search(sel.corrupt.begin(), sel.corrupt.end(), i)) pool.push_back(i);
    }
    auto rng = stream(seed, straggler_tag, round);
    sel.stragglers = sample(pool, config.s, rng);
  }
  return sel;
}

Cluster::Cluster(ClusterConfig config)
    : config_(std::move(config)),
      locator_((config_.validate(), build_locator(config_.m, config_.design_budget()))),
      rref_(null_basis(locator_, BasisVariant::rref)),
      orth_(null_basis(locator_, BasisVariant::orthonormal)) {}

const NullBasis& Cluster::basis(BasisVariant variant) const {
  return variant == BasisVariant::rref ? rref_ : orth_;
}

const std::vector<EncodedShare>& Cluster::install(const std::string& name, const Matrix& a,
                                                  BasisVariant variant, Provenance provenance,
                                                  OpCounter* ops) {
  stores_[name] = encode(basis(variant), a, provenance, ops);
  norms_[name] = a.norm();
  return stores_[name];
}

double Cluster::source_norm(const std::string& name) const {
  auto it = norms_.find(name);
  if (it == norms_.end()) throw Error(ErrorCode::out_of_range, "no store named " + name);
  return it->second;
}

double Cluster::coeff_bound(BasisVariant variant) const {
  const Matrix& c = basis(variant).coeffs;
  return c.size() == 0 ? 0.0 : c.rowwise().norm().maxCoeff();
}

const std::vector<EncodedShare>& Cluster::store(const std::string& name) const {
  auto it = stores_.find(name);
  if (it == stores_.end()) throw Error(ErrorCode::out_of_range, "no store named " + name);
  return it->second;
}

std::vector<EncodedShare>& Cluster::mutable_store(const std::string& name) {
  auto it = stores_.find(name);
  if (it == stores_.end()) throw Error(ErrorCode::out_of_range, "no store named " + name);
  return it->second;
}

std::vector<Vector>& Cluster::worker_state(const std::string& name) {
  auto& st = state_[name];
  if (st.empty()) st.resize(config_.m);
  return st;
}

std::uint64_t Cluster::decode_seed() const {
  auto rng = stream(config_.seed, seed_tag, round_ == 0 ? 0 : round_ - 1);
  return rng();
}

std::vector<WorkerResponse> Cluster::run_round(const Vector& request, const WorkerCompute& compute,
                                               RoundStats* stats) {
  using clock = std::chrono::steady_clock;
  const int m = config_.m;
  selection_ = replay(config_, config_.seed, round_);
  const AdversarySpec& adv = config_.adversary;

  Vector decoy;
  const bool may_decoy = adv.kind == AdversaryKind::decoy_vector ||
                         adv.kind == AdversaryKind::adaptive_random_subset;
  if (may_decoy && !selection_.corrupt.empty()) {
    auto rng = stream(config_.seed, decoy_tag, round_);
    // v' = v + noise of comparable size: a different but plausible request
    const double scale = std::max(request.norm(), 1.0) / std::sqrt(static_cast<double>(request.size()));
    decoy = request + scale * gaussian_vector(request.size(), rng);
  }

  honest_.assign(m, Vector());
  std::vector<WorkerResponse> out(m);
  RoundStats local;
  for (int i = 0; i < m; ++i) {
    OpCounter ops;
    const auto t0 = clock::now();
    honest_[i] = compute(i, request, &ops);
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    local.max_worker_flops = std::max(local.max_worker_flops, ops.flops);
    local.total_worker_flops += ops.flops;
    local.max_worker_seconds = std::max(local.max_worker_seconds, secs);
    out[i].worker = i;
    if (std::binary_search(selection_.stragglers.begin(), selection_.stragglers.end(), i)) continue;
    if (!std::binary_search(selection_.corrupt.begin(), selection_.corrupt.end(), i)) {
      out[i].payload = honest_[i];
      continue;
    }
    AdversaryKind kind = adv.kind;
    if (kind == AdversaryKind::adaptive_random_subset) {
      auto rng = stream(config_.seed, kind_tag, round_, i);
      const AdversaryKind choices[] = {AdversaryKind::gaussian_noise, AdversaryKind::sign_flip,
                                       AdversaryKind::decoy_vector};
      kind = choices[std::uniform_int_distribution<int>(0, 2)(rng)];
    }
    switch (kind) {
      case AdversaryKind::gaussian_noise: {
        auto rng = stream(config_.seed, noise_tag, round_, i);
        out[i].payload = honest_[i] + adv.sigma * gaussian_vector(honest_[i].size(), rng);
        break;
      }
      case AdversaryKind::sign_flip:
        out[i].payload = -honest_[i];
        break;
      case AdversaryKind::decoy_vector:
        out[i].payload = compute(i, decoy, nullptr);
        break;
      default:
        out[i].payload = honest_[i];
    }
  }
  ++round_;
  if (stats) *stats = local;
  return out;
}

}  // namespace byzcode
