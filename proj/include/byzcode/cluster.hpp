#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "byzcode/common.hpp"
#include "byzcode/encoder.hpp"
#include "byzcode/locator.hpp"
#include "byzcode/mvp.hpp"

namespace byzcode {

enum class AdversaryKind { honest, gaussian_noise, sign_flip, decoy_vector, adaptive_random_subset };
enum class TargetSelection { fixed_set, per_round_random };
enum class StragglerPolicy { none, random_per_round };

struct AdversarySpec {
  AdversaryKind kind = AdversaryKind::honest;
  double sigma = 100.0;
  TargetSelection selection = TargetSelection::fixed_set;
};

struct ClusterConfig {
  int m = 15;
  int t = 1;
  int s = 0;
  double epsilon = -1.0;  // negative: smallest value admitting s + t
  std::uint64_t seed = 1;
  AdversarySpec adversary;
  StragglerPolicy straggler_policy = StragglerPolicy::none;

  double resolved_epsilon() const;
  // Errors plus erasures the code is built for: floor(eps/(1+eps) * m/2).
  int design_budget() const;
  void validate() const;
};

std::string to_string(AdversaryKind kind);
AdversaryKind parse_adversary_kind(const std::string& name);
std::string to_string(StragglerPolicy policy);
StragglerPolicy parse_straggler_policy(const std::string& name);

struct RoundSelection {
  std::vector<int> corrupt;
  std::vector<int> stragglers;
};

// Pure in (config, seed, round).
RoundSelection replay(const ClusterConfig& config, std::uint64_t seed, std::uint64_t round);

struct RoundStats {
  std::uint64_t max_worker_flops = 0;
  std::uint64_t total_worker_flops = 0;
  double max_worker_seconds = 0.0;
};

using WorkerCompute = std::function<Vector(int worker, const Vector& request, OpCounter* ops)>;

class Cluster {
 public:
  explicit Cluster(ClusterConfig config);

  const ClusterConfig& config() const { return config_; }
  int m() const { return config_.m; }
  const ErrorLocatorMatrix& locator() const { return locator_; }
  const NullBasis& rref_basis() const { return rref_; }
  const NullBasis& orthonormal_basis() const { return orth_; }
  std::uint64_t rounds() const { return round_; }

  const std::vector<EncodedShare>& install(const std::string& name, const Matrix& a,
                                           BasisVariant variant, Provenance provenance,
                                           OpCounter* ops = nullptr);
  const std::vector<EncodedShare>& store(const std::string& name) const;
  std::vector<EncodedShare>& mutable_store(const std::string& name);
  bool has_store(const std::string& name) const { return stores_.count(name) > 0; }
  const NullBasis& basis(BasisVariant variant) const;
  // Frobenius norm of the matrix installed under `name`; the master knows
  // it from encoding time and uses it to bound honest payloads.
  double source_norm(const std::string& name) const;
  // Largest row norm of the basis, i.e. max_i ||b_i||.
  double coeff_bound(BasisVariant variant) const;

  // Per-worker vectors that live at the workers (e.g. encoded parameters).
  std::vector<Vector>& worker_state(const std::string& name);

  // Every worker computes (stragglers too; their reply just never arrives).
  // Corrupted workers then replace their payload.
  std::vector<WorkerResponse> run_round(const Vector& request, const WorkerCompute& compute,
                                        RoundStats* stats = nullptr);

  const RoundSelection& last_selection() const { return selection_; }
  const Vector& honest_output(int worker) const { return honest_.at(worker); }

  // Decode seed for the round that was just run.
  std::uint64_t decode_seed() const;

 private:
  ClusterConfig config_;
  ErrorLocatorMatrix locator_;
  NullBasis rref_;
  NullBasis orth_;
  std::map<std::string, std::vector<EncodedShare>> stores_;
  std::map<std::string, double> norms_;
  std::map<std::string, std::vector<Vector>> state_;
  std::uint64_t round_ = 0;
  RoundSelection selection_;
  std::vector<Vector> honest_;
};

}  // namespace byzcode
