#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "byzcode/cluster.hpp"
#include "byzcode/common.hpp"
#include "byzcode/optim.hpp"

namespace byzcode {

struct Dataset {
  Matrix X;
  Vector y;
  Vector theta;
};

// X ~ N(0, I); theta has ceil(d/3) nonzeros drawn N(0, 4); y = X theta + N(0, 1).
Dataset gen_dataset(Index n, Index d, std::uint64_t seed);

enum class Task { gd, lasso, ridge, box, logistic, cd, sgd };
std::string to_string(Task task);
Task parse_task(const std::string& name);

struct ExperimentConfig {
  int m = 15;
  std::vector<int> t{1};
  int s = 0;
  std::uint64_t seed = 1;
  AdversarySpec adversary;
  StragglerPolicy straggler_policy = StragglerPolicy::none;
  std::string dataset = "synthetic:1000x50";
  Task task = Task::gd;
  int iterations = 20;
  std::vector<double> tau{0.1};  // fractions of p2, CD only
  double step_size = 0.0;         // 0: 1/L by power iteration
  double lambda = 0.1;
};

// Flat "key = value" lines; '#' starts a comment. Unknown keys throw.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

Dataset load_dataset(const ExperimentConfig& config);

ModelSpec model_for(const ExperimentConfig& config, const Matrix& X);
ClusterConfig cluster_config(const ExperimentConfig& config, int t);

struct ExperimentRecord {
  std::string task;
  int m = 0;
  int t = 0;
  int s = 0;
  std::string adversary;
  std::size_t iteration = 0;
  std::uint64_t max_worker_flops = 0;
  std::uint64_t master_flops = 0;
  double wall_time_worker_max = 0.0;
  double wall_time_master = 0.0;
  double objective_value = 0.0;
  double trajectory_deviation = 0.0;
};

const std::string& csv_header();
void write_csv(std::ostream& out, const std::vector<ExperimentRecord>& records);

// One record per (t, tau, iteration). Throws on config or decode failure.
std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& config);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Property checks for the configured setup: coded products, gradients and
// the task's trajectory against the uncoded reference.
std::vector<CheckResult> verify_config(const ExperimentConfig& config);

}  // namespace byzcode
