#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "byzcode/experiment.hpp"
#include "byzcode/io.hpp"

using namespace byzcode;

namespace {

ExperimentConfig read_config(const std::string& path, const std::optional<std::uint64_t>& seed) {
  ExperimentConfig cfg = load_config(path);
  if (seed) cfg.seed = *seed;
  return cfg;
}

int cmd_gen(const ExperimentConfig& cfg, const std::string& out) {
  if (cfg.dataset.rfind("synthetic:", 0) != 0) {
    std::cerr << "gen needs dataset = synthetic:NxD\n";
    return 2;
  }
  const Dataset ds = load_dataset(cfg);
  std::filesystem::create_directories(out);
  const std::filesystem::path dir(out);
  save_matrix((dir / "X.txt").string(), ds.X);
  save_matrix((dir / "y.txt").string(), ds.y);
  save_matrix((dir / "theta.txt").string(), ds.theta);
  std::cerr << "wrote " << ds.X.rows() << " x " << ds.X.cols() << " dataset to " << out << "\n";
  return 0;
}

int cmd_run(const ExperimentConfig& cfg, const std::string& out) {
  const auto records = run_experiment(cfg);
  if (out.empty() || out == "-") {
    write_csv(std::cout, records);
  } else {
    std::ofstream f(out);
    if (!f) throw Error(ErrorCode::io, "cannot write " + out);
    write_csv(f, records);
  }
  return 0;
}

int cmd_verify(const ExperimentConfig& cfg) {
  int failed = 0;
  for (const auto& c : verify_config(cfg)) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " (" << c.detail << ")\n";
    if (!c.passed) ++failed;
  }
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Byzantine-resilient coded computation simulator"};
  app.require_subcommand(1);
  std::string config_path, out;
  std::optional<std::uint64_t> seed;

  auto add_common = [&](CLI::App* sub, bool with_out) {
    sub->add_option("--config", config_path, "key = value config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed-override", seed, "replace the config seed");
    if (with_out) sub->add_option("--out", out, "output path");
  };
  auto* gen = app.add_subcommand("gen", "write the synthetic dataset as matrix files");
  add_common(gen, true);
  gen->get_option("--out")->required();
  auto* run = app.add_subcommand("run", "run coded vs uncoded optimizers, emit CSV");
  add_common(run, true);
  auto* verify = app.add_subcommand("verify", "run property checks for a config");
  add_common(verify, false);

  CLI11_PARSE(app, argc, argv);

  try {
    const ExperimentConfig cfg = read_config(config_path, seed);
    if (*gen) return cmd_gen(cfg, out);
    if (*run) return cmd_run(cfg, out);
    return cmd_verify(cfg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::config_parse: return 3;
      case ErrorCode::io: return 4;
      case ErrorCode::invalid_threshold:
      case ErrorCode::invalid_m: return 5;
      default: return 6;
    }
  }
}
