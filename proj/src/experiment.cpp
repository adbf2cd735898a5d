#include "byzcode/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "byzcode/io.hpp"

namespace byzcode {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(int line, const std::string& msg) {
  throw Error(ErrorCode::config_parse, "line " + std::to_string(line) + ": " + msg);
}

long long parse_int(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  bad(line, "expected an integer, got '" + v + "'");
}

double parse_real(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used == v.size() && std::isfinite(x)) return x;
  } catch (const std::exception&) {
  }
  bad(line, "expected a number, got '" + v + "'");
}

std::vector<std::string> split(const std::string& v, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string part;
  while (std::getline(ss, part, sep)) out.push_back(trim(part));
  return out;
}

std::vector<int> parse_t_list(const std::string& v, int line) {
  std::vector<int> out;
  const auto dots = v.find("..");
  if (dots != std::string::npos) {
    const int lo = static_cast<int>(parse_int(trim(v.substr(0, dots)), line));
    const int hi = static_cast<int>(parse_int(trim(v.substr(dots + 2)), line));
    if (hi < lo) bad(line, "empty range");
    for (int t = lo; t <= hi; ++t) out.push_back(t);
    return out;
  }
  for (const auto& part : split(v, ',')) out.push_back(static_cast<int>(parse_int(part, line)));
  if (out.empty()) bad(line, "empty t list");
  return out;
}

double relative_gap(const Vector& a, const Vector& b) {
  const double scale = std::max(b.norm(), 1e-300);
  return (a - b).norm() / scale;
}

std::string adversary_label(const AdversarySpec& adv) {
  std::string label = to_string(adv.kind);
  if (adv.selection == TargetSelection::per_round_random) label += ":per-round-random";
  return label;
}

bool is_pgd(Task task) { return task != Task::cd && task != Task::sgd; }

Index cd_tau(double fraction, Index p2) {
  return std::clamp<Index>(static_cast<Index>(std::ceil(fraction * static_cast<double>(p2) - 1e-12)), 1, p2);
}

}  // namespace

Dataset gen_dataset(Index n, Index d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw Error(ErrorCode::dimension_mismatch, "n and d must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Dataset ds;
  ds.X.resize(n, d);
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < n; ++i) ds.X(i, j) = gauss(rng);
  }
  const Index nnz = (d + 2) / 3;
  std::vector<Index> coords(d);
  for (Index j = 0; j < d; ++j) coords[j] = j;
  std::shuffle(coords.begin(), coords.end(), rng);
  ds.theta = Vector::Zero(d);
  for (Index c = 0; c < nnz; ++c) {
    double v = 0.0;
    while (v == 0.0) v = 2.0 * gauss(rng);
    ds.theta(coords[c]) = v;
  }
  ds.y = ds.X * ds.theta;
  for (Index i = 0; i < n; ++i) ds.y(i) += gauss(rng);
  return ds;
}

std::string to_string(Task task) {
  switch (task) {
    case Task::gd: return "gd";
    case Task::lasso: return "lasso";
    case Task::ridge: return "ridge";
    case Task::box: return "box";
    case Task::logistic: return "logistic";
    case Task::cd: return "cd";
    case Task::sgd: return "sgd";
  }
  return "gd";
}

Task parse_task(const std::string& name) {
  for (Task t : {Task::gd, Task::lasso, Task::ridge, Task::box, Task::logistic, Task::cd, Task::sgd}) {
    if (to_string(t) == name) return t;
  }
  throw Error(ErrorCode::config_parse, "unknown task '" + name + "'");
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::set<std::string> seen;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.resize(hash);
    const std::string text = trim(raw);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) bad(line, "expected key = value");
    const std::string key = trim(text.substr(0, eq));
    const std::string val = trim(text.substr(eq + 1));
    if (val.empty()) bad(line, "missing value for " + key);
    if (!seen.insert(key).second) bad(line, "duplicate key " + key);
    try {
      if (key == "m") {
        c.m = static_cast<int>(parse_int(val, line));
      } else if (key == "t") {
        c.t = parse_t_list(val, line);
      } else if (key == "s") {
        c.s = static_cast<int>(parse_int(val, line));
      } else if (key == "seed") {
        const long long s = parse_int(val, line);
        if (s < 0) bad(line, "seed must be nonnegative");
        c.seed = static_cast<std::uint64_t>(s);
      } else if (key == "adversary") {
        const auto parts = split(val, ':');
        c.adversary.kind = parse_adversary_kind(parts[0]);
        if (parts.size() == 2 && parts[1] == "per-round-random") {
          c.adversary.selection = TargetSelection::per_round_random;
        } else if (parts.size() == 2 && parts[1] == "fixed-set") {
          c.adversary.selection = TargetSelection::fixed_set;
        } else if (parts.size() != 1) {
          bad(line, "adversary selection must be fixed-set or per-round-random");
        }
      } else if (key == "sigma") {
        c.adversary.sigma = parse_real(val, line);
      } else if (key == "straggler_policy") {
        c.straggler_policy = parse_straggler_policy(val);
      } else if (key == "dataset") {
        c.dataset = val;
      } else if (key == "task") {
        c.task = parse_task(val);
      } else if (key == "iterations") {
        c.iterations = static_cast<int>(parse_int(val, line));
        if (c.iterations < 0) bad(line, "iterations must be nonnegative");
      } else if (key == "tau") {
        c.tau.clear();
        for (const auto& part : split(val, ',')) {
          const double f = parse_real(part, line);
          if (!(f > 0.0 && f <= 1.0)) bad(line, "tau fractions must lie in (0, 1]");
          c.tau.push_back(f);
        }
      } else if (key == "step_size") {
        c.step_size = parse_real(val, line);
        if (c.step_size < 0.0) bad(line, "step_size must be nonnegative");
      } else if (key == "lambda") {
        c.lambda = parse_real(val, line);
        if (c.lambda < 0.0) bad(line, "lambda must be nonnegative");
      } else {
        bad(line, "unknown key '" + key + "'");
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::config_parse && std::string(e.what()).find("line ") != std::string::npos) throw;
      bad(line, e.what());
    }
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::io, "cannot open config " + path);
  return parse_config(f);
}

Dataset load_dataset(const ExperimentConfig& config) {
  Dataset ds;
  const std::string prefix = "synthetic:";
  if (config.dataset.rfind(prefix, 0) == 0) {
    const std::string dims = config.dataset.substr(prefix.size());
    const auto x = dims.find('x');
    if (x == std::string::npos) throw Error(ErrorCode::config_parse, "dataset must be synthetic:NxD");
    long long n = 0, d = 0;
    try {
      n = std::stoll(dims.substr(0, x));
      d = std::stoll(dims.substr(x + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::config_parse, "dataset must be synthetic:NxD");
    }
    ds = gen_dataset(n, d, config.seed);
  } else {
    const std::filesystem::path dir(config.dataset);
    ds.X = load_matrix((dir / "X.txt").string());
    const Matrix y = load_matrix((dir / "y.txt").string());
    if (y.cols() != 1 || y.rows() != ds.X.rows()) {
      throw Error(ErrorCode::io, "y.txt must be an n x 1 matrix");
    }
    ds.y = y.col(0);
  }
  if (config.task == Task::logistic) {
    ds.y = ds.y.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
  }
  return ds;
}

ModelSpec model_for(const ExperimentConfig& config, const Matrix& X) {
  ModelSpec model;
  switch (config.task) {
    case Task::lasso: model.reg = Regularizer::l1(config.lambda); break;
    case Task::ridge: model.reg = Regularizer::l2(config.lambda); break;
    case Task::box: model.reg = Regularizer::box(-config.lambda, config.lambda); break;
    case Task::logistic: model.loss = Loss::logistic; break;
    default: break;
  }
  model.step.constant = config.step_size;
  model.validate();
  return with_default_step(model, X);
}

ClusterConfig cluster_config(const ExperimentConfig& config, int t) {
  ClusterConfig cc;
  cc.m = config.m;
  cc.t = t;
  cc.s = config.s;
  cc.seed = config.seed;
  cc.adversary = config.adversary;
  cc.straggler_policy = config.straggler_policy;
  cc.validate();
  return cc;
}

const std::string& csv_header() {
  static const std::string header =
      "task,m,t,s,adversary,iteration,max-worker-flops,master-flops,wall-time-worker-max,"
      "wall-time-master,objective-value,trajectory-deviation-vs-serial";
  return header;
}

void write_csv(std::ostream& out, const std::vector<ExperimentRecord>& records) {
  out << csv_header() << '\n';
  for (const auto& r : records) {
    out << r.task << ',' << r.m << ',' << r.t << ',' << r.s << ',' << r.adversary << ','
        << r.iteration << ',' << r.max_worker_flops << ',' << r.master_flops << ','
        << format_real(r.wall_time_worker_max) << ',' << format_real(r.wall_time_master) << ','
        << format_real(r.objective_value) << ',' << format_real(r.trajectory_deviation) << '\n';
  }
}

std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& config) {
  const Dataset ds = load_dataset(config);
  const ModelSpec model = model_for(config, ds.X);
  const Vector w0 = Vector::Zero(ds.X.cols());
  std::vector<ExperimentRecord> records;

  for (int t : config.t) {
    const ClusterConfig cc = cluster_config(config, t);
    std::vector<double> taus = config.task == Task::cd ? config.tau : std::vector<double>{0.0};
    for (double frac : taus) {
      Cluster cluster(cc);
      EncodedProblem problem = encode_problem(cluster, ds.X, ds.y);
      ExperimentRecord base;
      base.task = to_string(config.task);
      base.m = cc.m;
      base.t = t;
      base.s = cc.s;
      base.adversary = adversary_label(cc.adversary);

      GlmState state = GlmState::start(w0);
      std::vector<Vector> serial;
      CdCodebook codebook;
      Index tau = 0;
      std::mt19937_64 rng(config.seed ^ 0x5eedULL);
      std::vector<Index> indices;
      if (config.task == Task::cd) {
        codebook = make_codebook(problem, ds.X, w0);
        tau = cd_tau(frac, codebook.blocks());
        serial = serial_cd(ds.X, ds.y, model, w0, codebook.param.q, tau, config.iterations);
        char label[32];
        std::snprintf(label, sizeof label, "cd:%g", frac);
        base.task = label;
      } else if (is_pgd(config.task)) {
        serial = serial_pgd(ds.X, ds.y, model, w0, config.iterations);
      } else {
        // sgd_step draws one index per step from rng; replay the same draws
        std::mt19937_64 peek = rng;
        for (int it = 0; it < config.iterations; ++it) {
          indices.push_back(std::uniform_int_distribution<Index>(0, problem.n - 1)(peek));
        }
        serial = serial_sgd(ds.X, ds.y, model, w0, indices);
      }

      for (int it = 0; it < config.iterations; ++it) {
        IterationStats stats;
        if (config.task == Task::cd) {
          state = cd_iteration(problem, codebook, state,
                               round_robin_blocks(codebook.blocks(), tau, it), model, &stats);
        } else if (config.task == Task::sgd) {
          state = sgd_step(problem, state, model, rng, &stats);
        } else {
          state = pgd_step(problem, state, model, &stats);
        }
        const Vector& ref = serial[it + 1];
        ExperimentRecord rec = base;
        rec.iteration = static_cast<std::size_t>(it) + 1;
        rec.max_worker_flops = stats.max_worker_flops;
        rec.master_flops = stats.master_flops;
        rec.wall_time_worker_max = stats.worker_seconds;
        rec.wall_time_master = stats.master_seconds;
        rec.objective_value = objective(model, ds.X, ds.y, state.w);
        rec.trajectory_deviation = relative_gap(state.w, ref);
        records.push_back(rec);
      }
    }
  }
  return records;
}

std::vector<CheckResult> verify_config(const ExperimentConfig& config) {
  std::vector<CheckResult> checks;
  const Dataset ds = load_dataset(config);
  const ModelSpec model = model_for(config, ds.X);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss;

  for (int t : config.t) {
    const std::string tag = " t=" + std::to_string(t);
    const ClusterConfig cc = cluster_config(config, t);
    Cluster cluster(cc);
    EncodedProblem problem = encode_problem(cluster, ds.X, ds.y);

    {
      CheckResult r{"coded X v equals X v, corrupt set localized" + tag, true, "25 rounds"};
      const auto& shares = cluster.store("x");
      for (int trial = 0; trial < 25 && r.passed; ++trial) {
        Vector v(problem.d);
        for (Index i = 0; i < v.size(); ++i) v(i) = gauss(rng);
        auto responses = cluster.run_round(v, [&shares](int i, const Vector& req, OpCounter* ops) {
          return worker_product(shares[i], req, ops);
        });
        DecodeOptions opt;
        opt.seed = cluster.decode_seed();
        opt.scale = cluster.coeff_bound(BasisVariant::rref) * cluster.source_norm("x") * v.norm();
        const DecodeOutcome out =
            decode(responses, cluster.locator(), cluster.rref_basis(), shares[0].geometry, opt);
        const double gap = relative_gap(out.product, ds.X * v);
        if (gap > 1e-8 || out.corrupt != cluster.last_selection().corrupt) {
          r.passed = false;
          r.detail = "trial " + std::to_string(trial) + " gap " + format_real(gap);
        }
      }
      checks.push_back(r);
    }
    {
      CheckResult r{"coded gradient equals serial gradient" + tag, true, ""};
      Vector w(problem.d);
      for (Index i = 0; i < w.size(); ++i) w(i) = gauss(rng);
      GlmState st = GlmState::start(w);
      const Vector g = coded_gradient(problem, model.loss, st);
      const Vector ref = ds.X.transpose() * loss_derivative(model.loss, ds.X * w, ds.y);
      const double gap = relative_gap(g, ref);
      r.passed = gap < 1e-8;
      r.detail = "relative gap " + format_real(gap);
      checks.push_back(r);
    }
    {
      ExperimentConfig short_run = config;
      short_run.t = {t};
      short_run.iterations = std::min(config.iterations, 10);
      if (config.task == Task::cd) short_run.tau = {config.tau.front()};
      CheckResult r{"trajectory matches uncoded run" + tag, true, ""};
      double worst = 0.0;
      for (const auto& rec : run_experiment(short_run)) worst = std::max(worst, rec.trajectory_deviation);
      r.passed = worst < 1e-6;
      r.detail = "max deviation " + format_real(worst);
      checks.push_back(r);
    }
  }
  return checks;
}

}  // namespace byzcode
