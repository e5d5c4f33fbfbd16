#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cbnn/common.hpp"
#include "cbnn/metric.hpp"

namespace cbnn {
namespace harness {

struct ClusterEnvConfig {
  int m = 4;                      // number of clusters
  int dim = 2;
  double radius = 0.05;           // points land within this ball
  double separation = 0.5;        // minimum distance between centres
  double best_mean = 0.2;         // Bernoulli mean of the cluster's best action
  double other_mean = 0.5;
  std::vector<int> best_actions;  // per cluster; default (i mod K) + 1
};

struct GridStochasticEnvConfig {
  int dim = 2;
  int anchors = 0;                // ground-truth regions; default K
  double best_mean = 0.2;
  double other_mean = 0.5;
  std::string density = "uniform";
};

struct FileReplayEnvConfig {
  std::string path;
};

struct ExperimentConfig {
  std::string environment_kind = "clusters";  // clusters | grid-stochastic | file-replay
  ClusterEnvConfig clusters;
  GridStochasticEnvConfig grid;
  FileReplayEnvConfig replay;
  std::int64_t trials = 1000;
  int actions = 2;
  double c = 1.0;                      // declared approximation of the NN backend
  std::optional<double> rho;           // empty = auto via the parameter schedule
  std::optional<int> q;                // empty = auto; 0 = quantisation off
  std::string nn_backend = "exact";    // exact | grid
  std::uint64_t seed = 1;
  std::string output = "trace.csv";
  std::string replay_out;              // optional export of the full loss stream
  std::vector<std::string> baselines;  // uniform-random, best-fixed-action-hindsight,
                                       // per-cluster-optimal

  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig load(const std::string& path);
};

// One environment draw: the raw context, the comparator (ground-truth
// policy) action, and the full loss vector, of which the learner sees one
// entry.
struct EnvStep {
  metric::Point context;
  int comparator = 1;
  std::vector<double> losses;
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual EnvStep step(Rng& rng) = 0;
  virtual int dim() const = 0;
};

std::unique_ptr<Environment> make_environment(const ExperimentConfig& config);

struct ExperimentSummary {
  std::int64_t trials = 0;
  double learner_cum_loss = 0.0;
  double comparator_cum_loss = 0.0;
  double final_regret = 0.0;
  double uniform_cum_loss = 0.0;
  double uniform_regret = 0.0;
  bool has_uniform = false;
  int best_fixed_action = 0;
  double best_fixed_cum_loss = 0.0;
  bool has_best_fixed = false;
  int phi_comparator = 0;
  double total_learner_seconds = 0.0;
  double first_quarter_regret_rate = 0.0;
  double last_quarter_regret_rate = 0.0;
  int resolved_q = 0;
  double resolved_rho = 0.0;
  std::vector<int> actions_taken;  // for replay checks
};

// Runs the configured experiment, writing the decision trace CSV, a
// .timing.csv sidecar with per-trial learner latencies, and a .config.json
// sidecar with the fully resolved configuration.
ExperimentSummary run_experiment(const ExperimentConfig& config);

struct BenchRow {
  std::int64_t trials = 0;
  int actions = 0;
  double median_seconds = 0.0;
  double p99_seconds = 0.0;
};

// Learner-only per-trial wall times on a synthetic similarity-bandit stream
// (uniform parents, Bernoulli losses); median and p99 over the final
// quartile of trials.
std::vector<BenchRow> bench_timing(const std::vector<std::int64_t>& trial_counts,
                                   int actions, std::uint64_t seed);

std::uint64_t config_hash(const std::string& canonical_json);

}  // namespace harness

namespace verify {

// Named property suites (the acceptance criteria drive the same code).
// Returns true iff the suite passed; per-case diffs go to the log.
bool run_suite(const std::string& name, std::uint64_t seed, std::ostream& log);

const std::vector<std::string>& suite_names();

}  // namespace verify
}  // namespace cbnn
