// Acceptance suite: every criterion prints one pass/fail line; the binary
// exits nonzero if any fails. Criteria 1-7 drive the shared verification
// suites at their stated scales; 8 and 9 run the regret and timing checks.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "cbnn/harness.hpp"

namespace {

int failures = 0;

void report(int index, const std::string& name, bool pass, double seconds,
            const std::string& detail = {}) {
  std::printf("[%d] %-12s %s  (%.2fs)%s%s\n", index, name.c_str(),
              pass ? "PASS" : "FAIL", seconds, detail.empty() ? "" : "  ",
              detail.c_str());
  if (!pass) ++failures;
}

double run_suite_timed(const std::string& suite, std::uint64_t seed, bool& pass,
                       std::string& log_text) {
  std::ostringstream log;
  const auto t0 = std::chrono::steady_clock::now();
  pass = cbnn::verify::run_suite(suite, seed, log);
  const auto t1 = std::chrono::steady_clock::now();
  log_text = log.str();
  return std::chrono::duration<double>(t1 - t0).count();
}

void criterion_suite(int index, const std::string& suite, std::uint64_t seed,
                     double budget_seconds = 0.0) {
  bool pass = false;
  std::string log;
  const double seconds = run_suite_timed(suite, seed, pass, log);
  std::string detail;
  if (budget_seconds > 0.0 && seconds > budget_seconds) {
    pass = false;
    detail = "over the " + std::to_string(budget_seconds) + "s budget";
  }
  report(index, suite, pass, seconds, detail);
  if (!pass && !log.empty()) std::fputs(log.c_str(), stdout);
}

void criterion_regret() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::string detail;
  const auto dir = std::filesystem::temp_directory_path() / "cbnn-acceptance";
  std::filesystem::create_directories(dir);
  for (std::uint64_t seed = 1; seed <= 5 && pass; ++seed) {
    cbnn::harness::ExperimentConfig cfg;
    cfg.environment_kind = "clusters";
    cfg.clusters.m = 4;
    cfg.clusters.dim = 2;
    cfg.clusters.radius = 0.05;
    cfg.clusters.separation = 0.5;
    cfg.clusters.best_mean = 0.2;
    cfg.clusters.other_mean = 0.5;  // gap 0.3
    cfg.trials = 50000;
    cfg.actions = 4;
    cfg.seed = seed;
    cfg.baselines = {"uniform-random", "per-cluster-optimal"};
    cfg.output = (dir / ("regret-" + std::to_string(seed) + ".csv")).string();
    const auto summary = cbnn::harness::run_experiment(cfg);

    if (!(summary.final_regret <= 0.5 * summary.uniform_regret)) {
      pass = false;
      detail = "seed " + std::to_string(seed) + ": regret " +
               std::to_string(summary.final_regret) + " vs uniform " +
               std::to_string(summary.uniform_regret);
    }
    if (!(summary.last_quarter_regret_rate <=
          0.5 * summary.first_quarter_regret_rate)) {
      pass = false;
      detail = "seed " + std::to_string(seed) + ": quarter rates " +
               std::to_string(summary.first_quarter_regret_rate) + " -> " +
               std::to_string(summary.last_quarter_regret_rate);
    }
  }
  const auto t1 = std::chrono::steady_clock::now();
  report(8, "regret", pass, std::chrono::duration<double>(t1 - t0).count(), detail);
}

// Median-latency ratio between two configurations, measured back-to-back
// within each repetition (pairing cancels machine-load drift) and taken as
// the median across repetitions.
double stable_ratio(std::int64_t trials_hi, int actions_hi, std::int64_t trials_lo,
                    int actions_lo, int reps) {
  std::vector<double> ratios;
  for (int rep = 0; rep < reps; ++rep) {
    const double lo =
        cbnn::harness::bench_timing({trials_lo}, actions_lo, 5 + rep)[0].median_seconds;
    const double hi =
        cbnn::harness::bench_timing({trials_hi}, actions_hi, 5 + rep)[0].median_seconds;
    ratios.push_back(hi / lo);
  }
  std::sort(ratios.begin(), ratios.end());
  return ratios[ratios.size() / 2];
}

void criterion_timing() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::string detail;

  const double horizon_ratio = stable_ratio(1 << 17, 16, 1 << 10, 16, 3);
  if (!(horizon_ratio <= 8.0)) {
    pass = false;
    detail = "T ratio " + std::to_string(horizon_ratio);
  }

  const double action_ratio = stable_ratio(1 << 14, 256, 1 << 14, 2, 5);
  if (!(action_ratio <= 10.0)) {
    pass = false;
    detail += std::string(detail.empty() ? "" : "; ") + "K ratio " +
              std::to_string(action_ratio);
  }

  const auto t1 = std::chrono::steady_clock::now();
  char buf[128];
  std::snprintf(buf, sizeof buf, "T-ratio %.2f (<= 8), K-ratio %.2f (<= 10)",
                horizon_ratio, action_ratio);
  report(9, "timing", pass, std::chrono::duration<double>(t1 - t0).count(),
         detail.empty() ? buf : detail);
}

}  // namespace

int main() {
  std::printf("cbnn acceptance suite\n");
  criterion_suite(1, "eq4", 1, 30.0);
  criterion_suite(2, "thmC1", 1, 10.0);
  criterion_suite(3, "exp4", 1);
  criterion_suite(4, "lemmaE1", 1);
  criterion_suite(5, "nu", 1);
  criterion_suite(6, "tst-height", 1);
  criterion_suite(7, "phi-cluster", 1);
  criterion_regret();
  criterion_timing();
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
