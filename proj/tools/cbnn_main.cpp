#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cbnn/common.hpp"
#include "cbnn/harness.hpp"

namespace {

std::vector<std::int64_t> parse_trial_list(const std::string& text) {
  std::vector<std::int64_t> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty()) out.push_back(std::stoll(cell));
  }
  if (out.empty()) throw cbnn::ConfigError("bench: empty trial list");
  return out;
}

int run_simulate(const std::string& config_path) {
  const auto config = cbnn::harness::ExperimentConfig::load(config_path);
  const auto summary = cbnn::harness::run_experiment(config);
  std::printf("trace written to %s (%lld trials)\n", config.output.c_str(),
              static_cast<long long>(summary.trials));
  std::printf("final cumulative regret: %.6f (comparator phi = %d)\n",
              summary.final_regret, summary.phi_comparator);
  if (summary.has_uniform) {
    std::printf("uniform-random baseline regret: %.6f\n", summary.uniform_regret);
  }
  if (summary.has_best_fixed) {
    std::printf("best fixed action in hindsight: %d (cumulative loss %.6f)\n",
                summary.best_fixed_action, summary.best_fixed_cum_loss);
  }
  std::printf("learner time: %.3fs total, %.2fus/trial\n",
              summary.total_learner_seconds,
              1e6 * summary.total_learner_seconds / summary.trials);
  return 0;
}

int run_verify(const std::string& suite, std::uint64_t seed) {
  const bool pass = cbnn::verify::run_suite(suite, seed, std::cout);
  std::printf("%s: %s\n", suite.c_str(), pass ? "pass" : "FAIL");
  return pass ? 0 : 1;
}

int run_bench(const std::string& trials, int actions, std::uint64_t seed,
              const std::string& output) {
  const auto rows = cbnn::harness::bench_timing(parse_trial_list(trials), actions, seed);
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!output.empty()) {
    file.open(output);
    if (!file) throw cbnn::IoError("cannot write " + output);
    out = &file;
  }
  *out << "trials,actions,median_seconds,p99_seconds\n";
  for (const auto& row : rows) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%lld,%d,%.9g,%.9g\n",
                  static_cast<long long>(row.trials), row.actions, row.median_seconds,
                  row.p99_seconds);
    *out << buf;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cbnn: nearest-neighbour contextual bandits with reference oracles"};
  app.require_subcommand(1);

  std::string config_path;
  auto* simulate = app.add_subcommand("simulate", "run a configured experiment");
  simulate->add_option("--config", config_path, "JSON experiment config")->required();

  std::string suite;
  std::uint64_t seed = 1;
  auto* verify = app.add_subcommand("verify", "run a named verification suite");
  verify->add_option("--suite", suite, "one of eq4, thmC1, exp4, lemmaE1, tst-height, nu, phi-cluster")
      ->required();
  verify->add_option("--seed", seed, "suite seed");

  std::string trials = "1024";
  int actions = 16;
  std::uint64_t bench_seed = 1;
  std::string bench_out;
  auto* bench = app.add_subcommand("bench", "measure per-trial learner latency");
  bench->add_option("--trials", trials, "comma-separated horizon list");
  bench->add_option("--actions", actions, "number of actions (power of two)");
  bench->add_option("--seed", bench_seed, "bench seed");
  bench->add_option("--output", bench_out, "CSV output path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return run_simulate(config_path);
    if (verify->parsed()) return run_verify(suite, seed);
    if (bench->parsed()) return run_bench(trials, actions, bench_seed, bench_out);
  } catch (const cbnn::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const cbnn::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 2;
  } catch (const cbnn::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
