#include "cbnn/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cbnn/canprop.hpp"
#include "cbnn/oracle.hpp"
#include "json.hpp"

namespace cbnn {
namespace harness {

using nlohmann::json;

namespace {

constexpr std::uint64_t kLearnerSeedSalt = 0x517cc1b727220a95ull;
constexpr std::uint64_t kUniformSeedSalt = 0x2545f4914f6cdd1dull;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ensure_parent_dir(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
    if (ec) throw IoError("cannot create directory " + parent.string());
  }
}

// Uniform draw from the ball of the given radius (gaussian direction,
// radius scaled by U^(1/d)), clipped to the unit cube.
metric::Point ball_point(const metric::Point& centre, double radius, Rng& rng) {
  const int d = static_cast<int>(centre.size());
  metric::Point dir(d);
  double norm = 0.0;
  for (int i = 0; i < d; ++i) {
    const double u1 = std::max(rng.uniform01(), 1e-12);
    const double u2 = rng.uniform01();
    dir[i] = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    norm += dir[i] * dir[i];
  }
  norm = std::max(std::sqrt(norm), 1e-12);
  const double r = radius * std::pow(rng.uniform01(), 1.0 / d);
  metric::Point out(d);
  for (int i = 0; i < d; ++i) {
    out[i] = std::min(1.0, std::max(0.0, centre[i] + dir[i] / norm * r));
  }
  return out;
}

class ClusterEnv : public Environment {
 public:
  ClusterEnv(const ClusterEnvConfig& cfg, int actions) : cfg_(cfg), actions_(actions) {
    if (cfg_.m < 1) throw ConfigError("clusters: need at least one cluster");
    if (cfg_.dim < 1) throw ConfigError("clusters: dimension must be positive");
    if (!(cfg_.best_mean >= 0 && cfg_.best_mean <= 1) ||
        !(cfg_.other_mean >= 0 && cfg_.other_mean <= 1)) {
      throw ConfigError("clusters: loss means must lie in [0, 1]");
    }
    best_ = cfg_.best_actions;
    if (best_.empty()) {
      for (int i = 0; i < cfg_.m; ++i) best_.push_back(i % actions_ + 1);
    }
    if (static_cast<int>(best_.size()) != cfg_.m) {
      throw ConfigError("clusters: one best action per cluster");
    }
    for (int a : best_) {
      if (a < 1 || a > actions_) throw ConfigError("clusters: best action out of range");
    }
    centres_ = layout_centres();
  }

  EnvStep step(Rng& rng) override {
    const int cluster = static_cast<int>(rng.below(cfg_.m));
    EnvStep out;
    out.context = ball_point(centres_[cluster], cfg_.radius, rng);
    out.comparator = best_[cluster];
    out.losses.resize(actions_);
    for (int a = 1; a <= actions_; ++a) {
      const double mean = a == best_[cluster] ? cfg_.best_mean : cfg_.other_mean;
      out.losses[a - 1] = rng.uniform01() < mean ? 1.0 : 0.0;
    }
    return out;
  }

  int dim() const override { return cfg_.dim; }

 private:
  ClusterEnvConfig cfg_;
  int actions_;
  std::vector<int> best_;
  std::vector<metric::Point> centres_;

  std::vector<metric::Point> layout_centres() const {
    std::vector<metric::Point> centres;
    if (cfg_.dim == 1) {
      const double lo = cfg_.radius, hi = 1.0 - cfg_.radius;
      for (int i = 0; i < cfg_.m; ++i) {
        const double x = cfg_.m == 1 ? 0.5 : lo + (hi - lo) * i / (cfg_.m - 1);
        centres.push_back({x});
      }
    } else {
      // Evenly spaced on a circle in the first two coordinates.
      const double ring = 0.4;
      for (int i = 0; i < cfg_.m; ++i) {
        metric::Point c(cfg_.dim, 0.5);
        const double a = 6.283185307179586 * i / cfg_.m;
        c[0] = 0.5 + ring * std::cos(a);
        c[1] = 0.5 + ring * std::sin(a);
        centres.push_back(c);
      }
    }
    for (std::size_t i = 0; i < centres.size(); ++i) {
      for (std::size_t k = i + 1; k < centres.size(); ++k) {
        if (metric::euclidean(centres[i], centres[k]) < cfg_.separation) {
          throw ConfigError("clusters: layout cannot honour the requested separation");
        }
      }
    }
    return centres;
  }
};

class GridStochasticEnv : public Environment {
 public:
  GridStochasticEnv(const GridStochasticEnvConfig& cfg, int actions, std::uint64_t seed)
      : cfg_(cfg), actions_(actions) {
    if (cfg_.dim < 1) throw ConfigError("grid-stochastic: dimension must be positive");
    if (cfg_.density != "uniform") {
      throw ConfigError("grid-stochastic: unknown density " + cfg_.density);
    }
    const int anchors = cfg_.anchors > 0 ? cfg_.anchors : actions_;
    Rng rng(seed ^ 0xa0761d6478bd642full);  // ground truth fixed by the seed
    for (int i = 0; i < anchors; ++i) {
      metric::Point p(cfg_.dim);
      for (auto& v : p) v = rng.uniform01();
      anchors_.push_back(std::move(p));
    }
  }

  EnvStep step(Rng& rng) override {
    EnvStep out;
    out.context.resize(cfg_.dim);
    for (auto& v : out.context) v = rng.uniform01();
    out.comparator = label(out.context);
    out.losses.resize(actions_);
    for (int a = 1; a <= actions_; ++a) {
      const double mean = a == out.comparator ? cfg_.best_mean : cfg_.other_mean;
      out.losses[a - 1] = rng.uniform01() < mean ? 1.0 : 0.0;
    }
    return out;
  }

  int dim() const override { return cfg_.dim; }

 private:
  GridStochasticEnvConfig cfg_;
  int actions_;
  std::vector<metric::Point> anchors_;

  int label(const metric::Point& x) const {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < anchors_.size(); ++i) {
      const double d = metric::euclidean(x, anchors_[i]);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    return best % actions_ + 1;
  }
};

class FileReplayEnv : public Environment {
 public:
  explicit FileReplayEnv(const FileReplayEnvConfig& cfg) {
    std::ifstream in(cfg.path);
    if (!in) throw IoError("cannot open replay file " + cfg.path);
    std::string line;
    if (!std::getline(in, line) ||
        std::sscanf(line.c_str(), "# cbnn-replay v1 dim=%d actions=%d", &dim_,
                    &actions_) != 2) {
      throw IoError("replay file lacks the cbnn-replay header");
    }
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      EnvStep step;
      std::stringstream ss(line);
      std::string cell;
      for (int i = 0; i < dim_; ++i) {
        if (!std::getline(ss, cell, ',')) throw IoError("short replay row");
        step.context.push_back(std::stod(cell));
      }
      if (!std::getline(ss, cell, ',')) throw IoError("short replay row");
      step.comparator = std::stoi(cell);
      for (int a = 0; a < actions_; ++a) {
        if (!std::getline(ss, cell, ',')) throw IoError("short replay row");
        step.losses.push_back(std::stod(cell));
      }
      steps_.push_back(std::move(step));
    }
  }

  EnvStep step(Rng&) override {
    if (next_ >= steps_.size()) throw IoError("replay file exhausted");
    return steps_[next_++];
  }

  int dim() const override { return dim_; }

 private:
  int dim_ = 0;
  int actions_ = 0;
  std::vector<EnvStep> steps_;
  std::size_t next_ = 0;
};

}  // namespace

std::unique_ptr<Environment> make_environment(const ExperimentConfig& config) {
  if (config.environment_kind == "clusters") {
    return std::make_unique<ClusterEnv>(config.clusters, config.actions);
  }
  if (config.environment_kind == "grid-stochastic") {
    return std::make_unique<GridStochasticEnv>(config.grid, config.actions, config.seed);
  }
  if (config.environment_kind == "file-replay") {
    return std::make_unique<FileReplayEnv>(config.replay);
  }
  throw ConfigError("unknown environment kind " + config.environment_kind);
}

std::string ExperimentConfig::to_json() const {
  json env;
  env["kind"] = environment_kind;
  if (environment_kind == "clusters") {
    env["m"] = clusters.m;
    env["dim"] = clusters.dim;
    env["radius"] = clusters.radius;
    env["separation"] = clusters.separation;
    env["best_mean"] = clusters.best_mean;
    env["other_mean"] = clusters.other_mean;
    if (!clusters.best_actions.empty()) env["best_actions"] = clusters.best_actions;
  } else if (environment_kind == "grid-stochastic") {
    env["dim"] = grid.dim;
    env["anchors"] = grid.anchors;
    env["best_mean"] = grid.best_mean;
    env["other_mean"] = grid.other_mean;
    env["density"] = grid.density;
  } else if (environment_kind == "file-replay") {
    env["path"] = replay.path;
  }
  json j;
  j["environment"] = env;
  j["trials"] = trials;
  j["actions"] = actions;
  j["c"] = c;
  j["rho"] = rho ? json(*rho) : json("auto");
  j["q"] = q ? (*q == 0 ? json("off") : json(*q)) : json("auto");
  j["nn_backend"] = nn_backend;
  j["seed"] = seed;
  j["output"] = output;
  if (!replay_out.empty()) j["replay_out"] = replay_out;
  j["baselines"] = baselines;
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    const auto& env = j.at("environment");
    cfg.environment_kind = env.at("kind").get<std::string>();
    if (cfg.environment_kind == "clusters") {
      cfg.clusters.m = env.value("m", cfg.clusters.m);
      cfg.clusters.dim = env.value("dim", cfg.clusters.dim);
      cfg.clusters.radius = env.value("radius", cfg.clusters.radius);
      cfg.clusters.separation = env.value("separation", cfg.clusters.separation);
      cfg.clusters.best_mean = env.value("best_mean", cfg.clusters.best_mean);
      cfg.clusters.other_mean = env.value("other_mean", cfg.clusters.other_mean);
      if (env.contains("best_actions")) {
        cfg.clusters.best_actions = env["best_actions"].get<std::vector<int>>();
      }
    } else if (cfg.environment_kind == "grid-stochastic") {
      cfg.grid.dim = env.value("dim", cfg.grid.dim);
      cfg.grid.anchors = env.value("anchors", cfg.grid.anchors);
      cfg.grid.best_mean = env.value("best_mean", cfg.grid.best_mean);
      cfg.grid.other_mean = env.value("other_mean", cfg.grid.other_mean);
      cfg.grid.density = env.value("density", cfg.grid.density);
    } else if (cfg.environment_kind == "file-replay") {
      cfg.replay.path = env.at("path").get<std::string>();
    } else {
      throw ConfigError("unknown environment kind " + cfg.environment_kind);
    }
    cfg.trials = j.at("trials").get<std::int64_t>();
    cfg.actions = j.at("actions").get<int>();
    cfg.c = j.value("c", 1.0);
    if (j.contains("rho") && !j["rho"].is_string()) {
      cfg.rho = j["rho"].get<double>();
    }
    if (j.contains("q")) {
      if (j["q"].is_string()) {
        const auto s = j["q"].get<std::string>();
        if (s == "off") {
          cfg.q = 0;
        } else if (s != "auto") {
          throw ConfigError("q must be a number, \"auto\" or \"off\"");
        }
      } else {
        cfg.q = j["q"].get<int>();
      }
    }
    cfg.nn_backend = j.value("nn_backend", std::string("exact"));
    cfg.seed = j.value("seed", std::uint64_t{1});
    cfg.output = j.value("output", std::string("trace.csv"));
    cfg.replay_out = j.value("replay_out", std::string());
    if (j.contains("baselines")) {
      cfg.baselines = j["baselines"].get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  if (cfg.trials < 2) throw ConfigError("config: trials must be at least 2");
  if (cfg.nn_backend != "exact" && cfg.nn_backend != "grid") {
    throw ConfigError("config: nn_backend must be exact or grid");
  }
  for (const auto& b : cfg.baselines) {
    if (b != "uniform-random" && b != "best-fixed-action-hindsight" &&
        b != "per-cluster-optimal") {
      throw ConfigError("config: unknown baseline " + b);
    }
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::uint64_t config_hash(const std::string& canonical_json) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : canonical_json) {
    h = (h ^ ch) * 1099511628211ull;
  }
  return h;
}

ExperimentSummary run_experiment(const ExperimentConfig& config) {
  auto env = make_environment(config);
  const int dim = env->dim();
  const auto trials = config.trials;
  const int actions = config.actions;

  int q = 0;
  double rho = 1.0;
  if (config.q && config.rho) {
    q = *config.q;
    rho = *config.rho;
  } else {
    const auto [auto_q, auto_rho] = metric::default_params(trials, actions, dim);
    q = config.q ? *config.q : auto_q;
    rho = config.rho ? *config.rho : auto_rho;
  }
  if (!(rho > 0.0)) throw ConfigError("config: rho must be positive");
  if (q < 0) throw ConfigError("config: q must be nonnegative");

  const bool want_uniform =
      std::find(config.baselines.begin(), config.baselines.end(), "uniform-random") !=
      config.baselines.end();
  const bool want_best_fixed =
      std::find(config.baselines.begin(), config.baselines.end(),
                "best-fixed-action-hindsight") != config.baselines.end();

  Learner learner(static_cast<int>(trials), actions, rho,
                  config.seed ^ kLearnerSeedSalt);
  metric::MetricStore store(dim, config.nn_backend == "grid"
                                     ? metric::NnBackend::kGridBuckets
                                     : metric::NnBackend::kExactScan);
  std::optional<metric::GridQuantiser> quantiser;
  if (q > 0) quantiser.emplace(q, dim);

  Rng env_rng(config.seed);
  Rng uniform_rng(config.seed ^ kUniformSeedSalt);

  ExperimentSummary sum;
  sum.trials = trials;
  sum.resolved_q = q;
  sum.resolved_rho = rho;
  sum.has_uniform = want_uniform;
  sum.has_best_fixed = want_best_fixed;

  struct Row {
    metric::Point context;
    int action;
    double loss;
    double cum_loss;
    int comparator;
    double comp_loss;
    double comp_cum;
    double uniform_cum;
    double seconds;
  };
  std::vector<Row> rows;
  rows.reserve(trials);
  std::vector<int> parents(trials, 0);
  std::vector<int> comparator_actions(trials, 0);
  std::vector<double> per_action_cum(actions, 0.0);
  std::vector<EnvStep> replay_rows;
  if (!config.replay_out.empty()) replay_rows.reserve(trials);

  double cum_loss = 0.0, comp_cum = 0.0, uniform_cum = 0.0;
  using clock = std::chrono::steady_clock;

  for (std::int64_t t = 1; t <= trials; ++t) {
    EnvStep step = env->step(env_rng);
    if (static_cast<int>(step.losses.size()) != actions) {
      throw ConfigError("environment produced a loss vector of the wrong width");
    }
    metric::Point x = quantiser ? quantiser->quantise(step.context) : step.context;
    std::optional<int> parent;
    if (t > 1) {
      const auto nn = store.query(x);
      parent = nn.trial;
      parents[t - 1] = nn.trial;
    }
    store.insert(x, static_cast<int>(t));

    const auto t0 = clock::now();
    const int action = learner.choose_action(parent);
    const double loss = step.losses[action - 1];
    learner.feedback(loss);
    const auto t1 = clock::now();
    const double seconds = std::chrono::duration<double>(t1 - t0).count();

    const double comp_loss = step.losses[step.comparator - 1];
    cum_loss += loss;
    comp_cum += comp_loss;
    comparator_actions[t - 1] = step.comparator;
    for (int a = 0; a < actions; ++a) per_action_cum[a] += step.losses[a];
    if (want_uniform) {
      const int ua = 1 + static_cast<int>(uniform_rng.below(actions));
      uniform_cum += step.losses[ua - 1];
    }
    sum.total_learner_seconds += seconds;
    sum.actions_taken.push_back(action);
    rows.push_back({std::move(x), action, loss, cum_loss, step.comparator, comp_loss,
                    comp_cum, uniform_cum, seconds});
    if (!config.replay_out.empty()) replay_rows.push_back(std::move(step));
  }

  sum.learner_cum_loss = cum_loss;
  sum.comparator_cum_loss = comp_cum;
  sum.final_regret = cum_loss - comp_cum;
  sum.uniform_cum_loss = uniform_cum;
  sum.uniform_regret = uniform_cum - comp_cum;
  sum.phi_comparator = oracle::policy_complexity(comparator_actions, parents);
  if (want_best_fixed) {
    sum.best_fixed_action =
        1 + static_cast<int>(std::min_element(per_action_cum.begin(),
                                              per_action_cum.end()) -
                             per_action_cum.begin());
    sum.best_fixed_cum_loss = per_action_cum[sum.best_fixed_action - 1];
  }

  const std::int64_t quarter = std::max<std::int64_t>(1, trials / 4);
  double first = 0.0, last = 0.0;
  for (std::int64_t t = 0; t < quarter; ++t) {
    first += rows[t].loss - rows[t].comp_loss;
  }
  for (std::int64_t t = trials - quarter; t < trials; ++t) {
    last += rows[t].loss - rows[t].comp_loss;
  }
  sum.first_quarter_regret_rate = first / quarter;
  sum.last_quarter_regret_rate = last / quarter;

  // Decision trace (deterministic bytes), timing sidecar, resolved config.
  const std::string resolved = [&] {
    ExperimentConfig r = config;
    r.q = q;
    r.rho = rho;
    return r.to_json();
  }();

  ensure_parent_dir(config.output);
  std::ofstream out(config.output);
  if (!out) throw IoError("cannot write trace " + config.output);
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                static_cast<unsigned long long>(config_hash(resolved)));
  out << "# cbnn-trace v1\n";
  out << "# config_hash=" << hash_hex << "\n";
  out << "# columns=t";
  for (int i = 0; i < dim; ++i) out << ",ctx_" << i;
  out << ",action,loss,cum_loss,comparator_action,comparator_cum_loss,cum_regret";
  if (want_uniform) out << ",uniform_cum_loss";
  out << "\n";
  for (std::int64_t t = 1; t <= trials; ++t) {
    const Row& r = rows[t - 1];
    out << t;
    for (double v : r.context) out << ',' << format_double(v);
    out << ',' << r.action << ',' << format_double(r.loss) << ','
        << format_double(r.cum_loss) << ',' << r.comparator << ','
        << format_double(r.comp_cum) << ','
        << format_double(r.cum_loss - r.comp_cum);
    if (want_uniform) out << ',' << format_double(r.uniform_cum);
    out << "\n";
  }
  out << "# phi_comparator=" << sum.phi_comparator << "\n";
  if (want_best_fixed) {
    out << "# best_fixed_action=" << sum.best_fixed_action
        << " best_fixed_cum_loss=" << format_double(sum.best_fixed_cum_loss) << "\n";
  }
  out.close();

  // Wall times live in the sidecar so the decision trace stays reproducible.
  std::ofstream timing(config.output + ".timing.csv");
  if (!timing) throw IoError("cannot write timing sidecar");
  timing << "# cbnn-timing v1\nt,learner_seconds\n";
  for (std::int64_t t = 1; t <= trials; ++t) {
    timing << t << ',' << format_double(rows[t - 1].seconds) << "\n";
  }
  timing << "# total_learner_seconds=" << format_double(sum.total_learner_seconds)
         << "\n";
  timing.close();

  std::ofstream cfg_out(config.output + ".config.json");
  if (!cfg_out) throw IoError("cannot write config sidecar");
  cfg_out << resolved << "\n";
  cfg_out.close();

  if (!config.replay_out.empty()) {
    ensure_parent_dir(config.replay_out);
    std::ofstream rep(config.replay_out);
    if (!rep) throw IoError("cannot write replay export " + config.replay_out);
    rep << "# cbnn-replay v1 dim=" << dim << " actions=" << actions << "\n";
    for (const auto& step : replay_rows) {
      bool firstcell = true;
      for (double v : step.context) {
        rep << (firstcell ? "" : ",") << format_double(v);
        firstcell = false;
      }
      rep << ',' << step.comparator;
      for (double v : step.losses) rep << ',' << format_double(v);
      rep << "\n";
    }
  }
  return sum;
}

std::vector<BenchRow> bench_timing(const std::vector<std::int64_t>& trial_counts,
                                   int actions, std::uint64_t seed) {
  std::vector<BenchRow> rows;
  for (std::int64_t trials : trial_counts) {
    if (trials < 1) throw ConfigError("bench: trial counts must be positive");
    Learner learner(static_cast<int>(std::max<std::int64_t>(trials, 2)), actions, 1.0,
                    seed ^ kLearnerSeedSalt);
    Rng env(seed);
    std::vector<double> seconds(trials);
    using clock = std::chrono::steady_clock;
    for (std::int64_t t = 1; t <= trials; ++t) {
      const std::optional<int> parent =
          t == 1 ? std::nullopt
                 : std::optional<int>(1 + static_cast<int>(env.below(t - 1)));
      const double loss = env.uniform01() < 0.5 ? 1.0 : 0.0;
      const auto t0 = clock::now();
      learner.choose_action(parent);
      learner.feedback(loss);
      const auto t1 = clock::now();
      seconds[t - 1] = std::chrono::duration<double>(t1 - t0).count();
    }
    std::vector<double> tail(seconds.begin() + (trials - std::max<std::int64_t>(1, trials / 4)),
                             seconds.end());
    std::sort(tail.begin(), tail.end());
    BenchRow row;
    row.trials = trials;
    row.actions = actions;
    row.median_seconds = tail[tail.size() / 2];
    row.p99_seconds =
        tail[std::min(tail.size() - 1, static_cast<std::size_t>(tail.size() * 0.99))];
    rows.push_back(row);
  }
  return rows;
}

}  // namespace harness
}  // namespace cbnn
