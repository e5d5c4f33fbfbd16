#include <cmath>
#include <optional>
#include <vector>

#include "cbnn/canprop.hpp"
#include "cbnn/common.hpp"
#include "cbnn/oracle.hpp"
#include "doctest.h"

using namespace cbnn;

namespace {

// Drives a learner and the explicit-weight oracle through the same trials,
// sharing the learner's zeta draws, and checks that every theta computed on
// the sampled path agrees to relative 1e-9.
void mirror_run(int horizon, int num_actions, double rho, std::uint64_t seed) {
  Learner learner(horizon, num_actions, rho, seed);
  oracle::CanpropOracle orc(horizon, num_actions, learner.eta());
  Rng env(seed ^ 0x9e3779b97f4a7c15ull);

  for (int t = 1; t <= horizon; ++t) {
    const std::optional<int> parent =
        t == 1 ? std::nullopt
               : std::optional<int>(1 + static_cast<int>(env.below(t - 1)));
    const int action = learner.choose_action(parent);
    const double loss = env.uniform01() < 0.5 ? 0.0 : 1.0;
    learner.feedback(loss);

    const auto& rec = learner.last_trial();
    const auto step = orc.step(parent.value_or(0), rec.zeta, loss);
    REQUIRE(step.action == action);
    REQUIRE(step.path == rec.path);
    for (std::size_t level = 0; level < rec.theta.size(); ++level) {
      for (int side = 0; side < 2; ++side) {
        REQUIRE(rec.theta[level][side] ==
                doctest::Approx(step.theta[level][side]).epsilon(1e-9));
        REQUIRE(rec.pi[level][side] ==
                doctest::Approx(step.pi[level][side]).epsilon(1e-9));
      }
    }
    REQUIRE(rec.pi_tilde == doctest::Approx(step.pi_tilde).epsilon(1e-9));
    for (std::size_t i = 0; i < rec.psi.size(); ++i) {
      REQUIRE(rec.psi[i] == doctest::Approx(step.psi[i]).epsilon(1e-9));
    }
  }
}

}  // namespace

TEST_CASE("learning rate follows the parameter schedule") {
  Learner a(4, 2, 1.0, 0);
  CHECK(a.eta() == doctest::Approx(std::sqrt(std::log(2.0) * std::log(4.0) / 8.0))
                       .epsilon(1e-12));
  Learner b(1024, 4, 2.0, 0);
  CHECK(b.eta() ==
        doctest::Approx(2.0 * std::sqrt(std::log(4.0) * std::log(1024.0) / 4096.0))
            .epsilon(1e-12));
  CHECK_THROWS_AS(Learner(4, 2, 0.0, 0), ConfigError);
  CHECK_THROWS_AS(Learner(4, 2, -1.0, 0), ConfigError);
  CHECK_THROWS_AS(Learner(4, 3, 1.0, 0), ConfigError);  // padding off by default
  CHECK_THROWS_AS(Learner(1, 2, 1.0, 0), ConfigError);
}

TEST_CASE("trial one is a uniform draw") {
  int counts[2] = {0, 0};
  for (std::uint64_t seed = 0; seed < 100000; ++seed) {
    Learner learner(2, 2, 1.0, seed);
    counts[learner.choose_action(std::nullopt) - 1]++;
  }
  // Within 3 sigma of an even split.
  const double sigma = std::sqrt(100000 * 0.25);
  CHECK(std::abs(counts[0] - 50000.0) <= 3.0 * sigma);
}

TEST_CASE("trial two sees equal thetas of one quarter") {
  Learner learner(8, 2, 1.0, 7);
  learner.choose_action(std::nullopt);
  learner.feedback(0.0);  // zero loss keeps the weighting untouched
  learner.choose_action(1);
  const auto& rec = learner.last_trial();
  CHECK(rec.theta[0][0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(rec.theta[0][1] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(rec.pi[0][0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("feedback arithmetic on a two-action trial") {
  // pi = (1/2, 1/2), eta ln-matched so that psi_1 = 1/2 exactly.
  Learner learner(4, 2, 1.0, 3);
  learner.choose_action(std::nullopt);
  learner.feedback(0.0);
  learner.choose_action(1);
  const auto& rec = learner.last_trial();
  REQUIRE(rec.pi[0][0] == doctest::Approx(0.5).epsilon(1e-12));

  // eta = sqrt(ln2 ln4 / 8) = 0.34657..., loss 1, pi_tilde = 1/2:
  // psi_1 = exp(-2 eta) = 0.5, psi_0 = 1 - 0.5 * 0.5 = 0.75.
  learner.feedback(1.0);
  const auto& fed = learner.last_trial();
  CHECK(fed.psi[1] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(fed.psi[0] == doctest::Approx(0.75).epsilon(1e-9));
  bool saw_chosen = false, saw_sibling = false;
  for (const auto& [v, kappa] : fed.kappa_updates) {
    if (v == fed.path[1]) {
      CHECK(kappa == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
      saw_chosen = true;
    } else {
      CHECK(kappa == doctest::Approx(4.0 / 3.0).epsilon(1e-9));
      saw_sibling = true;
    }
  }
  CHECK(saw_chosen);
  CHECK(saw_sibling);
}

TEST_CASE("zero loss is a no-op through the exponential") {
  Learner learner(16, 4, 1.5, 11);
  Rng env(5);
  for (int t = 1; t <= 10; ++t) {
    learner.choose_action(t == 1 ? std::nullopt
                                 : std::optional<int>(1 + int(env.below(t - 1))));
    learner.feedback(0.0);
    const auto& rec = learner.last_trial();
    for (const auto& [v, kappa] : rec.kappa_updates) {
      REQUIRE(kappa == 1.0);
    }
    for (auto& level : rec.theta) {
      if (rec.trial >= 2) {
        REQUIRE(level[0] == doctest::Approx(0.25).epsilon(1e-12));
        REQUIRE(level[1] == doctest::Approx(0.25).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("protocol misuse raises") {
  Learner learner(4, 2, 1.0, 0);
  CHECK_THROWS_AS(learner.feedback(0.5), ProtocolError);
  CHECK_THROWS_AS(learner.choose_action(std::optional<int>(1)), ProtocolError);
  learner.choose_action(std::nullopt);
  CHECK_THROWS_AS(learner.choose_action(std::nullopt), ProtocolError);
  CHECK_THROWS_AS(learner.feedback(1.5), ValidationError);
  learner.feedback(1.0);
  CHECK_THROWS_AS(learner.choose_action(std::nullopt), ProtocolError);  // parent required
  CHECK_THROWS_AS(learner.choose_action(std::optional<int>(2)), ValidationError);
  learner.choose_action(std::optional<int>(1));
  learner.feedback(0.0);
  learner.choose_action(std::optional<int>(2));
  learner.feedback(0.25);
  learner.choose_action(std::optional<int>(3));
  learner.feedback(0.75);
  CHECK_THROWS_AS(learner.choose_action(std::optional<int>(1)), ProtocolError);  // horizon
}

TEST_CASE("identical seeds give identical runs") {
  auto run = [](std::uint64_t seed) {
    Learner learner(32, 4, 1.0, seed);
    Rng env(4242);
    std::vector<int> actions;
    for (int t = 1; t <= 32; ++t) {
      const auto parent = t == 1 ? std::nullopt
                                 : std::optional<int>(1 + int(env.below(t - 1)));
      actions.push_back(learner.choose_action(parent));
      learner.feedback(env.uniform01());
    }
    return actions;
  };
  CHECK(run(555) == run(555));
  CHECK(run(555) != run(556));  // overwhelmingly likely
}

TEST_CASE("sampling probabilities stay a valid distribution") {
  Learner learner(64, 8, 2.5, 17);
  Rng env(1);
  for (int t = 1; t <= 64; ++t) {
    learner.choose_action(t == 1 ? std::nullopt
                                 : std::optional<int>(1 + int(env.below(t - 1))));
    const auto& rec = learner.last_trial();
    for (auto& level : rec.pi) {
      REQUIRE(level[0] >= 0.0);
      REQUIRE(level[1] >= 0.0);
      REQUIRE(level[0] + level[1] == doctest::Approx(1.0).epsilon(1e-9));
    }
    REQUIRE(rec.pi_tilde > 0.0);
    learner.feedback(env.uniform01() < 0.3 ? 1.0 : 0.0);
  }
}

TEST_CASE("padding serves non-power-of-two action counts") {
  LearnerOptions opts;
  opts.allow_padding = true;
  Learner learner(32, 3, 1.0, 9, opts);
  Rng env(2);
  for (int t = 1; t <= 32; ++t) {
    const int a = learner.choose_action(
        t == 1 ? std::nullopt : std::optional<int>(1 + int(env.below(t - 1))));
    REQUIRE(a >= 1);
    REQUIRE(a <= 3);
    learner.feedback(env.uniform01());
  }
}

TEST_CASE("long adversarial runs stay numerically sound") {
  // Extreme 0/1 losses and a skewed parent process; every sampled pair must
  // remain a probability vector and every theta finite.
  Learner learner(4096, 8, 3.0, 99);
  Rng env(123);
  for (int t = 1; t <= 4096; ++t) {
    std::optional<int> parent;
    if (t > 1) {
      // Heavy repetition: half the time reuse trial 1's context. That drives
      // some sampling probabilities toward 0/1.
      parent = env.uniform01() < 0.5 ? 1 : 1 + static_cast<int>(env.below(t - 1));
    }
    learner.choose_action(parent);
    const auto& rec = learner.last_trial();
    for (const auto& level : rec.theta) {
      REQUIRE(std::isfinite(level[0]));
      REQUIRE(std::isfinite(level[1]));
      REQUIRE(level[0] >= 0.0);
      REQUIRE(level[1] >= 0.0);
    }
    for (const auto& level : rec.pi) {
      REQUIRE(level[0] + level[1] == doctest::Approx(1.0).epsilon(1e-9));
    }
    REQUIRE(rec.pi_tilde > 0.0);
    learner.feedback(env.uniform01() < 0.9 ? 1.0 : 0.0);
    for (const auto& [v, kappa] : learner.last_trial().kappa_updates) {
      REQUIRE(std::isfinite(kappa));
      REQUIRE(kappa >= 0.0);
    }
  }
}

TEST_CASE("path thetas match the explicit-weight oracle") {
  mirror_run(8, 2, 1.0, 1);
  mirror_run(8, 4, 0.5, 2);
  mirror_run(6, 4, 2.0, 3);
}

TEST_CASE("conditional distributions match the policy oracle on zero-loss histories") {
  // With zero losses every weighting stays at its prior, and both the tree
  // sampler and the policy-enumeration oracle are uniform at every trial.
  for (int num_actions : {2, 4}) {
    const int horizon = 5;
    Learner learner(horizon, num_actions, 1.0, 77);
    oracle::Exp4Oracle orc(horizon, num_actions, learner.eta());
    Rng env(31);
    for (int t = 1; t <= horizon; ++t) {
      const auto parent = t == 1 ? std::nullopt
                                 : std::optional<int>(1 + int(env.below(t - 1)));
      const auto dist = learner.action_distribution(parent);
      orc.begin_trial(parent.value_or(0));
      const auto expect = orc.distribution();
      for (int a = 0; a < num_actions; ++a) {
        REQUIRE(dist[a] == doctest::Approx(expect[a]).epsilon(1e-9));
        REQUIRE(dist[a] == doctest::Approx(1.0 / num_actions).epsilon(1e-9));
      }
      const int action = learner.choose_action(parent);
      learner.feedback(0.0);
      orc.update(action, 0.0);
    }
  }
}

TEST_CASE("after a loss the sampler and the policy oracle diverge by design") {
  // T = 2, K = 2, loss 1 on trial 1. The policy-enumeration oracle stays
  // uniform (its prior decouples the two nodes at T = 2, and its update
  // only reweights the trial-1 coordinate), while the cascading update
  // yields (1+3g)/(4+4g) on the chosen side, g = exp(-2 eta). The trial
  // loop is pinned to the explicit-weight trial loop (the mirror test
  // above), not to the policy oracle.
  Learner learner(2, 2, 1.0, 1);
  const int a1 = learner.choose_action(std::nullopt);
  learner.feedback(1.0);
  const auto dist = learner.action_distribution(std::optional<int>(1));
  const double g = std::exp(-2.0 * learner.eta());
  CHECK(dist[a1 - 1] == doctest::Approx((1 + 3 * g) / (4 + 4 * g)).epsilon(1e-12));

  oracle::Exp4Oracle orc(2, 2, learner.eta());
  orc.begin_trial(0);
  orc.update(a1, 1.0);
  orc.begin_trial(1);
  CHECK(orc.distribution()[0] == doctest::Approx(0.5).epsilon(1e-12));
}
