#include <cmath>
#include <vector>

#include "cbnn/belief.hpp"
#include "cbnn/common.hpp"
#include "cbnn/contraction.hpp"
#include "cbnn/oracle.hpp"
#include "cbnn/trajectory.hpp"
#include "doctest.h"

using namespace cbnn;

namespace {

std::vector<int> random_parents(int t, Rng& rng) {
  std::vector<int> parents(t, 0);
  for (int i = 2; i <= t; ++i) parents[i - 1] = 1 + static_cast<int>(rng.below(i - 1));
  return parents;
}

}  // namespace

TEST_CASE("policy complexity") {
  CHECK(oracle::policy_complexity({3, 3, 3, 3}, {0, 1, 2, 3}) == 1);
  CHECK(oracle::policy_complexity({1, 2}, {0, 1}) == 2);

  Rng rng(2);
  for (int rep = 0; rep < 50; ++rep) {
    const int t = 3 + static_cast<int>(rng.below(10));
    const auto parents = random_parents(t, rng);
    std::vector<int> actions(t);
    for (auto& a : actions) a = 1 + static_cast<int>(rng.below(4));
    int direct = 1;
    for (int i = 2; i <= t; ++i) {
      direct += actions[i - 1] != actions[parents[i - 1] - 1] ? 1 : 0;
    }
    CHECK(oracle::policy_complexity(actions, parents) == direct);
  }
}

TEST_CASE("canprop oracle at trial two") {
  oracle::CanpropOracle orc(4, 2, 0.3);
  auto s1 = orc.step(0, {0.4}, 0.0);
  CHECK(s1.theta[0][0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(s1.theta[0][1] == doctest::Approx(0.25).epsilon(1e-12));
  auto s2 = orc.step(1, {0.6}, 0.0);
  CHECK(s2.theta[0][0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(s2.theta[0][1] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(s2.pi[0][0] == doctest::Approx(0.5));
}

TEST_CASE("canprop oracle keeps sibling pairs normalised") {
  Rng rng(6);
  for (int k : {2, 4}) {
    oracle::CanpropOracle orc(8, k, 0.7);
    const auto parents = random_parents(8, rng);
    int logk = k == 2 ? 1 : 2;
    for (int t = 1; t <= 8; ++t) {
      std::vector<double> zeta(logk);
      for (auto& z : zeta) z = rng.uniform01();
      orc.step(parents[t - 1], zeta, rng.uniform01());
      for (int v = 1; v < k; ++v) {
        REQUIRE(orc.sibling_pair_sum(v) == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("zero loss leaves the oracle weights unchanged") {
  oracle::CanpropOracle orc(8, 4, 0.9);
  orc.step(0, {0.2, 0.8}, 0.0);
  auto s2 = orc.step(1, {0.7, 0.1}, 0.0);
  for (auto& level : s2.theta) {
    CHECK(level[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(level[1] == doctest::Approx(0.25).epsilon(1e-12));
  }
  for (double psi : s2.psi) CHECK(psi == 1.0);
}

TEST_CASE("subset-sum oracle on the two-trial contraction") {
  TrajectoryTree z(1, 2);
  PhiTable phi(4);
  Contraction j(z, phi);
  const VertexId u2 = j.local_of_z(z.leaf_of_node(2));
  CHECK(oracle::wtilde_sum(j, z, u2) == doctest::Approx(1.0).epsilon(1e-12));
  belief::evidence(j, u2, 0.0);
  CHECK(oracle::wtilde_sum(j, z, u2) == 0.0);
}

TEST_CASE("subset-sum oracle equals the fast marginal (small instances)") {
  Rng rng(123);
  for (int rep = 0; rep < 30; ++rep) {
    const int trials = 3 + static_cast<int>(rng.below(6));
    TrajectoryTree z(1, 2);
    PhiTable phi(8 + static_cast<int>(rng.below(24)));
    Contraction j(z, phi);
    for (int t = 3; t <= trials; ++t) {
      z.grow(t, 1 + static_cast<int>(rng.below(t - 1)));
      if (rng.uniform01() < 0.75) j.insert(z, t);
    }
    for (VertexId u = 0; u < VertexId(j.size()); ++u) {
      if (j.is_leaf(u) && rng.uniform01() < 0.7) {
        belief::evidence(j, u, 0.1 + 9.9 * rng.uniform01());
      }
    }
    for (VertexId u = 0; u < VertexId(j.size()); ++u) {
      if (!j.is_leaf(u)) continue;
      const double lhs = 4.0 * belief::marginal(j, u);
      const double rhs = oracle::wtilde_sum(j, z, u);
      REQUIRE(lhs == doctest::Approx(rhs).epsilon(1e-9));
    }
  }
}

TEST_CASE("initial mass sums to one half") {
  Rng rng(9);
  for (int t = 3; t <= 12; ++t) {
    const auto parents = random_parents(t, rng);
    REQUIRE(std::abs(oracle::w1_total_mass(t, parents) - 0.5) <= 1e-12);
  }
  // A spine and a star, where the product telescopes differently.
  std::vector<int> spine(10), star(10);
  for (int i = 2; i <= 10; ++i) {
    spine[i - 1] = i - 1;
    star[i - 1] = 1;
  }
  CHECK(std::abs(oracle::w1_total_mass(10, spine) - 0.5) <= 1e-12);
  CHECK(std::abs(oracle::w1_total_mass(10, star) - 0.5) <= 1e-12);
}

TEST_CASE("exp4 oracle prior is uniform for T = K = 2") {
  CHECK(oracle::exp4_prior(2, 2, 1) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(oracle::exp4_prior(2, 2, 2) == doctest::Approx(0.25).epsilon(1e-12));
  oracle::Exp4Oracle orc(2, 2, 0.5);
  orc.begin_trial(0);
  const auto p = orc.distribution();
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("exp4 restricted tables factor like the full prior") {
  // Sum the full-horizon prior over completions and compare with the
  // incremental tables, for every restricted policy.
  const int T = 5;
  Rng rng(33);
  for (int K : {2, 3}) {
    const auto parents = random_parents(T, rng);
    for (int t = 1; t <= T; ++t) {
      // Restricted mass by full enumeration of [K]^T.
      std::vector<double> restricted;
      std::int64_t full = 1;
      for (int i = 0; i < T; ++i) full *= K;
      std::int64_t part = 1;
      for (int i = 0; i < t; ++i) part *= K;
      restricted.assign(part, 0.0);
      for (std::int64_t y = 0; y < full; ++y) {
        std::vector<int> actions(T);
        std::int64_t acc = y;
        for (int i = 0; i < T; ++i) {
          actions[i] = 1 + static_cast<int>(acc % K);
          acc /= K;
        }
        const int phi = oracle::policy_complexity(actions, parents);
        restricted[y % part] += oracle::exp4_prior(T, K, phi);
      }
      // Incremental product form.
      std::vector<double> product(part, 1.0);
      for (std::int64_t y = 0; y < part; ++y) {
        std::vector<int> actions(t);
        std::int64_t acc = y;
        for (int i = 0; i < t; ++i) {
          actions[i] = 1 + static_cast<int>(acc % K);
          acc /= K;
        }
        for (int i = 2; i <= t; ++i) {
          product[y] *= actions[i - 1] != actions[parents[i - 1] - 1]
                            ? 1.0 / (T * (K - 1))
                            : 1.0 - 1.0 / T;
        }
      }
      // Proportionality: normalise both and compare.
      double rs = 0.0, ps = 0.0;
      for (std::int64_t y = 0; y < part; ++y) {
        rs += restricted[y];
        ps += product[y];
      }
      for (std::int64_t y = 0; y < part; ++y) {
        REQUIRE(restricted[y] / rs == doctest::Approx(product[y] / ps).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("oracle size limits are hard errors") {
  oracle::Exp4Oracle orc(64, 4, 0.1);
  bool threw = false;
  try {
    for (int t = 1; t <= 64; ++t) orc.begin_trial(t == 1 ? 0 : 1);
  } catch (const SizeError&) {
    threw = true;
  }
  CHECK(threw);
}
