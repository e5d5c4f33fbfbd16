#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cbnn/common.hpp"
#include "cbnn/contraction.hpp"
#include "cbnn/trajectory.hpp"

namespace cbnn {
namespace oracle {

// Policy complexity (1 plus the number of trials disagreeing with their
// designated similar trial). actions[t-1] = y_t, parents[t-1] = n(t) as a
// 1-based trial index; parents[0] is ignored.
int policy_complexity(const std::vector<int>& actions, const std::vector<int>& parents);

// Exact right-hand side of the marginal identity: the sum over all subsets
// S of the revealed nodes of [gamma(u_hat) in S] * w~(J, lambda, S), with
// lambda read off the contraction's leaf kappa_1 values. Nodes must be the
// trials 1..z.num_nodes(); at most 20 of them.
double wtilde_sum(const Contraction& j, const TrajectoryTree& z, VertexId local_leaf);

// Brute-force Lambda(J, u) by enumerating all 2^|J| state assignments with
// f(u) pinned to 1.
double lambda_bruteforce(const Contraction& j, VertexId local_vertex);

// Total initial mass: (1/4) * sum over S in 2^X of the sigma-product, by
// explicit enumeration (equals 1/2 for every valid parent map).
double w1_total_mass(int horizon, const std::vector<int>& parents);

// The policy prior of the inefficient algorithm, as a function of
// complexity: (1/K) (T(K-1))^{-phi} (1 - 1/T)^{T-1-phi}.
double exp4_prior(int horizon, int num_actions, int phi);

// Literal trial loop over explicit per-subset weights (the general
// framework the fast learner implements). Tables cover subsets of the
// nodes revealed so far and extend by one bit per trial.
class CanpropOracle {
 public:
  CanpropOracle(int horizon, int num_actions, double eta);

  struct Step {
    std::vector<int> path;                      // v_{t,0..log K}, heap ids
    std::vector<std::array<double, 2>> theta;   // per level: (left, right)
    std::vector<std::array<double, 2>> pi;
    double pi_tilde = 0.0;
    int action = 0;                             // 1-based
    std::vector<double> psi;                    // psi_{t,0..log K}
  };

  // Runs the next trial with the given uniform draws (log K of them) and
  // observed loss. parent is n(t), ignored on the first trial.
  Step step(int parent, const std::vector<double>& zeta, double loss);

  int trials_done() const { return t_; }
  // sum_S w(left(v), S) + w(right(v), S); stays 1 for every internal v.
  double sibling_pair_sum(int internal_v) const;
  double theta_of(int v) const;  // against the newest node

 private:
  int T_, K_, logk_;
  double eta_;
  int t_ = 0;
  std::vector<int> parents_;
  std::vector<std::vector<double>> w_;  // heap vertex -> per-subset weight

  void extend(int parent);
};

// EXP4 with the complexity-driven prior, by full policy-table enumeration
// over [K]^{X_t}. Hard limit K^t <= 2^20.
class Exp4Oracle {
 public:
  Exp4Oracle(int horizon, int num_actions, double eta);

  void begin_trial(int parent);             // reveal x_t (and n(t) for t >= 2)
  std::vector<double> distribution() const;  // P[a_t = a], 1-based offset 0
  void update(int action, double loss);

  int trials_done() const { return t_; }

 private:
  int T_, K_;
  double eta_;
  int t_ = 0;
  bool acted_ = false;
  std::vector<double> w_;  // over policies y' : X_t -> [K]
};

}  // namespace oracle
}  // namespace cbnn
