#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "cbnn/common.hpp"
#include "cbnn/contraction.hpp"
#include "cbnn/trajectory.hpp"

namespace cbnn {

// Action-tree vertices are 1-based heap ids: root 1, children 2v and 2v+1,
// leaves K..2K-1 standing for actions 1..K.
inline int heap_left(int v) { return 2 * v; }
inline int heap_right(int v) { return 2 * v + 1; }
inline int heap_parent(int v) { return v / 2; }
inline int heap_sibling(int v) { return v ^ 1; }

struct LearnerOptions {
  // With padding enabled, a non-power-of-two action count is rounded up to
  // the next power of two with phantom actions that are never returned
  // (rejection-resampled paths). Off by default.
  bool allow_padding = false;
};

struct TrialRecord {
  int trial = 0;
  std::vector<int> path;                           // v_{t,0..log K}
  std::vector<std::array<double, 2>> theta;        // per level: (left, right)
  std::vector<std::array<double, 2>> pi;
  std::vector<double> zeta;                        // draws of the accepted descent
  int resampled = 0;                               // phantom rejections (padding only)
  double pi_tilde = 1.0;
  int action = 0;                                  // 1-based
  double loss = -1.0;
  std::vector<double> psi;                         // psi_{t,0..log K}
  std::vector<std::pair<int, double>> kappa_updates;  // action-tree vertex -> kappa_1
};

// The CBNN learner: per-vertex contractions over the shared trajectory
// tree, sampled root-to-leaf paths, and importance-weighted evidence
// pushed back along the path after each loss.
class Learner {
 public:
  Learner(int horizon, int num_actions, double rho, std::uint64_t seed,
          LearnerOptions options = {});
  Learner(const Learner& other);
  Learner& operator=(const Learner&) = delete;

  // observed_parent must be absent on trial 1 and the revealed n(t)
  // afterwards. Returns the chosen action a_t in [1, K].
  int choose_action(std::optional<int> observed_parent);
  void feedback(double loss);

  // Exact conditional distribution of the upcoming action given the revealed
  // parent, computed on a deep copy so the live state is untouched.
  std::vector<double> action_distribution(std::optional<int> observed_parent) const;

  const TrialRecord& last_trial() const { return record_; }
  int trials_done() const { return trials_done_; }
  bool awaiting_feedback() const { return awaiting_; }
  int horizon() const { return horizon_; }
  int num_actions() const { return num_actions_; }
  double eta() const { return eta_; }
  double rho() const { return rho_; }

  const TrajectoryTree* trajectory() const { return z_ ? &*z_ : nullptr; }
  const Contraction* contraction_at(int v) const {
    return contractions_[v] ? contractions_[v].get() : nullptr;
  }
  const PhiTable& phi() const { return *phi_; }

 private:
  int horizon_;
  int num_actions_;   // real actions
  int padded_k_;      // power-of-two tree width
  int logk_;
  double rho_, eta_;
  LearnerOptions options_;
  std::shared_ptr<PhiTable> phi_;  // shared so copies keep contractions valid
  std::optional<TrajectoryTree> z_;
  std::vector<std::unique_ptr<Contraction>> contractions_;  // heap-indexed
  std::vector<double> pending_x1_;  // kappa_1 for x_1 recorded before A(v) exists
  std::vector<int> theta_trial_;    // per vertex: trial of the cached values below
  std::vector<double> theta_val_;
  std::vector<VertexId> local_ut_;  // per vertex: this trial's leaf in A(v)
  Rng rng_;
  int trials_done_ = 0;
  int current_trial_ = 0;
  bool awaiting_ = false;
  TrialRecord record_;

  void prepare_trial(int trial, std::optional<int> observed_parent);
  Contraction& ensure_contraction(int v);
  double prepared_theta(int v);  // INSERT_t + MARGINAL, cached per trial
  bool is_phantom(int leaf) const { return leaf - padded_k_ + 1 > num_actions_; }
};

}  // namespace cbnn
