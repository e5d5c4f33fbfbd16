#include "cbnn/canprop.hpp"

#include <cmath>

#include "cbnn/belief.hpp"

namespace cbnn {

namespace {
constexpr double kPsiFloor = 1e-300;
}

Learner::Learner(int horizon, int num_actions, double rho, std::uint64_t seed,
                 LearnerOptions options)
    : horizon_(horizon),
      num_actions_(num_actions),
      rho_(rho),
      options_(options),
      rng_(seed) {
  if (horizon < 2) throw ConfigError("learner: horizon must be at least 2");
  if (num_actions < 2) throw ConfigError("learner: need at least two actions");
  if (!(rho > 0.0)) throw ConfigError("learner: rho must be positive");
  if (!is_power_of_two(num_actions) && !options_.allow_padding) {
    throw ConfigError(
        "learner: action count must be a power of two (padding is off by default)");
  }
  padded_k_ = 1;
  logk_ = 0;
  while (padded_k_ < num_actions) {
    padded_k_ <<= 1;
    ++logk_;
  }
  eta_ = rho * std::sqrt(std::log(static_cast<double>(padded_k_)) *
                         std::log(static_cast<double>(horizon_)) /
                         (static_cast<double>(padded_k_) * horizon_));
  phi_ = std::make_shared<PhiTable>(horizon_);
  contractions_.resize(2 * padded_k_);
  pending_x1_.assign(2 * padded_k_, 1.0);
  theta_trial_.assign(2 * padded_k_, 0);
  theta_val_.assign(2 * padded_k_, 0.0);
  local_ut_.assign(2 * padded_k_, kNone);
}

Learner::Learner(const Learner& other)
    : horizon_(other.horizon_),
      num_actions_(other.num_actions_),
      padded_k_(other.padded_k_),
      logk_(other.logk_),
      rho_(other.rho_),
      eta_(other.eta_),
      options_(other.options_),
      phi_(other.phi_),
      z_(other.z_),
      pending_x1_(other.pending_x1_),
      theta_trial_(other.theta_trial_),
      theta_val_(other.theta_val_),
      local_ut_(other.local_ut_),
      rng_(other.rng_),
      trials_done_(other.trials_done_),
      current_trial_(other.current_trial_),
      awaiting_(other.awaiting_),
      record_(other.record_) {
  contractions_.resize(other.contractions_.size());
  for (std::size_t v = 0; v < contractions_.size(); ++v) {
    if (other.contractions_[v]) {
      contractions_[v] = std::make_unique<Contraction>(*other.contractions_[v]);
    }
  }
}

Contraction& Learner::ensure_contraction(int v) {
  if (!contractions_[v]) {
    contractions_[v] = std::make_unique<Contraction>(*z_, *phi_);
    if (pending_x1_[v] != 1.0) {
      const VertexId leaf = contractions_[v]->local_of_z(z_->leaf_of_node(1));
      belief::evidence(*contractions_[v], leaf, pending_x1_[v]);
    }
  }
  return *contractions_[v];
}

double Learner::prepared_theta(int v) {
  if (theta_trial_[v] == current_trial_) return theta_val_[v];
  Contraction& a = ensure_contraction(v);
  VertexId local;
  if (current_trial_ == 2) {
    // A fresh contraction is the Z_2 copy, so the trial-2 leaf is already in.
    local = a.local_of_z(z_->leaf_of_node(2));
  } else {
    local = a.insert(*z_, current_trial_).second;
  }
  local_ut_[v] = local;
  theta_val_[v] = belief::marginal(a, local);
  theta_trial_[v] = current_trial_;
  return theta_val_[v];
}

void Learner::prepare_trial(int trial, std::optional<int> observed_parent) {
  if (trial == 1) {
    if (observed_parent) {
      throw ProtocolError("learner: no similar trial exists before trial 1");
    }
    return;
  }
  if (!observed_parent) throw ProtocolError("learner: the similar trial is required");
  const int parent = *observed_parent;
  if (parent < 1 || parent >= trial) {
    throw ValidationError("learner: similar trial out of range");
  }
  if (trial == 2) {
    z_.emplace(1, 2);
  } else {
    z_->grow(trial, parent);
  }
}

int Learner::choose_action(std::optional<int> observed_parent) {
  if (awaiting_) throw ProtocolError("learner: feedback is pending");
  if (trials_done_ >= horizon_) throw ProtocolError("learner: horizon exhausted");
  const int t = trials_done_ + 1;
  current_trial_ = t;
  record_ = TrialRecord{};
  record_.trial = t;
  prepare_trial(t, observed_parent);

  for (int attempt = 0;; ++attempt) {
    record_.path.assign(1, 1);
    record_.theta.clear();
    record_.pi.clear();
    record_.zeta.clear();
    record_.pi_tilde = 1.0;
    int v = 1;
    for (int j = 0; j < logk_; ++j) {
      double tl, tr;
      if (t == 1) {
        // Every theta equals 1/4 under the initial weighting, so trial 1 is
        // a uniform descent; contractions are created lazily later.
        tl = tr = 0.25;
      } else {
        tl = prepared_theta(heap_left(v));
        tr = prepared_theta(heap_right(v));
      }
      const double zsum = tl + tr;
      double pl = 0.5;
      if (zsum >= kPsiFloor) pl = tl / zsum;
      const double zeta = rng_.uniform01();
      const bool go_left = zeta <= pl;
      record_.theta.push_back({tl, tr});
      record_.pi.push_back({pl, 1.0 - pl});
      record_.zeta.push_back(zeta);
      record_.pi_tilde *= go_left ? pl : 1.0 - pl;
      v = go_left ? heap_left(v) : heap_right(v);
      record_.path.push_back(v);
    }
    if (!is_phantom(v)) {
      record_.action = v - padded_k_ + 1;
      break;
    }
    record_.resampled = attempt + 1;
    if (attempt > 100000) {
      throw StructuralError("learner: phantom rejection did not terminate");
    }
  }
  awaiting_ = true;
  return record_.action;
}

void Learner::feedback(double loss) {
  if (!awaiting_) throw ProtocolError("learner: no action awaiting feedback");
  if (!(loss >= 0.0 && loss <= 1.0)) {
    throw ValidationError("learner: loss must lie in [0, 1]");
  }
  const int t = current_trial_;
  record_.loss = loss;
  record_.psi.assign(logk_ + 1, 1.0);
  record_.psi[logk_] = std::exp(-eta_ * loss / record_.pi_tilde);
  for (int j = logk_; j >= 1; --j) {
    const int vj = record_.path[j];
    const double pi_vj = vj % 2 == 0 ? record_.pi[j - 1][0] : record_.pi[j - 1][1];
    double prev = 1.0 - (1.0 - record_.psi[j]) * pi_vj;
    if (prev < kPsiFloor) prev = kPsiFloor;
    record_.psi[j - 1] = prev;
    const double kappa_chosen = record_.psi[j] / prev;
    const double kappa_sibling = 1.0 / prev;
    const int sib = heap_sibling(vj);
    record_.kappa_updates.push_back({vj, kappa_chosen});
    record_.kappa_updates.push_back({sib, kappa_sibling});
    if (t == 1) {
      pending_x1_[vj] = kappa_chosen;
      pending_x1_[sib] = kappa_sibling;
    } else {
      belief::evidence(*contractions_[vj], local_ut_[vj], kappa_chosen);
      belief::evidence(*contractions_[sib], local_ut_[sib], kappa_sibling);
    }
  }
  awaiting_ = false;
  ++trials_done_;
}

std::vector<double> Learner::action_distribution(std::optional<int> observed_parent) const {
  Learner probe(*this);
  if (probe.awaiting_) throw ProtocolError("learner: feedback is pending");
  if (probe.trials_done_ >= probe.horizon_) {
    throw ProtocolError("learner: horizon exhausted");
  }
  const int t = probe.trials_done_ + 1;
  probe.current_trial_ = t;
  probe.prepare_trial(t, observed_parent);

  std::vector<double> reach(2 * padded_k_, 0.0);
  reach[1] = 1.0;
  for (int v = 1; v < padded_k_; ++v) {
    double pl = 0.5;
    if (t > 1) {
      const double tl = probe.prepared_theta(heap_left(v));
      const double tr = probe.prepared_theta(heap_right(v));
      if (tl + tr >= kPsiFloor) pl = tl / (tl + tr);
    }
    reach[heap_left(v)] = reach[v] * pl;
    reach[heap_right(v)] = reach[v] * (1.0 - pl);
  }
  std::vector<double> dist(num_actions_, 0.0);
  double mass = 0.0;
  for (int a = 1; a <= num_actions_; ++a) {
    dist[a - 1] = reach[padded_k_ + a - 1];
    mass += dist[a - 1];
  }
  for (double& x : dist) x /= mass;  // conditional on landing off the padding
  return dist;
}

}  // namespace cbnn
