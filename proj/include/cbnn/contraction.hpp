#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "cbnn/binary_tree.hpp"
#include "cbnn/common.hpp"
#include "cbnn/trajectory.hpp"
#include "cbnn/tst.hpp"

namespace cbnn {

// Lazy-random-walk flip probabilities: phi_0 = 0 and
// phi_{j+1} = (1 - 1/T) phi_j + (1/T)(1 - phi_j).
// Values are extended on demand, one recursion step per new index.
class PhiTable {
 public:
  explicit PhiTable(int horizon) : horizon_(horizon), values_{0.0} {
    if (horizon < 2) throw ValidationError("phi: horizon must be at least 2");
  }

  double operator()(int j) const {
    if (j < 0 || j > horizon_) throw ValidationError("phi: index out of range");
    const double inv_t = 1.0 / static_cast<double>(horizon_);
    while (static_cast<int>(values_.size()) <= j) {
      const double prev = values_.back();
      values_.push_back((1.0 - inv_t) * prev + inv_t * (1.0 - prev));
    }
    return values_[j];
  }

  int horizon() const { return horizon_; }

 private:
  int horizon_;
  mutable std::vector<double> values_;
};

// A contraction of Z: a reduced full binary tree over a subset of Z's
// vertices carrying per-edge transition matrices tau (driven by d-depth
// differences through phi) and evidence values kappa, plus a TST with
// belief-propagation aggregates.
class Contraction {
 public:
  // Starts as a copy of Z_2, which stays a valid contraction of every later
  // Z_t (the first three trajectory vertices never move).
  Contraction(const TrajectoryTree& z, const PhiTable& phi);
  Contraction(const Contraction& other);
  Contraction& operator=(const Contraction&) = delete;
  Contraction(Contraction&&) = delete;

  // INSERT_t: adds the leaf of trial t (plus the Z-LCA joining vertex) to
  // the contraction. Trials must arrive in increasing order. Returns
  // (u_star, u_t) as local ids.
  std::pair<VertexId, VertexId> insert(const TrajectoryTree& z, int t);

  // Reverse lookup by linear scan; cheap at oracle/test scale, off the
  // trial loop's hot path.
  VertexId local_of_z(VertexId zv) const {
    for (VertexId u = 0; u < static_cast<VertexId>(z_of_.size()); ++u) {
      if (z_of_[u] == zv) return u;
    }
    return kNone;
  }
  VertexId z_of(VertexId local) const { return z_of_[local]; }
  bool contains_z(VertexId zv) const {
    return zv < static_cast<VertexId>(in_j_.size()) && in_j_[zv];
  }

  VertexId root_local() const { return store_.root(); }
  int size() const { return static_cast<int>(store_.size()); }
  bool is_leaf(VertexId local) const { return store_.is_leaf(local); }

  // A vertex's whole bayesian-network state: the flip probability behind
  // its symmetric transition matrix (0 at the root, whose phantom parent
  // pins the state) and the only evidence entry that ever moves.
  double flip(VertexId local) const { return edge_[local].flip; }
  double kappa1(VertexId local) const { return edge_[local].kappa1; }

  // Row-major expansions, used by the oracles and the validators.
  std::array<double, 4> tau(VertexId local) const {
    const double f = edge_[local].flip;
    return {1.0 - f, f, f, 1.0 - f};
  }
  std::array<double, 2> kappa(VertexId local) const {
    return {1.0, edge_[local].kappa1};
  }

  void set_kappa1(VertexId local, double value) { edge_[local].kappa1 = value; }
  // Fault-injection surface for the validators; normal updates flow through
  // the depth bookkeeping of insert().
  void set_transition_raw(VertexId local, double flip_value) {
    edge_[local].flip = flip_value;
  }

  const BinaryTreeStore& store() const { return store_; }
  const TernarySearchTree& tst() const { return tst_; }
  TernarySearchTree& tst() { return tst_; }
  const PhiTable& phi() const { return *phi_; }

  // Checks every contraction rule plus tau/delta consistency against Z;
  // empty report means valid.
  std::vector<std::string> validate(const TrajectoryTree& z) const;

 private:
  struct Edge {
    double flip = 0.0;
    double kappa1 = 1.0;
  };
  BinaryTreeStore store_;
  std::vector<VertexId> z_of_;
  std::vector<bool> in_j_;  // membership by trajectory vertex id
  std::vector<Edge> edge_;
  const PhiTable* phi_;
  TernarySearchTree tst_;
  int newest_trial_ = 2;

  VertexId add_local(VertexId zv);
  void set_tau_from_depths(VertexId local, const TrajectoryTree& z);
  void install_aggregates();
};

}  // namespace cbnn
