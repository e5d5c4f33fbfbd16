#include "cbnn/contraction.hpp"

#include <cmath>

#include "cbnn/belief.hpp"

namespace cbnn {

Contraction::Contraction(const TrajectoryTree& z, const PhiTable& phi) : phi_(&phi) {
  // Z_2 occupies trajectory ids 0 (root), 1 (left leaf), 2 (right leaf).
  const VertexId r = add_local(0);
  const VertexId lu = add_local(1);
  const VertexId ru = add_local(2);
  store_.set_root(r);
  store_.set_children(r, lu, ru);
  set_tau_from_depths(lu, z);
  set_tau_from_depths(ru, z);
  tst_ = TernarySearchTree(store_);
  install_aggregates();
}

Contraction::Contraction(const Contraction& other)
    : store_(other.store_),
      z_of_(other.z_of_),
      in_j_(other.in_j_),
      edge_(other.edge_),
      phi_(other.phi_),
      tst_(other.tst_.clone_with_base(store_)),
      newest_trial_(other.newest_trial_) {
  tst_.rebind_aggregate_fn(belief::aggregate_fn(*this));
}

void Contraction::install_aggregates() { tst_.set_aggregate_fn(belief::aggregate_fn(*this)); }

VertexId Contraction::add_local(VertexId zv) {
  const VertexId u = store_.add_vertex();
  z_of_.push_back(zv);
  if (zv >= static_cast<VertexId>(in_j_.size())) {
    in_j_.resize(std::max<std::size_t>(zv + 1, 2 * in_j_.size()), false);
  }
  in_j_[zv] = true;
  edge_.push_back(Edge{});
  return u;
}

void Contraction::set_tau_from_depths(VertexId local, const TrajectoryTree& z) {
  const VertexId p = store_.parent(local);
  const int delta = z.depth_d(z_of_[local]) - z.depth_d(z_of_[p]);
  if (delta < 0) throw StructuralError("contraction: negative depth difference");
  edge_[local].flip = (*phi_)(delta);
}

std::pair<VertexId, VertexId> Contraction::insert(const TrajectoryTree& z, int t) {
  if (t <= newest_trial_) {
    throw ValidationError("contraction: trial already inserted or out of order");
  }
  const VertexId ut_z = z.leaf_of_node(t);

  // Descend our own TST, steering by nu against the new leaf, to find the
  // unique vertex u_hat whose incoming edge region of Z contains u_t. The
  // leaf is probed once per level, so its root path is stamped up front.
  z.mark_target(0, ut_z);
  VertexId s = tst_.root();
  while (!tst_.is_leaf(s)) {
    switch (z.nu_from_marked(z_of_[tst_.xi(s)], 0)) {
      case NuResult::kLeft:
        s = tst_.child(s, TernarySearchTree::kLeft);
        break;
      case NuResult::kRight:
        s = tst_.child(s, TernarySearchTree::kRight);
        break;
      case NuResult::kNeither:
        s = tst_.child(s, TernarySearchTree::kCentre);
        break;
    }
  }
  const VertexId uhat = tst_.mu(s);
  const VertexId uhat_z = z_of_[uhat];
  if (uhat == store_.root()) {
    throw StructuralError("contraction: search landed on the root");
  }

  // Descend H(Z) for u_star = LCA_Z(u_t, u_hat).
  z.mark_target(1, uhat_z);
  const auto& e = z.tst();
  s = e.root();
  while (!e.is_leaf(s)) {
    const NuResult a = z.nu_from_marked(e.xi(s), 0);
    const NuResult b = z.nu_from_marked(e.xi(s), 1);
    if (a == b) {
      switch (a) {
        case NuResult::kLeft:
          s = e.child(s, TernarySearchTree::kLeft);
          break;
        case NuResult::kRight:
          s = e.child(s, TernarySearchTree::kRight);
          break;
        case NuResult::kNeither:
          s = e.child(s, TernarySearchTree::kCentre);
          break;
      }
    } else {
      s = e.child(s, TernarySearchTree::kCentre);
    }
  }
  const VertexId ustar_z = e.mu(s);
  if (contains_z(ustar_z)) {
    throw StructuralError("contraction: joining vertex already present");
  }

  const VertexId ustar = add_local(ustar_z);
  const VertexId ut = add_local(ut_z);

  // Rewire: u_star replaces u_hat under its old parent; u_hat and u_t hang
  // off u_star on the sides dictated by their Z positions.
  const NuResult side = z.nu_from_marked(ustar_z, 1);
  if (side == NuResult::kNeither) {
    throw StructuralError("contraction: joining vertex is not an ancestor");
  }
  store_.splice_above(uhat, ustar, ut, /*leaf_on_left=*/side == NuResult::kRight);

  edge_[ustar].kappa1 = 1.0;
  edge_[ut].kappa1 = 1.0;
  set_tau_from_depths(ustar, z);
  set_tau_from_depths(uhat, z);
  set_tau_from_depths(ut, z);

  // u_hat kept its kappa, but its tau changed with its new parent, so its
  // leaf rides along as the dirty entry of the combined refresh.
  tst_.insert_rebalance(ustar, ut, uhat);
  newest_trial_ = t;
  return {ustar, ut};
}

std::vector<std::string> Contraction::validate(const TrajectoryTree& z) const {
  std::vector<std::string> errors;
  auto fail = [&](VertexId u, const std::string& what) {
    errors.push_back("contraction vertex " + std::to_string(u) + ": " + what);
  };

  const auto& zb = z.base();
  if (z_of_[store_.root()] != zb.root()) {
    errors.push_back("contraction: root differs from the trajectory root");
  }
  for (VertexId u = 0; u < static_cast<VertexId>(store_.size()); ++u) {
    const VertexId zu = z_of_[u];
    if (store_.is_internal(u)) {
      const VertexId zl = z_of_[store_.left(u)];
      const VertexId zr = z_of_[store_.right(u)];
      if (zb.is_leaf(zu)) {
        fail(u, "internal here but a leaf of Z");
        continue;
      }
      if (!zb.is_ancestor_or_self(zb.left(zu), zl)) {
        fail(u, "left child outside the left Z-subtree");
      }
      if (!zb.is_ancestor_or_self(zb.right(zu), zr)) {
        fail(u, "right child outside the right Z-subtree");
      }
    } else if (!zb.is_leaf(zu)) {
      fail(u, "leaf here but internal in Z");
    }
    if (u != store_.root()) {
      const VertexId p = store_.parent(u);
      const int delta = z.depth_d(zu) - z.depth_d(z_of_[p]);
      if (delta < 0) {
        fail(u, "negative depth difference");
      } else if (std::abs(edge_[u].flip - (*phi_)(delta)) > 1e-15) {
        fail(u, "tau inconsistent with its depth difference");
      }
    }
    if (!(edge_[u].kappa1 >= 0.0)) {
      fail(u, "negative kappa");
    }
  }

  auto tst_errors = tst_.validate();
  errors.insert(errors.end(), tst_errors.begin(), tst_errors.end());
  return errors;
}

}  // namespace cbnn
