#include "cbnn/trajectory.hpp"

#include <algorithm>

namespace cbnn {

TrajectoryTree::TrajectoryTree(int x1, int x2) {
  if (x1 == x2) throw ValidationError("trajectory: the two initial nodes coincide");
  const VertexId r = store_.add_vertex();
  const VertexId lu = store_.add_vertex();
  const VertexId ru = store_.add_vertex();
  store_.set_root(r);
  store_.set_children(r, lu, ru);
  gamma_ = {x1, x1, x2};
  d_ = {0, 0, 1};
  first_node_ = x1;
  index_node(x1, lu);
  index_node(x2, ru);
  n_of_node_.resize(std::max(x1, x2) + 1, -1);
  n_of_node_[x2] = x1;
  num_nodes_ = 2;
  tst_ = TernarySearchTree(store_);
}

TrajectoryTree::TrajectoryTree(const TrajectoryTree& other)
    : store_(other.store_),
      gamma_(other.gamma_),
      d_(other.d_),
      leaf_of_node_(other.leaf_of_node_),
      n_of_node_(other.n_of_node_),
      first_node_(other.first_node_),
      num_nodes_(other.num_nodes_),
      tst_(other.tst_.clone_with_base(store_)) {}

void TrajectoryTree::index_node(int node, VertexId leaf) {
  if (node < 0) throw ValidationError("trajectory: negative node id");
  if (node >= static_cast<int>(leaf_of_node_.size())) {
    leaf_of_node_.resize(node + 1, kNone);
  }
  leaf_of_node_[node] = leaf;
}

bool TrajectoryTree::has_node(int node) const {
  return node >= 0 && node < static_cast<int>(leaf_of_node_.size()) &&
         leaf_of_node_[node] != kNone;
}

VertexId TrajectoryTree::leaf_of_node(int node) const {
  if (!has_node(node)) throw LookupError("trajectory: unknown node");
  return leaf_of_node_[node];
}

int TrajectoryTree::parent_node(int node) const {
  if (node < 0 || node >= static_cast<int>(n_of_node_.size()) || n_of_node_[node] < 0) {
    throw LookupError("trajectory: node has no recorded parent");
  }
  return n_of_node_[node];
}

VertexId TrajectoryTree::grow(int t, int parent_node) {
  if (has_node(t)) throw ValidationError("trajectory: node already present");
  const VertexId u = leaf_of_node(parent_node);

  const VertexId mid = store_.add_vertex();   // u'
  const VertexId leaf = store_.add_vertex();  // u''
  gamma_.push_back(parent_node);
  gamma_.push_back(t);
  d_.push_back(d_[u]);
  d_.push_back(d_[u] + 1);
  store_.splice_above(u, mid, leaf, /*leaf_on_left=*/true);
  index_node(t, leaf);
  if (t >= static_cast<int>(n_of_node_.size())) n_of_node_.resize(t + 1, -1);
  n_of_node_[t] = parent_node;
  ++num_nodes_;
  tst_.insert_rebalance(mid, leaf);
  ++structure_version_;  // stamped mark paths are stale now
  return leaf;
}

NuResult TrajectoryTree::nu_bruteforce(VertexId u, VertexId u2) const {
  if (u == u2 || store_.is_leaf(u)) return NuResult::kNeither;
  for (VertexId w = u2; w != kNone; w = store_.parent(w)) {
    if (w == store_.left(u)) return NuResult::kLeft;
    if (w == store_.right(u)) return NuResult::kRight;
    if (w == u) return NuResult::kNeither;
  }
  return NuResult::kNeither;
}

NuResult TrajectoryTree::nu_resolve(VertexId u, VertexId s_star, VertexId s_hat2,
                                    std::size_t hat_idx) const {
  const auto& d = tst_;
  const VertexId s_hat = path_a_[hat_idx];
  if (s_hat != d.child(s_star, TernarySearchTree::kCentre)) return NuResult::kNeither;
  if (d.xi(s_star) == u) {
    return s_hat2 == d.child(s_star, TernarySearchTree::kLeft) ? NuResult::kLeft
                                                               : NuResult::kRight;
  }

  // Follow the recorded path toward Upsilon(u); terminates at an open vertex
  // or when u is the split of a closed vertex.
  for (std::size_t i = hat_idx;; --i) {
    const VertexId s = path_a_[i];
    if (d.kind(s) == TernarySearchTree::Kind::kOpen) return NuResult::kNeither;
    if (d.is_leaf(s)) {
      throw StructuralError("nu: walk reached a closed leaf");
    }
    if (d.xi(s) == u) {
      const VertexId lc = d.child(s, TernarySearchTree::kLeft);
      return d.kind(lc) == TernarySearchTree::Kind::kClosed ? NuResult::kLeft
                                                            : NuResult::kRight;
    }
    if (i == 0) throw StructuralError("nu: walk did not terminate");
  }
}

NuResult TrajectoryTree::nu(VertexId u, VertexId u2) const {
  ++nu_stats_.calls;
  if (u == u2) return NuResult::kNeither;
  const auto& d = tst_;

  // Root paths of the two leaves; their shared suffix ends at the LCA.
  path_a_.clear();
  path_b_.clear();
  for (VertexId s = d.leaf_of_fast(u); s != kNone; s = d.parent(s)) path_a_.push_back(s);
  for (VertexId s = d.leaf_of_fast(u2); s != kNone; s = d.parent(s)) path_b_.push_back(s);
  std::size_t shared = 0;
  while (shared < path_a_.size() && shared < path_b_.size() &&
         path_a_[path_a_.size() - 1 - shared] == path_b_[path_b_.size() - 1 - shared]) {
    ++shared;
  }
  if (shared == 0 || shared == path_a_.size() || shared == path_b_.size()) {
    throw StructuralError("nu: leaves from different trees");
  }
  const std::uint64_t visited = path_a_.size() + path_b_.size() - shared;
  nu_stats_.visited += visited;
  nu_stats_.max_visited = std::max(nu_stats_.max_visited, visited);

  const VertexId s_star = path_a_[path_a_.size() - shared];
  const std::size_t hat_idx = path_a_.size() - shared - 1;  // child of s_star over u
  const VertexId s_hat2 = path_b_[path_b_.size() - shared - 1];
  return nu_resolve(u, s_star, s_hat2, hat_idx);
}

void TrajectoryTree::mark_target(int slot, VertexId target) const {
  MarkSlot& mk = marks_[slot];
  if (mk.target == target && mk.version == structure_version_) return;
  mk.target = target;
  mk.version = structure_version_;
  const std::size_t slots = tst_.slot_count();
  if (mk.epoch.size() < slots) {
    mk.epoch.resize(slots, 0);
    mk.pos.resize(slots, 0);
  }
  if (++mk.current == 0) {
    std::fill(mk.epoch.begin(), mk.epoch.end(), 0);
    mk.current = 1;
  }
  mk.path.clear();
  for (VertexId s = tst_.leaf_of_fast(target); s != kNone; s = tst_.parent(s)) {
    mk.epoch[s] = mk.current;
    mk.pos[s] = static_cast<std::int32_t>(mk.path.size());
    mk.path.push_back(s);
  }
}

NuResult TrajectoryTree::nu_from_marked(VertexId u, int slot) const {
  const MarkSlot& mk = marks_[slot];
  ++nu_stats_.calls;
  if (u == mk.target) return NuResult::kNeither;

  // Single upward walk until the stamped root path of the target is hit;
  // the meeting vertex is the TST lca.
  path_a_.clear();
  VertexId s = tst_.leaf_of_fast(u);
  while (mk.epoch[s] != mk.current) {
    path_a_.push_back(s);
    s = tst_.parent(s);
    if (s == kNone) throw StructuralError("nu: unmarked root path");
  }
  const std::uint64_t visited = path_a_.size() + 1;
  nu_stats_.visited += visited;
  nu_stats_.max_visited = std::max(nu_stats_.max_visited, visited);

  const VertexId s_star = s;
  const std::int32_t meet = mk.pos[s_star];
  if (meet == 0) throw StructuralError("nu: marked path met at a leaf");
  return nu_resolve(u, s_star, mk.path[meet - 1], path_a_.size() - 1);
}

}  // namespace cbnn
