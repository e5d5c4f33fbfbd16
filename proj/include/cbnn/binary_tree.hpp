#pragma once

#include <vector>

#include "cbnn/common.hpp"

namespace cbnn {

// Flat storage for a rooted full binary tree with dense integer vertex ids.
// Both the trajectory tree and the contractions grow by splicing a new
// internal vertex into an existing edge, never by deletion.
class BinaryTreeStore {
 public:
  VertexId add_vertex() {
    parent_.push_back(kNone);
    left_.push_back(kNone);
    right_.push_back(kNone);
    return static_cast<VertexId>(parent_.size()) - 1;
  }

  void set_root(VertexId r) { root_ = r; }
  VertexId root() const { return root_; }
  std::size_t size() const { return parent_.size(); }

  VertexId parent(VertexId u) const { return parent_[u]; }
  VertexId left(VertexId u) const { return left_[u]; }
  VertexId right(VertexId u) const { return right_[u]; }
  void set_children(VertexId u, VertexId l, VertexId r) {
    left_[u] = l;
    right_[u] = r;
    parent_[l] = u;
    parent_[r] = u;
  }

  bool is_leaf(VertexId u) const { return left_[u] == kNone; }
  bool is_internal(VertexId u) const { return left_[u] != kNone; }
  bool valid(VertexId u) const {
    return u >= 0 && u < static_cast<VertexId>(parent_.size());
  }

  // Insert `mid` between non-root `u` and its parent; `leaf` becomes mid's
  // other child, on the left iff `leaf_on_left`.
  void splice_above(VertexId u, VertexId mid, VertexId leaf, bool leaf_on_left) {
    const VertexId p = parent_[u];
    if (p == kNone) throw StructuralError("splice_above: target is the root");
    if (left_[p] == u) {
      left_[p] = mid;
    } else {
      right_[p] = mid;
    }
    parent_[mid] = p;
    if (leaf_on_left) {
      set_children(mid, leaf, u);
    } else {
      set_children(mid, u, leaf);
    }
  }

  // True iff `anc` is an ancestor of `u` or equal to it (parent walk).
  bool is_ancestor_or_self(VertexId anc, VertexId u) const {
    for (VertexId w = u; w != kNone; w = parent_[w]) {
      if (w == anc) return true;
    }
    return false;
  }

  VertexId lca_bruteforce(VertexId a, VertexId b) const {
    int da = depth(a), db = depth(b);
    while (da > db) {
      a = parent_[a];
      --da;
    }
    while (db > da) {
      b = parent_[b];
      --db;
    }
    while (a != b) {
      a = parent_[a];
      b = parent_[b];
    }
    return a;
  }

  int depth(VertexId u) const {
    int d = 0;
    for (VertexId w = parent_[u]; w != kNone; w = parent_[w]) ++d;
    return d;
  }

 private:
  std::vector<VertexId> parent_, left_, right_;
  VertexId root_ = kNone;
};

}  // namespace cbnn
