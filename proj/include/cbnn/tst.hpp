#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cbnn/binary_tree.hpp"
#include "cbnn/common.hpp"

namespace cbnn {

// Balanced ternary search tree over a dynamic full binary tree.
//
// Every TST vertex s stands for a fragment of the base tree: the whole
// subtree below mu(s) when s is open, or that subtree minus the proper
// descendants of mu_prime(s) when s is closed. Internal vertices split
// their fragment three ways at xi(s); each base vertex ends up as the mu
// of exactly one TST leaf, reachable through leaf_of().
//
// Balance is maintained scapegoat-style: an insertion splices an O(1)
// patch around the affected leaf position, then the highest vertex on the
// root path whose largest child fragment exceeds beta = 3/4 of its own is
// rebuilt from scratch by centroid splitting.
class TernarySearchTree {
 public:
  enum class Kind : std::uint8_t { kOpen, kClosed };
  enum Slot : int { kLeft = 0, kCentre = 1, kRight = 2 };

  // Recomputes the aggregate of one vertex from its children (internal) or
  // from base-tree data (leaf). Invoked bottom-up on every restructured
  // vertex when set.
  using AggregateFn = std::function<void(TernarySearchTree&, VertexId)>;

  TernarySearchTree() = default;
  explicit TernarySearchTree(const BinaryTreeStore& base);

  // Deep copy pointing at another (identical) base store. Aggregate
  // callbacks are not copied; the owner rebinds them.
  TernarySearchTree clone_with_base(const BinaryTreeStore& base) const;

  // Installing a callback recomputes every aggregate bottom-up.
  void set_aggregate_fn(AggregateFn fn);
  // Rebind without recomputation (aggregate values are already current).
  void rebind_aggregate_fn(AggregateFn fn) { agg_fn_ = std::move(fn); }
  bool has_aggregates() const { return static_cast<bool>(agg_fn_); }

  VertexId root() const { return root_; }
  std::size_t vertex_count() const { return nodes_.size() - free_.size(); }
  // Upper bound on vertex ids (including recycled slots).
  std::size_t slot_count() const { return nodes_.size(); }

  Kind kind(VertexId s) const {
    return nodes_[s].mu_prime == kNone ? Kind::kOpen : Kind::kClosed;
  }
  VertexId mu(VertexId s) const { return nodes_[s].mu; }
  VertexId mu_prime(VertexId s) const { return nodes_[s].mu_prime; }
  VertexId xi(VertexId s) const { return nodes_[s].xi; }
  VertexId parent(VertexId s) const { return nodes_[s].parent; }
  VertexId child(VertexId s, int slot) const { return nodes_[s].child[slot]; }
  bool is_leaf(VertexId s) const { return nodes_[s].child[kCentre] == kNone; }
  std::int32_t leaf_count(VertexId s) const {
    return static_cast<std::int32_t>(nodes_[s].n_leaves);
  }

  int height() const { return root_ == kNone ? 0 : nodes_[root_].height; }
  int depth_of(VertexId s) const;

  // The unique TST leaf whose mu equals `base_v` (the Upsilon map).
  VertexId leaf_of(VertexId base_v) const;
  // Unchecked variant for internal hot paths; base_v must be indexed.
  VertexId leaf_of_fast(VertexId base_v) const { return leaf_of_[base_v]; }

  // Deepest common ancestor of two TST vertices, by equalising depths.
  VertexId lca(VertexId s, VertexId s2) const;

  // The base tree was just updated by splicing `new_internal` between an
  // existing non-root vertex and its parent, with `new_leaf` as the other
  // child of `new_internal`. Restores TST validity and the height bound.
  // When the caller also changed base data under `dirty_leaf` (it must lie
  // under the spliced-over vertex), the aggregate passes are folded into a
  // single refresh of that leaf's root path.
  void insert_rebalance(VertexId new_internal, VertexId new_leaf,
                        VertexId dirty_leaf = kNone);

  // Recompute aggregates along the path from leaf_of(base_v) to the root.
  void refresh_leaf_path(VertexId base_v);

  std::array<double, 4>& aggregate(VertexId s) { return nodes_[s].aggregate; }
  const std::array<double, 4>& aggregate(VertexId s) const {
    return nodes_[s].aggregate;
  }

  // Rebuild the whole TST from the base tree (test hook; marginals must be
  // invariant under this).
  void force_rebuild();

  // Replays the construction rules from the root and reports every
  // discrepancy; empty means structurally sound.
  std::vector<std::string> validate() const;

  const BinaryTreeStore& base() const { return *base_; }

 private:
  // One vertex fits one cache line: potential payload plus topology. A
  // vertex is closed exactly when mu_prime is set, so the kind needs no
  // field of its own; 24 bits of leaf count cap the base tree at 2^24
  // vertices (guarded on insert), whose height bound fits well in 8 bits.
  struct alignas(64) Node {
    std::array<double, 4> aggregate{};
    VertexId parent = kNone;
    std::array<VertexId, 3> child{kNone, kNone, kNone};
    VertexId mu = kNone;
    VertexId mu_prime = kNone;
    VertexId xi = kNone;
    std::uint32_t n_leaves : 24 = 1;
    std::uint32_t height : 8 = 0;
  };
  static_assert(sizeof(Node) == 64);
  static constexpr std::uint32_t kMaxLeaves = (1u << 24) - 1;

  const BinaryTreeStore* base_ = nullptr;
  std::vector<Node> nodes_;
  std::vector<VertexId> leaf_of_;  // base id -> TST leaf id
  std::vector<VertexId> free_;
  VertexId root_ = kNone;
  AggregateFn agg_fn_;

  // Scratch reused across operations (single-threaded per handle).
  mutable std::vector<VertexId> path_;
  std::vector<VertexId> refresh_path_;
  std::vector<VertexId> hole_step_;         // per base id: next vertex toward mu_prime
  std::vector<std::int32_t> frag_sizes_;    // per base id: subtree size within fragment

  VertexId alloc_node();
  void free_subtree(VertexId s);
  VertexId make_leaf(Kind kind, VertexId mu, VertexId mu_prime, VertexId parent);
  // Centroid-split construction of the fragment described by (kind, mu,
  // mu_prime) in the current base tree.
  VertexId build_fragment(Kind kind, VertexId mu, VertexId mu_prime, VertexId parent);
  void collect_fragment(Kind kind, VertexId mu, VertexId mu_prime,
                        std::vector<VertexId>& out) const;
  void recompute_upward(VertexId s, bool with_aggregates = true);
  void rebuild_at(VertexId s, bool defer_upward_aggregates = false);
  void validate_rec(VertexId s, Kind kind, VertexId mu, VertexId mu_prime,
                    const std::vector<std::int32_t>& tin,
                    const std::vector<std::int32_t>& tout,
                    std::vector<std::string>& errors) const;
};

}  // namespace cbnn
