#pragma once

#include <cstdint>
#include <vector>

#include "cbnn/binary_tree.hpp"
#include "cbnn/common.hpp"
#include "cbnn/tst.hpp"

namespace cbnn {

enum class NuResult : std::uint8_t { kLeft, kRight, kNeither };

// The growing binarised trial tree Z: gamma maps vertices to trial nodes,
// d counts parent-link applications back to the first node, and subtree
// membership queries are answered through the balanced TST of Z.
class TrajectoryTree {
 public:
  TrajectoryTree(int x1, int x2);
  TrajectoryTree(const TrajectoryTree& other);
  TrajectoryTree& operator=(const TrajectoryTree&) = delete;

  // Splices the node for trial t above the leaf of parent_node; returns the
  // new leaf. parent_node must already be present, t must not.
  VertexId grow(int t, int parent_node);

  // kLeft / kRight iff u2 lies in the subtree below the left / right child
  // of u; kNeither otherwise (including u == u2).
  NuResult nu(VertexId u, VertexId u2) const;
  NuResult nu_bruteforce(VertexId u, VertexId u2) const;

  // Repeated-target variant: mark_target stamps the TST root path of a
  // fixed vertex into one of two slots; nu_from_marked then answers
  // nu(u, target) with a single walk from u's leaf. Marks stay valid until
  // the TST is next restructured. Used by the contraction insert descents,
  // which probe many split vertices against the same one or two targets.
  void mark_target(int slot, VertexId target) const;
  NuResult nu_from_marked(VertexId u, int slot) const;

  VertexId leaf_of_node(int node) const;
  bool has_node(int node) const;
  int gamma(VertexId u) const { return gamma_[u]; }
  int depth_d(VertexId u) const { return d_[u]; }
  int parent_node(int node) const;  // n(x), undefined for the first node
  int num_nodes() const { return num_nodes_; }

  const BinaryTreeStore& base() const { return store_; }
  const TernarySearchTree& tst() const { return tst_; }
  TernarySearchTree& tst() { return tst_; }

  struct NuStats {
    std::uint64_t calls = 0;
    std::uint64_t visited = 0;
    std::uint64_t max_visited = 0;
  };
  const NuStats& nu_stats() const { return nu_stats_; }
  void reset_nu_stats() { nu_stats_ = NuStats{}; }

 private:
  BinaryTreeStore store_;
  std::vector<int> gamma_;
  std::vector<int> d_;
  std::vector<VertexId> leaf_of_node_;  // node id -> leaf vertex
  std::vector<int> n_of_node_;          // node id -> parent node
  int first_node_ = 0;
  int num_nodes_ = 0;
  TernarySearchTree tst_;

  mutable std::vector<VertexId> path_a_, path_b_;
  mutable NuStats nu_stats_;

  // Marked-target scratch: per TST vertex, the epoch it was stamped in and
  // its index along the stamped root path (two independent slots).
  struct MarkSlot {
    std::vector<std::uint32_t> epoch;
    std::vector<std::int32_t> pos;
    std::vector<VertexId> path;
    VertexId target = kNone;
    std::uint32_t current = 0;
    std::uint64_t version = ~std::uint64_t{0};  // structure version at stamp time
  };
  mutable MarkSlot marks_[2];
  std::uint64_t structure_version_ = 0;  // bumped whenever H(Z) restructures

  NuResult nu_resolve(VertexId u, VertexId s_star, VertexId s_hat2,
                      std::size_t hat_idx) const;
  void index_node(int node, VertexId leaf);
};

}  // namespace cbnn
