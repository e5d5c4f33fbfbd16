#include "cbnn/tst.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace cbnn {

namespace {

int slot_of(const TernarySearchTree& t, VertexId parent, VertexId child) {
  for (int slot = 0; slot < 3; ++slot) {
    if (t.child(parent, slot) == child) return slot;
  }
  return -1;
}

}  // namespace

TernarySearchTree::TernarySearchTree(const BinaryTreeStore& base) : base_(&base) {
  leaf_of_.assign(base.size(), kNone);
  root_ = build_fragment(Kind::kOpen, base.root(), kNone, kNone);
}

TernarySearchTree TernarySearchTree::clone_with_base(const BinaryTreeStore& base) const {
  TernarySearchTree copy;
  copy.base_ = &base;
  copy.nodes_ = nodes_;
  copy.leaf_of_ = leaf_of_;
  copy.free_ = free_;
  copy.root_ = root_;
  return copy;
}

void TernarySearchTree::set_aggregate_fn(AggregateFn fn) {
  agg_fn_ = std::move(fn);
  if (!agg_fn_ || root_ == kNone) return;
  // Full bottom-up recompute.
  struct Rec {
    TernarySearchTree& t;
    void run(VertexId s) {
      if (!t.is_leaf(s)) {
        for (int slot = 0; slot < 3; ++slot) run(t.nodes_[s].child[slot]);
      }
      t.agg_fn_(t, s);
    }
  } rec{*this};
  rec.run(root_);
}

int TernarySearchTree::depth_of(VertexId s) const {
  int d = 0;
  for (VertexId w = nodes_[s].parent; w != kNone; w = nodes_[w].parent) ++d;
  return d;
}

VertexId TernarySearchTree::leaf_of(VertexId base_v) const {
  if (base_v < 0 || base_v >= static_cast<VertexId>(leaf_of_.size()) ||
      leaf_of_[base_v] == kNone) {
    throw LookupError("tst: base vertex has no leaf entry");
  }
  return leaf_of_[base_v];
}

VertexId TernarySearchTree::lca(VertexId s, VertexId s2) const {
  int d1 = depth_of(s), d2 = depth_of(s2);
  while (d1 > d2) {
    s = nodes_[s].parent;
    --d1;
  }
  while (d2 > d1) {
    s2 = nodes_[s2].parent;
    --d2;
  }
  while (s != s2) {
    if (s == kNone || s2 == kNone) {
      throw StructuralError("tst: lca of vertices from different trees");
    }
    s = nodes_[s].parent;
    s2 = nodes_[s2].parent;
  }
  return s;
}

VertexId TernarySearchTree::alloc_node() {
  if (!free_.empty()) {
    VertexId s = free_.back();
    free_.pop_back();
    nodes_[s] = Node{};
    return s;
  }
  nodes_.emplace_back();
  return static_cast<VertexId>(nodes_.size()) - 1;
}

void TernarySearchTree::free_subtree(VertexId s) {
  if (!is_leaf(s)) {
    for (int slot = 0; slot < 3; ++slot) free_subtree(nodes_[s].child[slot]);
  }
  free_.push_back(s);
}

VertexId TernarySearchTree::make_leaf(Kind kind, VertexId mu, VertexId mu_prime,
                                      VertexId parent) {
  VertexId s = alloc_node();
  nodes_[s].mu = mu;
  nodes_[s].mu_prime = kind == Kind::kClosed ? mu_prime : kNone;
  nodes_[s].parent = parent;
  nodes_[s].n_leaves = 1;
  nodes_[s].height = 0;
  leaf_of_[mu] = s;
  if (agg_fn_) agg_fn_(*this, s);
  return s;
}

void TernarySearchTree::collect_fragment(Kind kind, VertexId mu, VertexId mu_prime,
                                         std::vector<VertexId>& out) const {
  const auto& b = *base_;
  out.clear();
  std::vector<VertexId> stack{mu};
  while (!stack.empty()) {
    VertexId v = stack.back();
    stack.pop_back();
    out.push_back(v);
    if (b.is_internal(v) && !(kind == Kind::kClosed && v == mu_prime)) {
      stack.push_back(b.left(v));
      stack.push_back(b.right(v));
    }
  }
}

VertexId TernarySearchTree::build_fragment(Kind kind, VertexId mu, VertexId mu_prime,
                                           VertexId parent) {
  const auto& b = *base_;
  if (kind == Kind::kOpen ? b.is_leaf(mu) : mu == mu_prime) {
    return make_leaf(kind, mu, mu == mu_prime ? mu : kNone, parent);
  }

  std::vector<VertexId> frag;
  collect_fragment(kind, mu, mu_prime, frag);
  const std::int32_t n = static_cast<std::int32_t>(frag.size());

  // Subtree sizes restricted to the fragment. Collection order puts parents
  // before children, so a reverse sweep accumulates bottom-up; every
  // fragment vertex except mu has its parent in the fragment.
  if (frag_sizes_.size() < b.size()) frag_sizes_.resize(b.size());
  for (VertexId v : frag) frag_sizes_[v] = 1;
  for (auto it = frag.rbegin(); it != frag.rend(); ++it) {
    if (*it != mu) frag_sizes_[b.parent(*it)] += frag_sizes_[*it];
  }

  // Split-vertex choice: minimise the largest child fragment, ties to the
  // smallest base id. Closed fragments restrict candidates to the path from
  // mu to the parent of mu_prime, and among minimisers prefer one whose
  // closed parts stay at or below n/2 + 1: a closed part larger than that
  // cannot shrink at the next level, while an oversized open part always
  // halves, so the preference is what keeps two consecutive levels shrinking
  // by a constant factor. Such a minimiser always exists (when the minimax
  // exceeds n/2 + 1 the excess is a single off-path subtree, and splitting
  // at its attachment vertex makes it the open child).
  VertexId best = kNone;
  std::int32_t best_max = n + 1;
  auto parts_of = [&](VertexId w, std::int32_t& l, std::int32_t& r, std::int32_t& c) {
    l = frag_sizes_[b.left(w)];
    r = frag_sizes_[b.right(w)];
    c = n - l - r;
  };
  if (kind == Kind::kOpen) {
    for (VertexId v : frag) {
      if (!b.is_internal(v)) continue;
      std::int32_t l, r, c;
      parts_of(v, l, r, c);
      const std::int32_t m = std::max(c, std::max(l, r));
      if (m < best_max || (m == best_max && v < best)) {
        best_max = m;
        best = v;
      }
    }
  } else {
    if (hole_step_.size() < b.size()) hole_step_.resize(b.size(), kNone);
    for (VertexId cur = mu_prime; cur != mu;) {
      VertexId p = b.parent(cur);
      hole_step_[p] = cur;
      cur = p;
    }
    for (VertexId w = mu; w != mu_prime; w = hole_step_[w]) {
      std::int32_t l, r, c;
      parts_of(w, l, r, c);
      if (std::max(c, std::max(l, r)) < best_max) {
        best_max = std::max(c, std::max(l, r));
      }
    }
    bool best_tame = false;
    for (VertexId w = mu; w != mu_prime; w = hole_step_[w]) {
      std::int32_t l, r, c;
      parts_of(w, l, r, c);
      if (std::max(c, std::max(l, r)) != best_max) continue;
      const std::int32_t closed_side = hole_step_[w] == b.left(w) ? l : r;
      const bool tame = std::max(c, closed_side) <= n / 2 + 1;
      if (best == kNone || (tame && !best_tame) || (tame == best_tame && w < best)) {
        best = w;
        best_tame = tame;
      }
    }
  }
  const VertexId split = best;

  // Child fragment descriptors, fixed before recursion clobbers scratch.
  const VertexId lw = b.left(split), rw = b.right(split);
  Kind lkind = Kind::kOpen, rkind = Kind::kOpen;
  VertexId lmp = kNone, rmp = kNone;
  if (kind == Kind::kClosed) {
    if (hole_step_[split] == lw) {
      lkind = Kind::kClosed;
      lmp = mu_prime;
    } else {
      rkind = Kind::kClosed;
      rmp = mu_prime;
    }
  }

  VertexId s = alloc_node();
  nodes_[s].mu = mu;
  nodes_[s].mu_prime = kind == Kind::kClosed ? mu_prime : kNone;
  nodes_[s].xi = split;
  nodes_[s].parent = parent;

  const VertexId cl = build_fragment(lkind, lw, lmp, s);
  const VertexId cc = build_fragment(Kind::kClosed, mu, split, s);
  const VertexId cr = build_fragment(rkind, rw, rmp, s);
  nodes_[s].child = {cl, cc, cr};
  nodes_[s].n_leaves = nodes_[cl].n_leaves + nodes_[cc].n_leaves + nodes_[cr].n_leaves;
  nodes_[s].height =
      1 + std::max(nodes_[cl].height, std::max(nodes_[cc].height, nodes_[cr].height));
  if (agg_fn_) agg_fn_(*this, s);
  return s;
}

void TernarySearchTree::recompute_upward(VertexId s, bool with_aggregates) {
  for (VertexId w = s; w != kNone; w = nodes_[w].parent) {
    const auto& c = nodes_[w].child;
    nodes_[w].height =
        1 + std::max(nodes_[c[0]].height, std::max(nodes_[c[1]].height, nodes_[c[2]].height));
    if (with_aggregates && agg_fn_) agg_fn_(*this, w);
  }
}

void TernarySearchTree::insert_rebalance(VertexId new_internal, VertexId new_leaf,
                                         VertexId dirty_leaf) {
  const auto& b = *base_;
  if (!b.valid(new_internal) || !b.valid(new_leaf) || b.parent(new_leaf) != new_internal) {
    throw StructuralError("tst insert: splice shape violated");
  }
  const VertexId uhat =
      b.left(new_internal) == new_leaf ? b.right(new_internal) : b.left(new_internal);
  const VertexId uprime = b.parent(new_internal);
  if (uhat == kNone || uprime == kNone || b.parent(uhat) != new_internal) {
    throw StructuralError("tst insert: splice shape violated");
  }
  leaf_of_.resize(b.size(), kNone);
  if (uhat >= static_cast<VertexId>(leaf_of_.size()) || leaf_of_[uhat] == kNone) {
    throw StructuralError("tst insert: spliced-over vertex unknown to the TST");
  }
  if (nodes_[root_].n_leaves + 2u > kMaxLeaves) {
    throw SizeError("tst insert: base tree exceeds 2^24 vertices");
  }

  path_.clear();
  for (VertexId s = leaf_of_[uhat]; s != kNone; s = nodes_[s].parent) path_.push_back(s);

  // The unique split at the subdivided edge: xi == old parent of uhat.
  std::size_t idx = 0;
  for (std::size_t i = 1; i < path_.size(); ++i) {
    if (nodes_[path_[i]].xi == uprime) {
      idx = i;
      break;
    }
  }
  if (idx == 0) throw StructuralError("tst insert: no split at the spliced edge");
  const VertexId s_star = path_[idx];
  const VertexId pos = path_[idx - 1];
  const int slot = slot_of(*this, s_star, pos);
  if (slot != kLeft && slot != kRight) {
    throw StructuralError("tst insert: spliced fragment sits in the centre child");
  }

  // O(1) patch: a new split at new_internal whose children are the old
  // fragment (unchanged), the new base leaf, and {new_internal} itself.
  const VertexId np = alloc_node();
  nodes_[np].mu = new_internal;
  nodes_[np].mu_prime = nodes_[pos].mu_prime;  // closed iff the old spot was
  nodes_[np].xi = new_internal;
  nodes_[np].parent = s_star;
  const VertexId lu = make_leaf(Kind::kOpen, new_leaf, kNone, np);
  const VertexId lc = make_leaf(Kind::kClosed, new_internal, new_internal, np);
  if (b.left(new_internal) == new_leaf) {
    nodes_[np].child = {lu, lc, pos};
  } else {
    nodes_[np].child = {pos, lc, lu};
  }
  nodes_[pos].parent = np;
  nodes_[s_star].child[slot] = np;
  nodes_[np].n_leaves = nodes_[pos].n_leaves + 2;
  nodes_[np].height = nodes_[pos].height + 1;
  const bool deferred = dirty_leaf != kNone && agg_fn_;
  if (!deferred && agg_fn_) agg_fn_(*this, np);

  for (VertexId s = s_star; s != kNone; s = nodes_[s].parent) {
    nodes_[s].n_leaves += 2;
  }
  recompute_upward(s_star, !deferred);

  // Weight-balance walk from the root down the insert path, on pairs of
  // levels: a fragment two levels down must hold at most 5/8 of its
  // grandparent. Closed splits can be forced lopsided at a single level
  // (an oversized open child), but centroid builds guarantee every
  // grandchild is at most half plus one, so the two-level rule both fires
  // rarely (amortised rebuilds) and pins the height to
  // 2 log_{8/5}(n) + O(1) < 4 log2(n) + 4.
  path_[idx - 1] = np;  // the insert path now runs through the patch
  path_.insert(path_.begin() + (idx - 1), pos);
  VertexId bad = kNone;
  for (std::size_t i = path_.size(); i-- > 2;) {
    const VertexId v = path_[i];
    const VertexId grand = path_[i - 2];
    if (8 * nodes_[grand].n_leaves > 5 * nodes_[v].n_leaves) {
      bad = v;
      break;
    }
  }
  if (bad != kNone) rebuild_at(bad, deferred);
  // A single pass now covers the patched split, the changed leaf and every
  // ancestor the structure work dirtied (all of them sit on this root path).
  if (deferred) refresh_leaf_path(dirty_leaf);
}

void TernarySearchTree::rebuild_at(VertexId s, bool defer_upward_aggregates) {
  const Kind k = kind(s);
  const VertexId m = nodes_[s].mu;
  const VertexId mp = nodes_[s].mu_prime;
  const VertexId p = nodes_[s].parent;
  const int slot = p == kNone ? -1 : slot_of(*this, p, s);
  free_subtree(s);
  const VertexId nv = build_fragment(k, m, mp, p);
  if (p == kNone) {
    root_ = nv;
  } else {
    nodes_[p].child[slot] = nv;
    recompute_upward(p, !defer_upward_aggregates);
  }
}

void TernarySearchTree::force_rebuild() { rebuild_at(root_); }

void TernarySearchTree::refresh_leaf_path(VertexId base_v) {
  if (!agg_fn_) return;
  // Two phases: walk up first, touching each ancestor's children early so
  // the bottom-up recompute runs against resident lines.
  refresh_path_.clear();
  for (VertexId s = leaf_of(base_v); s != kNone; s = nodes_[s].parent) {
    refresh_path_.push_back(s);
    const auto& c = nodes_[s].child;
    if (c[kCentre] != kNone) {
      __builtin_prefetch(&nodes_[c[0]]);
      __builtin_prefetch(&nodes_[c[1]]);
      __builtin_prefetch(&nodes_[c[2]]);
    }
  }
  for (VertexId s : refresh_path_) agg_fn_(*this, s);
}

void TernarySearchTree::validate_rec(VertexId s, Kind kind, VertexId mu, VertexId mu_prime,
                                     const std::vector<std::int32_t>& tin,
                                     const std::vector<std::int32_t>& tout,
                                     std::vector<std::string>& errors) const {
  const auto& b = *base_;
  auto fail = [&](const std::string& what) {
    errors.push_back("tst vertex " + std::to_string(s) + ": " + what);
  };
  auto anc = [&](VertexId a, VertexId u) {
    return tin[a] <= tin[u] && tout[u] <= tout[a];
  };
  if (this->kind(s) != kind) fail("kind mismatch");
  if (nodes_[s].mu != mu) fail("mu mismatch");
  if (kind == Kind::kClosed && nodes_[s].mu_prime != mu_prime) fail("mu_prime mismatch");
  if (kind == Kind::kClosed &&
      !(anc(mu, mu_prime) && b.is_internal(mu_prime))) {
    fail("mu_prime not an internal descendant of mu");
  }

  if (is_leaf(s)) {
    if (kind == Kind::kOpen && !b.is_leaf(mu)) fail("open leaf over internal base vertex");
    if (kind == Kind::kClosed && mu != mu_prime) fail("closed leaf with mu != mu_prime");
    if (nodes_[s].n_leaves != 1) fail("leaf count mismatch");
    return;
  }

  const VertexId split = nodes_[s].xi;
  if (split == kNone || !b.is_internal(split) || !anc(mu, split)) {
    fail("invalid split vertex");
    return;
  }
  if (kind == Kind::kClosed && (!anc(split, mu_prime) || split == mu_prime)) {
    fail("split off the mu..mu_prime path");
    return;
  }

  const VertexId lw = b.left(split), rw = b.right(split);
  Kind lkind = Kind::kOpen, rkind = Kind::kOpen;
  VertexId lmp = kNone, rmp = kNone;
  if (kind == Kind::kClosed) {
    if (anc(lw, mu_prime)) {
      lkind = Kind::kClosed;
      lmp = mu_prime;
    } else {
      rkind = Kind::kClosed;
      rmp = mu_prime;
    }
  }
  validate_rec(nodes_[s].child[kLeft], lkind, lw, lmp, tin, tout, errors);
  validate_rec(nodes_[s].child[kCentre], Kind::kClosed, mu, split, tin, tout, errors);
  validate_rec(nodes_[s].child[kRight], rkind, rw, rmp, tin, tout, errors);

  const auto& c = nodes_[s].child;
  if (nodes_[s].n_leaves !=
      nodes_[c[0]].n_leaves + nodes_[c[1]].n_leaves + nodes_[c[2]].n_leaves) {
    fail("leaf count mismatch");
  }
  const int h = 1 + std::max(nodes_[c[0]].height,
                             std::max(nodes_[c[1]].height, nodes_[c[2]].height));
  if (nodes_[s].height != h) fail("height cache mismatch");
}

std::vector<std::string> TernarySearchTree::validate() const {
  std::vector<std::string> errors;
  const auto& b = *base_;
  if (root_ == kNone) {
    errors.push_back("tst: empty");
    return errors;
  }

  // Euler intervals for O(1) base-tree ancestry tests.
  std::vector<std::int32_t> tin(b.size()), tout(b.size());
  std::int32_t clock = 0;
  std::vector<VertexId> stack{b.root()};
  std::vector<VertexId> order;
  while (!stack.empty()) {
    VertexId v = stack.back();
    stack.pop_back();
    order.push_back(v);
    tin[v] = clock++;
    if (b.is_internal(v)) {
      stack.push_back(b.left(v));
      stack.push_back(b.right(v));
    }
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    VertexId v = *it;
    tout[v] = b.is_internal(v) ? std::max(tout[b.left(v)], tout[b.right(v)]) : tin[v];
  }

  validate_rec(root_, Kind::kOpen, b.root(), kNone, tin, tout, errors);

  std::size_t leaf_entries = 0;
  for (VertexId u = 0; u < static_cast<VertexId>(b.size()); ++u) {
    if (u >= static_cast<VertexId>(leaf_of_.size()) || leaf_of_[u] == kNone) {
      errors.push_back("tst: base vertex " + std::to_string(u) + " has no leaf");
      continue;
    }
    ++leaf_entries;
    const VertexId s = leaf_of_[u];
    if (!is_leaf(s) || nodes_[s].mu != u) {
      errors.push_back("tst: leaf index broken at base vertex " + std::to_string(u));
    }
  }
  if (leaf_entries != b.size() ||
      nodes_[root_].n_leaves != static_cast<std::int32_t>(b.size())) {
    errors.push_back("tst: leaf index is not a bijection");
  }

  const double bound = 4.0 * std::log2(static_cast<double>(b.size())) + 4.0;
  if (static_cast<double>(height()) > bound) {
    errors.push_back("tst: height " + std::to_string(height()) + " exceeds bound " +
                     std::to_string(bound));
  }
  return errors;
}

}  // namespace cbnn
