#include "cbnn/belief.hpp"

#include <cmath>
#include <vector>

#include "cbnn/contraction.hpp"

namespace cbnn {
namespace belief {

namespace {

using Tst = TernarySearchTree;

// Base cases read tau and kappa of the single fragment vertex; internal
// vertices combine children. Open vertices store Psi in slots 0..1, closed
// vertices store Omega row-major in slots 0..3.
void recompute(const Contraction& j, Tst& d, VertexId s) {
  auto& out = d.aggregate(s);
  if (d.is_leaf(s)) {
    const VertexId u = d.mu(s);
    const double f = j.flip(u);
    const double k1 = j.kappa1(u);
    if (d.kind(s) == Tst::Kind::kOpen) {
      out[0] = (1.0 - f) + f * k1;
      out[1] = f + (1.0 - f) * k1;
    } else {
      out[0] = 1.0 - f;
      out[1] = f * k1;
      out[2] = f;
      out[3] = (1.0 - f) * k1;
    }
    return;
  }

  const VertexId cl = d.child(s, Tst::kLeft);
  const VertexId cc = d.child(s, Tst::kCentre);
  const VertexId cr = d.child(s, Tst::kRight);
  const auto& oc = d.aggregate(cc);
  if (d.kind(s) == Tst::Kind::kOpen) {
    const auto& pl = d.aggregate(cl);
    const auto& pr = d.aggregate(cr);
    for (int i = 0; i < 2; ++i) {
      out[i] = oc[i * 2 + 0] * pl[0] * pr[0] + oc[i * 2 + 1] * pl[1] * pr[1];
    }
  } else {
    const bool left_closed = d.kind(cl) == Tst::Kind::kClosed;
    const auto& o1 = d.aggregate(left_closed ? cl : cr);  // closed side
    const auto& p2 = d.aggregate(left_closed ? cr : cl);  // open side
    for (int i = 0; i < 2; ++i) {
      for (int ip = 0; ip < 2; ++ip) {
        out[i * 2 + ip] = oc[i * 2 + 0] * o1[0 * 2 + ip] * p2[0] +
                          oc[i * 2 + 1] * o1[1 * 2 + ip] * p2[1];
      }
    }
  }
}

}  // namespace

TernarySearchTree::AggregateFn aggregate_fn(const Contraction& j) {
  const Contraction* jp = &j;
  return [jp](Tst& d, VertexId s) { recompute(*jp, d, s); };
}

void evidence(Contraction& j, VertexId local_u, double kappa1) {
  if (!(kappa1 >= 0.0) || !std::isfinite(kappa1)) {
    throw ValidationError("evidence: kappa must be finite and nonnegative");
  }
  j.set_kappa1(local_u, kappa1);
  j.tst().refresh_leaf_path(local_u);
}

double marginal(const Contraction& j, VertexId local_leaf) {
  if (!j.is_leaf(local_leaf)) {
    throw ValidationError("marginal: queries are leaf-only");
  }
  const auto& d = j.tst();

  static thread_local std::vector<VertexId> path;
  path.clear();
  for (VertexId s = d.leaf_of(local_leaf); s != kNone; s = d.parent(s)) {
    path.push_back(s);
    if (!d.is_leaf(s)) {
      // Touch the off-path children early; the downward pass reads their
      // potentials right after this walk finishes.
      __builtin_prefetch(&d.aggregate(d.child(s, Tst::kLeft)));
      __builtin_prefetch(&d.aggregate(d.child(s, Tst::kCentre)));
      __builtin_prefetch(&d.aggregate(d.child(s, Tst::kRight)));
    }
  }

  // omega: boundary-above sum per state of the top boundary of the current
  // fragment; omega_hole: sum over everything hanging below the fragment's
  // hole, per state of mu_prime. Root: empty outside, phantom pinned.
  std::array<double, 2> om{1.0, 1.0};
  std::array<double, 2> om_hole{0.0, 0.0};
  for (std::size_t i = path.size(); i-- > 1;) {
    const VertexId s = path[i];
    const VertexId nxt = path[i - 1];
    const VertexId cl = d.child(s, Tst::kLeft);
    const VertexId cc = d.child(s, Tst::kCentre);
    const VertexId cr = d.child(s, Tst::kRight);
    const auto& oc = d.aggregate(cc);
    const auto fold = [&](int i2) {  // sum_i' om[i'] * Omega_centre[i', i2]
      return om[0] * oc[0 * 2 + i2] + om[1] * oc[1 * 2 + i2];
    };
    if (d.kind(s) == Tst::Kind::kOpen) {
      const auto& pl = d.aggregate(cl);
      const auto& pr = d.aggregate(cr);
      if (nxt == cc) {
        om_hole = {pl[0] * pr[0], pl[1] * pr[1]};
      } else if (nxt == cl) {
        om = {pr[0] * fold(0), pr[1] * fold(1)};
      } else {
        om = {pl[0] * fold(0), pl[1] * fold(1)};
      }
    } else {
      const bool left_closed = d.kind(cl) == Tst::Kind::kClosed;
      const VertexId sc = left_closed ? cl : cr;  // closed child (holds the hole)
      const VertexId so = left_closed ? cr : cl;  // open child
      const auto& o1 = d.aggregate(sc);
      const auto& p2 = d.aggregate(so);
      if (nxt == cc) {
        om_hole = {p2[0] * (o1[0] * om_hole[0] + o1[1] * om_hole[1]),
                   p2[1] * (o1[2] * om_hole[0] + o1[3] * om_hole[1])};
      } else if (nxt == sc) {
        om = {p2[0] * fold(0), p2[1] * fold(1)};
      } else {
        const double h0 = o1[0] * om_hole[0] + o1[1] * om_hole[1];
        const double h1 = o1[2] * om_hole[0] + o1[3] * om_hole[1];
        om = {fold(0) * h0, fold(1) * h1};
      }
    }
  }

  // Absorb the queried leaf itself with its state pinned to 1.
  const VertexId u = d.mu(path.front());
  const double f = j.flip(u);
  const double lambda = (om[0] * f + om[1] * (1.0 - f)) * j.kappa1(u);
  return lambda / 4.0;
}

}  // namespace belief
}  // namespace cbnn
