#pragma once

#include "cbnn/common.hpp"
#include "cbnn/tst.hpp"

namespace cbnn {

class Contraction;

namespace belief {

// Aggregate recomputation for a contraction's TST. Open vertices carry a
// Psi pair in slots 0..1; closed vertices carry a 2x2 Omega in slots 0..3.
TernarySearchTree::AggregateFn aggregate_fn(const Contraction& j);

// kappa_1(j, u) := value, with the cached potentials refreshed along the
// TST path from Upsilon(u) to the root. Cost O(height).
void evidence(Contraction& j, VertexId local_u, double kappa1);

// Lambda(j, u_hat) / 4 for a leaf u_hat, via the omega root-to-leaf pass.
double marginal(const Contraction& j, VertexId local_leaf);

}  // namespace belief
}  // namespace cbnn
