#include "cbnn/oracle.hpp"

#include <cmath>

#include "cbnn/canprop.hpp"

namespace cbnn {
namespace oracle {

int policy_complexity(const std::vector<int>& actions, const std::vector<int>& parents) {
  if (actions.size() != parents.size()) {
    throw ValidationError("policy_complexity: mismatched lengths");
  }
  int phi = 1;
  for (std::size_t t = 2; t <= actions.size(); ++t) {
    const int p = parents[t - 1];
    if (p < 1 || p >= static_cast<int>(t)) {
      throw ValidationError("policy_complexity: parent out of range");
    }
    phi += actions[t - 1] != actions[p - 1] ? 1 : 0;
  }
  return phi;
}

double wtilde_sum(const Contraction& j, const TrajectoryTree& z, VertexId local_leaf) {
  const int t = z.num_nodes();
  if (t > 20) throw SizeError("wtilde_sum: more than 2^20 subsets");
  if (!j.is_leaf(local_leaf)) throw ValidationError("wtilde_sum: not a leaf");
  const double inv_t = 1.0 / static_cast<double>(j.phi().horizon());

  // lambda'(x) per node: the leaf kappa_1 where the contraction has the
  // node's leaf, 1 elsewhere.
  std::vector<double> lambda(t + 1, 1.0);
  for (int node = 1; node <= t; ++node) {
    const VertexId local = j.local_of_z(z.leaf_of_node(node));
    if (local != kNone && j.is_leaf(local)) lambda[node] = j.kappa(local)[1];
  }
  const int target = z.gamma(j.z_of(local_leaf));

  double total = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << t); ++mask) {
    if (!(mask >> (target - 1) & 1u)) continue;
    double term = 1.0;
    for (int node = 1; node <= t; ++node) {
      const bool in = (mask >> (node - 1)) & 1u;
      if (in) term *= lambda[node];
      if (node != 1) {
        const bool parent_in = (mask >> (z.parent_node(node) - 1)) & 1u;
        term *= in != parent_in ? inv_t : 1.0 - inv_t;
      }
    }
    total += term;
  }
  return total;
}

double lambda_bruteforce(const Contraction& j, VertexId local_vertex) {
  const int m = j.size();
  if (m > 25) throw SizeError("lambda_bruteforce: more than 2^25 assignments");
  const VertexId root = j.root_local();
  std::vector<std::array<double, 4>> tau(m);
  std::vector<std::array<double, 2>> kappa(m);
  for (VertexId u = 0; u < m; ++u) {
    tau[u] = j.tau(u);
    kappa[u] = j.kappa(u);
  }
  double total = 0.0;
  for (std::uint32_t f = 0; f < (1u << m); ++f) {
    if (!(f >> local_vertex & 1u)) continue;
    double term = 1.0;
    for (VertexId u = 0; u < m; ++u) {
      if (u == root) continue;
      const int iu = f >> u & 1u;
      const int ip = f >> j.store().parent(u) & 1u;
      term *= tau[u][ip * 2 + iu] * kappa[u][iu];
    }
    total += term;
  }
  return total;
}

double w1_total_mass(int horizon, const std::vector<int>& parents) {
  const int t = static_cast<int>(parents.size());
  if (t > 20) throw SizeError("w1_total_mass: more than 2^20 subsets");
  const double inv_t = 1.0 / static_cast<double>(horizon);
  double total = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << t); ++mask) {
    double term = 0.25;
    for (int node = 2; node <= t; ++node) {
      const bool in = (mask >> (node - 1)) & 1u;
      const bool parent_in = (mask >> (parents[node - 1] - 1)) & 1u;
      term *= in != parent_in ? inv_t : 1.0 - inv_t;
    }
    total += term;
  }
  return total;
}

double exp4_prior(int horizon, int num_actions, int phi) {
  const double t = static_cast<double>(horizon);
  const double k = static_cast<double>(num_actions);
  return (1.0 / k) * std::pow(t * (k - 1.0), -static_cast<double>(phi)) *
         std::pow(1.0 - 1.0 / t, static_cast<double>(horizon - 1 - phi));
}

// ---------------------------------------------------------------------------

CanpropOracle::CanpropOracle(int horizon, int num_actions, double eta)
    : T_(horizon), K_(num_actions), eta_(eta) {
  if (!is_power_of_two(K_) || K_ < 2) {
    throw ConfigError("canprop oracle: actions must be a power of two");
  }
  logk_ = 0;
  while (1 << logk_ < K_) ++logk_;
  w_.resize(2 * K_);
}

void CanpropOracle::extend(int parent) {
  const int t = t_ + 1;
  if (t > 24) throw SizeError("canprop oracle: more than 2^24 subsets");
  const double inv_t = 1.0 / static_cast<double>(T_);
  if (t == 1) {
    for (int v = 1; v < 2 * K_; ++v) w_[v] = {0.25, 0.25};
  } else {
    if (parent < 1 || parent >= t) {
      throw ValidationError("canprop oracle: parent out of range");
    }
    const std::uint32_t pbit = 1u << (parent - 1);
    const std::uint32_t half = 1u << (t - 1);
    for (int v = 1; v < 2 * K_; ++v) {
      std::vector<double> next(std::size_t{2} << (t - 1));
      for (std::uint32_t s0 = 0; s0 < half; ++s0) {
        const bool parent_in = s0 & pbit;
        next[s0] = w_[v][s0] * (parent_in ? inv_t : 1.0 - inv_t);
        next[s0 | half] = w_[v][s0] * (parent_in ? 1.0 - inv_t : inv_t);
      }
      w_[v] = std::move(next);
    }
  }
  parents_.push_back(parent);
  t_ = t;
}

double CanpropOracle::theta_of(int v) const {
  const std::uint32_t bit = 1u << (t_ - 1);
  double total = 0.0;
  for (std::uint32_t s = 0; s < w_[v].size(); ++s) {
    if (s & bit) total += w_[v][s];
  }
  return total;
}

double CanpropOracle::sibling_pair_sum(int internal_v) const {
  double total = 0.0;
  for (double x : w_[2 * internal_v]) total += x;
  for (double x : w_[2 * internal_v + 1]) total += x;
  return total;
}

CanpropOracle::Step CanpropOracle::step(int parent, const std::vector<double>& zeta,
                                        double loss) {
  extend(parent);
  if (static_cast<int>(zeta.size()) != logk_) {
    throw ValidationError("canprop oracle: need one draw per tree level");
  }

  Step out;
  out.path.push_back(1);
  int v = 1;
  out.pi_tilde = 1.0;
  for (int j = 0; j < logk_; ++j) {
    const double tl = theta_of(2 * v);
    const double tr = theta_of(2 * v + 1);
    const double zsum = tl + tr;
    double pl = 0.5, pr = 0.5;
    if (zsum >= 1e-300) {
      pl = tl / zsum;
      pr = tr / zsum;
    }
    out.theta.push_back({tl, tr});
    out.pi.push_back({pl, pr});
    const bool go_left = zeta[j] <= pl;
    v = go_left ? 2 * v : 2 * v + 1;
    out.pi_tilde *= go_left ? pl : pr;
    out.path.push_back(v);
  }
  out.action = v - K_ + 1;

  out.psi.assign(logk_ + 1, 1.0);
  out.psi[logk_] = std::exp(-eta_ * loss / out.pi_tilde);
  const std::uint32_t bit = 1u << (t_ - 1);
  for (int jj = logk_; jj >= 1; --jj) {
    const int vj = out.path[jj];
    const double pi_vj = vj % 2 == 0 ? out.pi[jj - 1][0] : out.pi[jj - 1][1];
    double prev = 1.0 - (1.0 - out.psi[jj]) * pi_vj;
    if (prev < 1e-300) prev = 1e-300;
    out.psi[jj - 1] = prev;
    const double chosen_factor = out.psi[jj] / prev;
    const double sibling_factor = 1.0 / prev;
    auto scale = [&](int vertex, double factor) {
      auto& tab = w_[vertex];
      for (std::uint32_t s = 0; s < tab.size(); ++s) {
        if (s & bit) tab[s] *= factor;
      }
    };
    scale(vj, chosen_factor);
    scale(vj ^ 1, sibling_factor);
  }
  return out;
}

// ---------------------------------------------------------------------------

Exp4Oracle::Exp4Oracle(int horizon, int num_actions, double eta)
    : T_(horizon), K_(num_actions), eta_(eta) {}

void Exp4Oracle::begin_trial(int parent) {
  const int t = t_ + 1;
  double entries = std::pow(static_cast<double>(K_), static_cast<double>(t));
  if (entries > static_cast<double>(1 << 20)) {
    throw SizeError("exp4 oracle: policy table exceeds 2^20 entries");
  }
  if (t == 1) {
    w_.assign(K_, 1.0 / K_);
  } else {
    if (parent < 1 || parent >= t) throw ValidationError("exp4 oracle: bad parent");
    const double inv_t = 1.0 / static_cast<double>(T_);
    std::size_t stride = 1;
    for (int i = 1; i < parent; ++i) stride *= K_;
    std::vector<double> next(w_.size() * K_);
    for (std::size_t y = 0; y < w_.size(); ++y) {
      const int parent_digit = static_cast<int>(y / stride % K_);
      for (int b = 0; b < K_; ++b) {
        const double factor =
            b == parent_digit ? 1.0 - inv_t : inv_t / static_cast<double>(K_ - 1);
        next[y + static_cast<std::size_t>(b) * w_.size()] = w_[y] * factor;
      }
    }
    w_ = std::move(next);
  }
  t_ = t;
  acted_ = false;
}

std::vector<double> Exp4Oracle::distribution() const {
  std::vector<double> p(K_, 0.0);
  const std::size_t stride = w_.size() / K_;  // digit of x_t is the outermost
  for (std::size_t y = 0; y < w_.size(); ++y) {
    p[y / stride] += w_[y];
  }
  double norm = 0.0;
  for (double x : p) norm += x;
  for (double& x : p) x /= norm;
  return p;
}

void Exp4Oracle::update(int action, double loss) {
  std::vector<double> p(K_, 0.0);
  const std::size_t stride = w_.size() / K_;
  double norm = 0.0;
  for (std::size_t y = 0; y < w_.size(); ++y) {
    p[y / stride] += w_[y];
    norm += w_[y];
  }
  const double lhat = loss * norm / p[action - 1];
  const double factor = std::exp(-eta_ * lhat);
  const std::size_t lo = stride * static_cast<std::size_t>(action - 1);
  for (std::size_t y = lo; y < lo + stride; ++y) w_[y] *= factor;
  acted_ = true;
}

}  // namespace oracle
}  // namespace cbnn
