#include "cbnn/metric.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace cbnn {
namespace metric {

double euclidean(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

MetricStore::MetricStore(int dim, NnBackend backend, Metric metric, double grid_cell)
    : dim_(dim), backend_(backend), metric_(std::move(metric)), cell_(grid_cell) {
  if (dim < 1) throw ConfigError("metric store: dimension must be positive");
  if (metric_ && backend_ == NnBackend::kGridBuckets) {
    throw ConfigError("metric store: grid buckets support the euclidean metric only");
  }
  if (!metric_) metric_ = euclidean;
  if (!(cell_ > 0.0)) throw ConfigError("metric store: cell width must be positive");
}

void MetricStore::check_dim(const Point& x) const {
  if (static_cast<int>(x.size()) != dim_) {
    throw ValidationError("metric store: dimension mismatch");
  }
}

std::size_t MetricStore::point_hash(const Point& x) const {
  std::size_t h = 1469598103934665603ull;
  for (double v : x) {
    if (v == 0.0) v = 0.0;  // fold -0 onto +0, matching operator==
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    h = (h ^ bits) * 1099511628211ull;
  }
  return h;
}

std::int64_t MetricStore::cell_index(double v) const {
  return static_cast<std::int64_t>(std::floor(v / cell_));
}

std::size_t MetricStore::cell_hash_of(const std::vector<std::int64_t>& cell) const {
  std::size_t h = 1469598103934665603ull;
  for (std::int64_t c : cell) {
    h = (h ^ static_cast<std::uint64_t>(c)) * 1099511628211ull;
  }
  return h;
}

void MetricStore::insert(const Point& x, int trial) {
  check_dim(x);
  auto& bucket = dedupe_[point_hash(x)];
  for (int idx : bucket) {
    if (points_[idx].point == x) {
      if (trial < points_[idx].trial) points_[idx].trial = trial;
      return;
    }
  }
  points_.push_back({x, trial});
  const int idx = static_cast<int>(points_.size()) - 1;
  bucket.push_back(idx);
  if (backend_ == NnBackend::kGridBuckets) {
    std::vector<std::int64_t> cell(dim_);
    for (int i = 0; i < dim_; ++i) cell[i] = cell_index(x[i]);
    buckets_[cell_hash_of(cell)].push_back(idx);
    if (points_.size() == 1) {
      lo_cell_ = cell;
      hi_cell_ = cell;
    } else {
      for (int i = 0; i < dim_; ++i) {
        lo_cell_[i] = std::min(lo_cell_[i], cell[i]);
        hi_cell_[i] = std::max(hi_cell_[i], cell[i]);
      }
    }
  }
}

MetricStore::QueryResult MetricStore::query(const Point& x) const {
  check_dim(x);
  if (points_.empty()) throw LookupError("metric store: query on an empty store");

  int best = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  auto consider = [&](int idx) {
    const double d = metric_(x, points_[idx].point);
    if (d < best_dist || (d == best_dist && points_[idx].trial < points_[best].trial)) {
      best_dist = d;
      best = idx;
    }
  };

  if (backend_ == NnBackend::kExactScan) {
    for (int i = 0; i < static_cast<int>(points_.size()); ++i) consider(i);
  } else {
    // Expanding Chebyshev shells of cells around the query. A point in a
    // shell-r cell is at euclidean distance >= (r-1) * cell, so scanning can
    // stop once that lower bound exceeds the best distance so far. Some cell
    // within ring_cap holds a point, so the loop terminates.
    std::vector<std::int64_t> centre(dim_);
    std::int64_t ring_cap = 0;
    for (int i = 0; i < dim_; ++i) {
      centre[i] = cell_index(x[i]);
      ring_cap = std::max<std::int64_t>(ring_cap, std::llabs(centre[i] - lo_cell_[i]));
      ring_cap = std::max<std::int64_t>(ring_cap, std::llabs(centre[i] - hi_cell_[i]));
    }
    std::vector<std::int64_t> cur(dim_);
    std::function<void(int, bool, std::int64_t)> shell = [&](int axis, bool on_shell,
                                                             std::int64_t ring) {
      if (axis == dim_) {
        if (!on_shell) return;
        auto it = buckets_.find(cell_hash_of(cur));
        if (it != buckets_.end()) {
          for (int idx : it->second) consider(idx);
        }
        return;
      }
      for (std::int64_t off = -ring; off <= ring; ++off) {
        cur[axis] = centre[axis] + off;
        shell(axis + 1, on_shell || std::llabs(off) == ring, ring);
      }
    };
    for (std::int64_t ring = 0; ring <= ring_cap; ++ring) {
      if (best >= 0 && static_cast<double>(ring - 1) * cell_ > best_dist) break;
      if (ring == 0) {
        auto it = buckets_.find(cell_hash_of(centre));
        if (it != buckets_.end()) {
          for (int idx : it->second) consider(idx);
        }
      } else {
        shell(0, false, ring);
      }
    }
  }
  return {points_[best].point, points_[best].trial, best_dist};
}

GridQuantiser::GridQuantiser(int q, int dim) : q_(q), dim_(dim) {
  if (q < 1 || dim < 1) throw ConfigError("quantiser: q and dim must be positive");
}

Point GridQuantiser::quantise(const Point& z) const {
  if (static_cast<int>(z.size()) != dim_) {
    throw ValidationError("quantiser: dimension mismatch");
  }
  Point out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!(z[i] >= 0.0 && z[i] <= 1.0)) {
      throw ValidationError("quantiser: component outside [0, 1]");
    }
    // Nearest multiple of 1/q, halves down.
    double k = std::ceil(z[i] * q_ - 0.5);
    if (k <= 0.0) k = 0.0;  // also rewrites -0
    if (k > q_) k = q_;
    out[i] = k / q_;
  }
  return out;
}

std::pair<int, double> default_params(std::int64_t horizon, int num_actions, int dim) {
  if (horizon < num_actions || num_actions < 2 || dim < 1) {
    throw ConfigError("default_params: need T >= K >= 2 and d >= 1");
  }
  const long double ratio =
      static_cast<long double>(horizon) / static_cast<long double>(num_actions);
  long double root = std::pow(ratio, 1.0L / (dim + 1));
  const long double nearest = std::round(root);
  if (std::fabs(static_cast<double>(root - nearest)) < 1e-9) root = nearest;
  const int q = static_cast<int>(std::ceil(static_cast<double>(root)));
  const double rho = std::pow(static_cast<double>(q), (dim - 1) / 2.0);
  return {q, rho};
}

double gamma_margin(const Point& x, const std::function<int(const Point&)>& label,
                    const std::vector<Point>& xs, const Metric& metric) {
  const Metric& m = metric ? metric : euclidean;
  const int lx = label(x);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& other : xs) {
    if (label(other) != lx) best = std::min(best, m(x, other));
  }
  return best;
}

}  // namespace metric
}  // namespace cbnn
