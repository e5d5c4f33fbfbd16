#pragma once

#include <functional>
#include <limits>
#include <unordered_map>
#include <vector>

#include "cbnn/common.hpp"

namespace cbnn {
namespace metric {

using Point = std::vector<double>;
using Metric = std::function<double(const Point&, const Point&)>;

double euclidean(const Point& a, const Point& b);

enum class NnBackend { kExactScan, kGridBuckets };

// Adaptive nearest-neighbour store. Both bundled backends return exact
// (c = 1) answers; the grid backend only accelerates euclidean queries on
// bounded coordinates. Exact duplicates are stored once, keeping the
// earliest trial index; distance ties also resolve to the earliest trial.
class MetricStore {
 public:
  explicit MetricStore(int dim, NnBackend backend = NnBackend::kExactScan,
                       Metric metric = {}, double grid_cell = 1.0 / 32.0);

  void insert(const Point& x, int trial);

  struct QueryResult {
    Point point;
    int trial = 0;
    double distance = 0.0;
  };
  QueryResult query(const Point& x) const;

  double declared_c() const { return 1.0; }
  std::size_t size() const { return points_.size(); }
  int dim() const { return dim_; }

 private:
  struct Entry {
    Point point;
    int trial;
  };
  int dim_;
  NnBackend backend_;
  Metric metric_;
  double cell_;
  std::vector<Entry> points_;
  std::unordered_map<std::size_t, std::vector<int>> buckets_;  // cell hash -> indices
  std::unordered_map<std::size_t, std::vector<int>> dedupe_;   // point hash -> indices
  std::vector<std::int64_t> lo_cell_, hi_cell_;                // cell bounding box

  std::int64_t cell_index(double v) const;
  std::size_t cell_hash_of(const std::vector<std::int64_t>& cell) const;
  std::size_t point_hash(const Point& x) const;
  void check_dim(const Point& x) const;
};

// Componentwise rounding to the nearest multiple of 1/q; exact halves round
// down. Idempotent on grid points.
class GridQuantiser {
 public:
  GridQuantiser(int q, int dim);
  Point quantise(const Point& z) const;
  int q() const { return q_; }
  int dim() const { return dim_; }

 private:
  int q_, dim_;
};

// q = ceil((T/K)^(1/(d+1))) and rho = q^((d-1)/2).
std::pair<int, double> default_params(std::int64_t horizon, int num_actions, int dim);

// Distance from x to the nearest point of xs labelled differently from x;
// +infinity when every label agrees.
double gamma_margin(const Point& x, const std::function<int(const Point&)>& label,
                    const std::vector<Point>& xs, const Metric& metric = {});

}  // namespace metric
}  // namespace cbnn
