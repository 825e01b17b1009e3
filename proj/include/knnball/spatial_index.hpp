#pragma once

// Uniform cell-grid index over the torus for fixed-radius counting and
// k-nearest-neighbor queries under the wrap-around metric.  Buckets are laid
// out CSR style (order/start) so the index can be rebuilt every replication
// without allocating.

#include <cstdint>
#include <limits>

#include "knnball/types.hpp"

namespace knnball {

struct GridIndex {
    const PointSet* ps = nullptr;
    int dim = 1;
    int m = 1;                          // cells per axis
    std::vector<std::uint32_t> start;   // size m^dim + 1
    std::vector<std::uint32_t> order;   // point ids grouped by cell
    std::int64_t stride[kMaxDim] = {};  // cell id strides per axis

    std::int64_t cell_count() const { return static_cast<std::int64_t>(start.size()) - 1; }
};

// Builds a grid with m = max(1, floor((N / target_points_per_cell)^{1/d}))
// cells per axis.  The index keeps a pointer to `ps`; the caller must keep
// the point set alive and unchanged while querying.
GridIndex build_index(const PointSet& ps, std::size_t target_points_per_cell = 2);

// Re-buckets an existing index in place (no allocation when capacities fit).
void rebuild_index(GridIndex& idx, const PointSet& ps, std::size_t target_points_per_cell = 2);

// Distance from `q` to its k-th nearest point of the indexed set, excluding
// the point with index `exclude` (pass -1 to exclude nothing).  Returns
// +infinity when fewer than k candidates exist.
double knn_distance(const GridIndex& idx, const double* q, int k, std::int64_t exclude = -1);

// Number of indexed points within CLOSED distance r of q (wrap-around
// metric), excluding index `exclude`.  Negative r is a domain error.
std::size_t count_within(const GridIndex& idx, const double* q, double r, std::int64_t exclude = -1);

// As count_within but stops counting once `cap` is reached; the return value
// is min(true count, cap).  Used for degree tests that only compare to k.
std::size_t count_within_capped(const GridIndex& idx, const double* q, double r,
                                std::int64_t exclude, std::size_t cap);

// Reference implementation by full scan; used to validate the grid.
double knn_distance_bruteforce(const PointSet& ps, const double* q, int k,
                               std::int64_t exclude = -1);

}  // namespace knnball
