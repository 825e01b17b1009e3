#include "knnball/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "knnball/torus.hpp"

namespace knnball {

namespace {

inline int cell_of(double x, int m) {
    int c = static_cast<int>(x * m);
    if (c >= m) c = m - 1;
    if (c < 0) c = 0;
    return c;
}

inline std::int64_t cell_id_of_point(const double* p, int dim, int m, const std::int64_t* stride) {
    std::int64_t id = 0;
    for (int i = 0; i < dim; ++i) id += stride[i] * cell_of(p[i], m);
    return id;
}

int grid_cells_per_axis(std::size_t n, std::size_t target, int dim) {
    if (target == 0) throw std::invalid_argument("target_points_per_cell must be >= 1");
    double ratio = static_cast<double>(n) / static_cast<double>(target);
    if (ratio < 1.0) return 1;
    int m = static_cast<int>(std::floor(std::pow(ratio, 1.0 / dim) + 1e-9));
    return std::max(1, m);
}

// Per-axis lists of pre-multiplied wrapped cell ids for a window of offsets.
// Scratch is thread-local so queries never allocate in steady state.
struct AxisWindows {
    std::vector<std::int64_t> ids;
    int begin[kMaxDim];
    int size[kMaxDim];
};

thread_local AxisWindows tl_windows;

// Fills windows for offsets [lo_i, hi_i] around center cell c[i].
void fill_windows(AxisWindows& w, const GridIndex& idx, const int* c, const int* lo, const int* hi) {
    w.ids.clear();
    for (int i = 0; i < idx.dim; ++i) {
        w.begin[i] = static_cast<int>(w.ids.size());
        w.size[i] = hi[i] - lo[i] + 1;
        for (int o = lo[i]; o <= hi[i]; ++o) {
            int ci = c[i] + o;
            if (ci < 0) ci += idx.m;
            if (ci >= idx.m) ci -= idx.m;
            w.ids.push_back(idx.stride[i] * ci);
        }
    }
}

// Canonical offset range on one axis: a window of at most m distinct cells.
inline void axis_range(int want, int m, int& lo, int& hi) {
    lo = std::max(-want, -(m / 2));
    hi = std::min(want, (m - 1) / 2);
}

}  // namespace

GridIndex build_index(const PointSet& ps, std::size_t target_points_per_cell) {
    GridIndex idx;
    rebuild_index(idx, ps, target_points_per_cell);
    return idx;
}

void rebuild_index(GridIndex& idx, const PointSet& ps, std::size_t target_points_per_cell) {
    check_dim(ps.dim);
    idx.ps = &ps;
    idx.dim = ps.dim;
    idx.m = grid_cells_per_axis(ps.size(), target_points_per_cell, ps.dim);
    std::int64_t cells = 1;
    for (int i = 0; i < idx.dim; ++i) {
        idx.stride[i] = cells;
        cells *= idx.m;
    }
    idx.start.assign(static_cast<std::size_t>(cells) + 1, 0);
    idx.order.resize(ps.size());

    const std::size_t n = ps.size();
    for (std::size_t p = 0; p < n; ++p)
        ++idx.start[static_cast<std::size_t>(cell_id_of_point(ps.point(p), idx.dim, idx.m, idx.stride)) + 1];
    for (std::size_t c = 1; c < idx.start.size(); ++c) idx.start[c] += idx.start[c - 1];
    std::vector<std::uint32_t> cursor(idx.start.begin(), idx.start.end() - 1);
    for (std::size_t p = 0; p < n; ++p) {
        std::int64_t cid = cell_id_of_point(ps.point(p), idx.dim, idx.m, idx.stride);
        idx.order[cursor[static_cast<std::size_t>(cid)]++] = static_cast<std::uint32_t>(p);
    }
}

std::size_t count_within_capped(const GridIndex& idx, const double* q, double r,
                                std::int64_t exclude, std::size_t cap) {
    if (r < 0.0) throw std::domain_error("count radius must be non-negative");
    if (idx.ps == nullptr || cap == 0) return 0;
    const PointSet& ps = *idx.ps;
    const int dim = idx.dim, m = idx.m;
    const double r2 = r * r;

    int c[kMaxDim] = {}, lo[kMaxDim] = {}, hi[kMaxDim] = {}, odo[kMaxDim] = {};
    for (int i = 0; i < dim; ++i) c[i] = cell_of(q[i], m);
    int want = static_cast<int>(r * m) + 1;
    for (int i = 0; i < dim; ++i) axis_range(want, m, lo[i], hi[i]);

    std::size_t cnt = 0;
    // Scan the query's own cell first: capped queries usually terminate there,
    // and visit order cannot change the count of points within r.
    std::int64_t home = 0;
    for (int i = 0; i < dim; ++i) home += idx.stride[i] * c[i];
    for (std::uint32_t t = idx.start[home]; t < idx.start[home + 1]; ++t) {
        std::uint32_t pid = idx.order[t];
        if (static_cast<std::int64_t>(pid) == exclude) continue;
        if (torus_distance2(q, ps.point(pid), dim) <= r2) {
            if (++cnt >= cap) return cap;
        }
    }

    AxisWindows& w = tl_windows;
    fill_windows(w, idx, c, lo, hi);

    // Squared clearance between q and the cell slab at each window offset,
    // per axis; a cell whose accumulated clearance exceeds r^2 holds no hits.
    thread_local std::vector<double> gap2;
    gap2.resize(w.ids.size());
    for (int i = 0; i < dim; ++i) {
        double f = q[i] * m - c[i];  // position inside the home cell, in [0,1)
        for (int j = 0; j < w.size[i]; ++j) {
            int o = lo[i] + j;
            double g = 0.0;
            if (o > 0) g = std::min(o - f, (m - o - 1) + f);
            if (o < 0) g = std::min((-o - 1) + f, (m + o) - f);
            gap2[w.begin[i] + j] = (g / m) * (g / m);
        }
    }

    for (;;) {
        std::int64_t cid = 0;
        double g2 = 0.0;
        for (int i = 0; i < dim; ++i) {
            cid += w.ids[w.begin[i] + odo[i]];
            g2 += gap2[w.begin[i] + odo[i]];
        }
        if (cid != home && g2 <= r2) {
            for (std::uint32_t t = idx.start[cid]; t < idx.start[cid + 1]; ++t) {
                std::uint32_t pid = idx.order[t];
                if (static_cast<std::int64_t>(pid) == exclude) continue;
                if (torus_distance2(q, ps.point(pid), dim) <= r2) {
                    if (++cnt >= cap) return cap;
                }
            }
        }
        int ax = 0;
        while (ax < dim) {
            if (++odo[ax] < w.size[ax]) break;
            odo[ax] = 0;
            ++ax;
        }
        if (ax == dim) break;
    }
    return cnt;
}

std::size_t count_within(const GridIndex& idx, const double* q, double r, std::int64_t exclude) {
    return count_within_capped(idx, q, r, exclude, static_cast<std::size_t>(-1));
}

double knn_distance(const GridIndex& idx, const double* q, int k, std::int64_t exclude) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (idx.ps == nullptr) return HUGE_VAL;
    const PointSet& ps = *idx.ps;
    const int dim = idx.dim, m = idx.m;

    thread_local std::vector<double> best;
    best.assign(static_cast<std::size_t>(k), HUGE_VAL);
    double worst = HUGE_VAL;

    int c[kMaxDim] = {}, lo[kMaxDim] = {}, hi[kMaxDim] = {}, plo[kMaxDim] = {},
        phi[kMaxDim] = {}, odo[kMaxDim] = {};
    for (int i = 0; i < dim; ++i) c[i] = cell_of(q[i], m);

    AxisWindows& w = tl_windows;
    for (int s = 0;; ++s) {
        for (int i = 0; i < dim; ++i) {
            axis_range(s, m, lo[i], hi[i]);
            axis_range(s - 1, m, plo[i], phi[i]);
        }
        if (s > 0) {
            bool grew = false;
            for (int i = 0; i < dim; ++i)
                if (lo[i] != plo[i] || hi[i] != phi[i]) grew = true;
            if (!grew) break;  // every cell already visited
            // Any unvisited cell has some axis offset of magnitude >= s, so its
            // points are at distance > (s-1)/m; stop once that can't improve.
            double dmin = static_cast<double>(s - 1) / m;
            if (worst < dmin * dmin) break;
        }
        fill_windows(w, idx, c, lo, hi);
        for (int i = 0; i < dim; ++i) odo[i] = 0;
        for (;;) {
            bool inside_prev = s > 0;
            if (inside_prev) {
                for (int i = 0; i < dim; ++i) {
                    int o = lo[i] + odo[i];
                    if (o < plo[i] || o > phi[i]) {
                        inside_prev = false;
                        break;
                    }
                }
            }
            if (!inside_prev) {
                std::int64_t cid = 0;
                for (int i = 0; i < dim; ++i) cid += w.ids[w.begin[i] + odo[i]];
                for (std::uint32_t t = idx.start[cid]; t < idx.start[cid + 1]; ++t) {
                    std::uint32_t pid = idx.order[t];
                    if (static_cast<std::int64_t>(pid) == exclude) continue;
                    double d2 = torus_distance2(q, ps.point(pid), dim);
                    if (d2 < worst) {
                        int pos = k - 1;
                        while (pos > 0 && best[pos - 1] > d2) {
                            best[pos] = best[pos - 1];
                            --pos;
                        }
                        best[pos] = d2;
                        worst = best[k - 1];
                    }
                }
            }
            int ax = 0;
            while (ax < dim) {
                if (++odo[ax] < w.size[ax]) break;
                odo[ax] = 0;
                ++ax;
            }
            if (ax == dim) break;
        }
    }
    return worst == HUGE_VAL ? HUGE_VAL : std::sqrt(worst);
}

double knn_distance_bruteforce(const PointSet& ps, const double* q, int k, std::int64_t exclude) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    std::vector<double> d2;
    d2.reserve(ps.size());
    for (std::size_t p = 0; p < ps.size(); ++p) {
        if (static_cast<std::int64_t>(p) == exclude) continue;
        d2.push_back(torus_distance2(q, ps.point(p), ps.dim));
    }
    if (d2.size() < static_cast<std::size_t>(k)) return HUGE_VAL;
    std::nth_element(d2.begin(), d2.begin() + (k - 1), d2.end());
    return std::sqrt(d2[k - 1]);
}

}  // namespace knnball
