#include "knnball/blocking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "knnball/analytic.hpp"
#include "knnball/torus.hpp"

namespace knnball {

Partition make_partition(double b_target, int dim) {
    check_dim(dim);
    if (!(b_target >= 0.0)) throw std::domain_error("cube budget must be non-negative");
    Partition part;
    part.dim = dim;
    long long m = std::llround(std::pow(b_target, 1.0 / static_cast<double>(dim)));
    if (m < 1) m = 1;
    // Reject before the narrowing cast: a per-axis count beyond int range
    // would wrap, and cube ids must stay within the int64 index arithmetic.
    if (m > std::numeric_limits<int>::max())
        throw std::invalid_argument("cube budget too large");
    part.m = static_cast<int>(m);
    if (part.cube_count() > (1LL << 31))
        throw std::invalid_argument("cube budget too large");
    return part;
}

CubeSplit split_cube(const Partition& part, std::int64_t l, double shell) {
    if (l < 0 || l >= part.cube_count()) throw std::invalid_argument("cube index out of range");
    if (!(shell >= 0.0)) throw std::domain_error("shell must be non-negative");
    double side = part.side();
    if (2.0 * shell >= side) throw std::domain_error("shell leaves no cube interior");
    CubeSplit out;
    out.cube_lo.resize(part.dim);
    out.cube_hi.resize(part.dim);
    out.interior_lo.resize(part.dim);
    out.interior_hi.resize(part.dim);
    std::int64_t rest = l;
    for (int i = 0; i < part.dim; ++i) {
        std::int64_t ci = rest % part.m;
        rest /= part.m;
        out.cube_lo[i] = static_cast<double>(ci) * side;
        out.cube_hi[i] = static_cast<double>(ci + 1) * side;
        out.interior_lo[i] = out.cube_lo[i] + shell;
        out.interior_hi[i] = out.cube_hi[i] - shell;
    }
    return out;
}

namespace {

inline int cube_coord(double x, int m) {
    int c = static_cast<int>(x * m);
    if (c >= m) c = m - 1;
    if (c < 0) c = 0;
    return c;
}

// k-th smallest plain-Euclidean distance from x to the listed points,
// skipping `self`; +infinity when fewer than k candidates exist.
double cube_kth_distance(const PointSet& ps, const std::uint32_t* members, std::size_t count,
                         std::uint32_t self, const double* x, int k) {
    thread_local std::vector<double> best;
    best.assign(static_cast<std::size_t>(k), HUGE_VAL);
    double worst = HUGE_VAL;
    for (std::size_t t = 0; t < count; ++t) {
        std::uint32_t pid = members[t];
        if (pid == self) continue;
        double d2 = euclid_distance2(x, ps.point(pid), ps.dim);
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
    return worst == HUGE_VAL ? HUGE_VAL : std::sqrt(worst);
}

}  // namespace

EtaResult build_eta_full(const ProcessParams& p, const PointSet& ps, const BlockingConfig& cfg,
                         const GridIndex* idx) {
    if (ps.dim != p.dim || cfg.part.dim != p.dim)
        throw std::invalid_argument("dimension mismatch between process, points and partition");
    const double side = cfg.part.side();
    if (2.0 * cfg.shell >= side) throw std::domain_error("shell leaves no cube interior");

    EtaResult out;
    out.eta.dim = p.dim;
    out.eta_trunc.dim = p.dim;
    const std::size_t cubes = static_cast<std::size_t>(cfg.part.cube_count());
    out.counts.assign(cubes, 0);

    GridIndex local;
    if (idx == nullptr) {
        local = build_index(ps);
        idx = &local;
    }

    // Bucket point ids by cube (counting sort, scratch reused across calls).
    thread_local std::vector<std::uint32_t> start, order;
    const int m = cfg.part.m;
    const std::size_t n = ps.size();
    start.assign(cubes + 1, 0);
    order.resize(n);
    auto cube_of = [&](const double* x) {
        std::int64_t id = 0, stridev = 1;
        for (int i = 0; i < p.dim; ++i) {
            id += stridev * cube_coord(x[i], m);
            stridev *= m;
        }
        return static_cast<std::size_t>(id);
    };
    for (std::size_t i = 0; i < n; ++i) ++start[cube_of(ps.point(i)) + 1];
    for (std::size_t c = 1; c <= cubes; ++c) start[c] += start[c - 1];
    {
        thread_local std::vector<std::uint32_t> cursor;
        cursor.assign(start.begin(), start.end() - 1);
        for (std::size_t i = 0; i < n; ++i)
            order[cursor[cube_of(ps.point(i))]++] = static_cast<std::uint32_t>(i);
    }

    const double r_gate = mark_gate_radius(p);
    // The global (torus) index can answer cube-local degree questions for
    // interior centers only while the question's radius stays within the
    // shell; otherwise fall back to direct cube scans.
    const bool grid_ok = m >= 2 && r_gate >= 0.0 && r_gate <= cfg.shell;
    const std::size_t cap = static_cast<std::size_t>(p.k);

    for (std::size_t c = 0; c < cubes; ++c) {
        const std::uint32_t* members = order.data() + start[c];
        const std::size_t count = start[c + 1] - start[c];
        if (count <= static_cast<std::size_t>(p.k)) continue;  // cube-local null measure
        for (std::size_t t = 0; t < count; ++t) {
            const std::uint32_t pid = members[t];
            const double* x = ps.point(pid);
            // Interior membership of the assigned cube.
            bool interior = true;
            for (int i = 0; i < p.dim; ++i) {
                int ci = cube_coord(x[i], m);
                double lo = static_cast<double>(ci) * side;
                double hi = static_cast<double>(ci + 1) * side;
                if (!(x[i] >= lo + cfg.shell && x[i] < hi - cfg.shell)) {
                    interior = false;
                    break;
                }
            }
            if (!interior) continue;

            double r_cube;
            if (grid_ok) {
                if (count_within_capped(*idx, x, r_gate, pid, cap) >= cap)
                    continue;  // cube-local k-th neighbor within gate: mark <= s0
                double r_global = knn_distance(*idx, x, p.k, pid);
                // Within the shell the torus neighborhood of an interior
                // center lies in its cube, so cube-local and global k-th
                // distances coincide bit for bit.
                r_cube = r_global <= cfg.shell
                             ? r_global
                             : cube_kth_distance(ps, members, count, pid, x, p.k);
            } else {
                r_cube = cube_kth_distance(ps, members, count, pid, x, p.k);
            }
            double mark = mark_value(p, r_cube);
            if (mark > p.s0) {
                out.eta.push_back(x, mark);
                ++out.counts[c];
                if (r_cube <= cfg.shell) out.eta_trunc.push_back(x, mark);
            }
        }
    }
    return out;
}

MarkedPointSet build_eta(const ProcessParams& p, const PointSet& ps, const BlockingConfig& cfg) {
    return build_eta_full(p, ps, cfg).eta;
}

MarkedPointSet build_eta_truncated(const ProcessParams& p, const PointSet& ps,
                                   const BlockingConfig& cfg) {
    return build_eta_full(p, ps, cfg).eta_trunc;
}

std::vector<std::uint32_t> per_cube_counts(const ProcessParams& p, const PointSet& ps,
                                           const BlockingConfig& cfg) {
    return build_eta_full(p, ps, cfg).counts;
}

}  // namespace knnball
