#include "knnball/nnball.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "knnball/analytic.hpp"
#include "knnball/torus.hpp"

namespace knnball {

namespace {

void check_params(const ProcessParams& p) {
    check_dim(p.dim);
    if (p.k < 1) throw std::invalid_argument("k must be >= 1");
    if (!(p.n > 0.0)) throw std::domain_error("n must be positive");
}

template <typename Emit>
void build_marked(const ProcessParams& p, const PointSet& ps, const GridIndex* idx, Emit&& emit) {
    check_params(p);
    if (ps.dim != p.dim) throw std::invalid_argument("point set dimension mismatch");
    if (ps.size() <= static_cast<std::size_t>(p.k)) return;  // null measure
    GridIndex local;
    if (idx == nullptr) {
        local = build_index(ps);
        idx = &local;
    }
    const double r_gate = mark_gate_radius(p);
    const std::size_t cap = static_cast<std::size_t>(p.k);
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const double* x = ps.point(i);
        if (r_gate >= 0.0 &&
            count_within_capped(*idx, x, r_gate, static_cast<std::int64_t>(i), cap) >= cap)
            continue;  // k-th neighbor within the gate: mark cannot exceed s0
        double r = knn_distance(*idx, x, p.k, static_cast<std::int64_t>(i));
        double mark = mark_value(p, r);
        if (mark > p.s0) emit(x, r, mark);
    }
}

}  // namespace

double mark_value(const ProcessParams& p, double r) {
    check_params(p);
    if (r < 0.0) throw std::domain_error("radius must be non-negative");
    if (std::isinf(r)) return HUGE_VAL;
    return p.n * ball_volume_coeff(p.dim) * std::pow(r, static_cast<double>(p.dim)) - p.a_n;
}

double mark_gate_radius(const ProcessParams& p) {
    check_params(p);
    if (p.a_n + p.s0 < 0.0) return -1.0;  // marks start above s0 at radius zero
    return radius_r_n(p.s0, p.n, p.a_n, p.dim) * (1.0 - 1e-12);
}

MarkedPointSet build_L(const ProcessParams& p, const PointSet& ps, const GridIndex* idx) {
    MarkedPointSet out(p.dim);
    build_marked(p, ps, idx, [&](const double* x, double, double mark) { out.push_back(x, mark); });
    return out;
}

MarkedPointSet build_L_truncated(const ProcessParams& p, const PointSet& ps, double b,
                                 const GridIndex* idx) {
    if (!(b >= 1.0)) throw std::domain_error("cube count b must be >= 1");
    MarkedPointSet out(p.dim);
    double r_cut = std::sqrt(static_cast<double>(p.dim)) *
                   std::pow(b, -1.0 / static_cast<double>(p.dim));
    build_marked(p, ps, idx, [&](const double* x, double r, double mark) {
        if (r <= r_cut) out.push_back(x, mark);
    });
    return out;
}

std::size_t count_low_degree(const PointSet& ps, double r, int k, const GridIndex* idx) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (r < 0.0) throw std::domain_error("radius must be non-negative");
    GridIndex local;
    if (idx == nullptr) {
        local = build_index(ps);
        idx = &local;
    }
    const std::size_t cap = static_cast<std::size_t>(k);
    std::size_t low = 0;
    // Walk the queries in grid order: consecutive queries then share window
    // cells, which keeps the candidate scans cache-resident at large n.
    for (std::uint32_t pid : idx->order) {
        if (count_within_capped(*idx, ps.point(pid), r, static_cast<std::int64_t>(pid), cap) < cap)
            ++low;
    }
    return low;
}

double tv_distance_atomic(const MarkedPointSet& m1, const MarkedPointSet& m2) {
    if (m1.dim != m2.dim) throw std::invalid_argument("marked sets must share one dimension");
    const int d = m1.dim;
    auto make_ids = [d](const MarkedPointSet& m) {
        std::vector<std::uint32_t> ids(m.size());
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::uint32_t>(i);
        std::sort(ids.begin(), ids.end(), [&](std::uint32_t a, std::uint32_t b) {
            const double* pa = m.location(a);
            const double* pb = m.location(b);
            for (int t = 0; t < d; ++t) {
                if (pa[t] < pb[t]) return true;
                if (pa[t] > pb[t]) return false;
            }
            return m.mark(a) < m.mark(b);
        });
        return ids;
    };
    auto cmp_atoms = [d](const MarkedPointSet& ma, std::uint32_t a, const MarkedPointSet& mb,
                         std::uint32_t b) {
        const double* pa = ma.location(a);
        const double* pb = mb.location(b);
        for (int t = 0; t < d; ++t) {
            if (pa[t] < pb[t]) return -1;
            if (pa[t] > pb[t]) return 1;
        }
        if (ma.mark(a) < mb.mark(b)) return -1;
        if (ma.mark(a) > mb.mark(b)) return 1;
        return 0;
    };
    auto a_ids = make_ids(m1);
    auto b_ids = make_ids(m2);
    std::size_t i = 0, j = 0, only1 = 0, only2 = 0;
    while (i < a_ids.size() && j < b_ids.size()) {
        int c = cmp_atoms(m1, a_ids[i], m2, b_ids[j]);
        if (c == 0) { ++i; ++j; }
        else if (c < 0) { ++only1; ++i; }
        else { ++only2; ++j; }
    }
    only1 += a_ids.size() - i;
    only2 += b_ids.size() - j;
    return static_cast<double>(std::max(only1, only2));
}

}  // namespace knnball
