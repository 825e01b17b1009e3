#include "knnball/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "knnball/analytic.hpp"

namespace knnball {

namespace {

inline void append_uniform_points(PointSet& out, std::uint64_t count, int dim, Rng& rng) {
    for (std::uint64_t p = 0; p < count; ++p)
        for (int i = 0; i < dim; ++i) out.xs.push_back(rng.uniform());
}

}  // namespace

void sample_poisson_process_into(PointSet& out, double intensity, int dim, Rng& rng) {
    check_dim(dim);
    if (!(intensity >= 0.0)) throw std::domain_error("intensity must be >= 0");
    out.dim = dim;
    out.clear();
    std::uint64_t count = rng.poisson(intensity);
    out.reserve(count);
    append_uniform_points(out, count, dim, rng);
}

PointSet sample_poisson_process(double intensity, int dim, Rng& rng) {
    PointSet ps(dim);
    sample_poisson_process_into(ps, intensity, dim, rng);
    return ps;
}

void sample_binomial_process_into(PointSet& out, std::uint64_t n, int dim, Rng& rng) {
    check_dim(dim);
    out.dim = dim;
    out.clear();
    out.reserve(n);
    append_uniform_points(out, n, dim, rng);
}

PointSet sample_binomial_process(std::uint64_t n, int dim, Rng& rng) {
    PointSet ps(dim);
    sample_binomial_process_into(ps, n, dim, rng);
    return ps;
}

CoupledTriple sample_coupled(const PointSet& base, double eta, double intensity, Rng& rng) {
    if (!(eta > 0.0 && eta < 1.0)) throw std::domain_error("eta must lie in (0,1)");
    if (!(intensity >= 0.0)) throw std::domain_error("intensity must be >= 0");
    CoupledTriple t;
    t.base = base;
    t.thinned.dim = base.dim;
    t.deleted.resize(base.size());
    for (std::size_t p = 0; p < base.size(); ++p) {
        bool del = rng.uniform() < eta;
        t.deleted[p] = del ? 1 : 0;
        if (!del) t.thinned.push_back(base.point(p));
    }
    t.extra.dim = base.dim;
    sample_poisson_process_into(t.extra, intensity * eta, base.dim, rng);
    t.augmented = base;
    t.augmented.xs.insert(t.augmented.xs.end(), t.extra.xs.begin(), t.extra.xs.end());
    return t;
}

PointSet coupled_binomial(const CoupledTriple& triple, std::uint64_t n, Rng& rng) {
    const int dim = triple.base.dim;
    PointSet out(dim);
    const std::uint64_t n_thin = triple.thinned.size();
    const std::uint64_t n_aug = triple.augmented.size();

    if (n_thin <= n && n <= n_aug) {
        // Keep every thinned point; fill up from augmented \ thinned, which is
        // exactly (deleted base points) followed by the extra layer.
        out = triple.thinned;
        PointSet pool(dim);
        pool.reserve(n_aug - n_thin);
        for (std::size_t p = 0; p < triple.base.size(); ++p)
            if (triple.deleted[p]) pool.push_back(triple.base.point(p));
        pool.xs.insert(pool.xs.end(), triple.extra.xs.begin(), triple.extra.xs.end());
        // Partial Fisher-Yates draw of (n - n_thin) pool members.
        std::uint64_t take = n - n_thin;
        std::vector<std::uint32_t> ids(pool.size());
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::uint32_t>(i);
        for (std::uint64_t i = 0; i < take; ++i) {
            std::uint64_t j = i + rng.uniform_below(ids.size() - i);
            std::swap(ids[i], ids[j]);
            out.push_back(pool.point(ids[i]));
        }
        return out;
    }
    if (n_thin > n) {
        // Sandwich already broken; a uniform n-subset of thinned keeps the
        // marginal law exact.
        std::vector<std::uint32_t> ids(n_thin);
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::uint32_t>(i);
        out.reserve(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            std::uint64_t j = i + rng.uniform_below(ids.size() - i);
            std::swap(ids[i], ids[j]);
            out.push_back(triple.thinned.point(ids[i]));
        }
        return out;
    }
    // n_aug < n: take everything and top up with fresh i.i.d. points.
    out = triple.augmented;
    out.reserve(n);
    append_uniform_points(out, n - n_aug, dim, rng);
    return out;
}

namespace {

// Lexicographic sort keys over flat coordinates.
std::vector<std::uint32_t> sorted_ids(const PointSet& ps) {
    std::vector<std::uint32_t> ids(ps.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::uint32_t>(i);
    const int d = ps.dim;
    std::sort(ids.begin(), ids.end(), [&](std::uint32_t a, std::uint32_t b) {
        const double* pa = ps.point(a);
        const double* pb = ps.point(b);
        for (int i = 0; i < d; ++i) {
            if (pa[i] < pb[i]) return true;
            if (pa[i] > pb[i]) return false;
        }
        return false;
    });
    return ids;
}

// Multiset containment: every point of `sub` appears in `sup` (exact floats),
// respecting multiplicities.
bool multiset_subset(const PointSet& sub, const PointSet& sup) {
    if (sub.dim != sup.dim) return false;
    if (sub.size() > sup.size()) return false;
    auto a = sorted_ids(sub);
    auto b = sorted_ids(sup);
    const int d = sub.dim;
    std::size_t j = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double* pa = sub.point(a[i]);
        for (;;) {
            if (j == b.size()) return false;
            const double* pb = sup.point(b[j]);
            int cmp = 0;
            for (int t = 0; t < d; ++t) {
                if (pb[t] < pa[t]) { cmp = -1; break; }
                if (pb[t] > pa[t]) { cmp = 1; break; }
            }
            ++j;
            if (cmp == 0) break;     // matched, consume this sup point
            if (cmp > 0) return false;  // sup passed pa without matching
        }
    }
    return true;
}

}  // namespace

bool sandwich_holds(const CoupledTriple& triple, const PointSet& binom) {
    return multiset_subset(triple.thinned, binom) && multiset_subset(binom, triple.augmented);
}

MarkedPointSet sample_limit_process(double b, int k, double s0, int dim, Rng& rng) {
    check_dim(dim);
    if (!(b >= 0.0)) throw std::domain_error("window mass b must be >= 0");
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    MarkedPointSet out(dim);
    double total = b * alpha_k(k, s0);
    std::uint64_t count = rng.poisson(total);
    double loc[kMaxDim];
    for (std::uint64_t a = 0; a < count; ++a) {
        for (int i = 0; i < dim; ++i) loc[i] = rng.uniform();
        // tau_k restricted to [s0, inf) and normalized is a shifted Exp(1).
        out.push_back(loc, s0 + rng.exponential());
    }
    return out;
}

}  // namespace knnball
