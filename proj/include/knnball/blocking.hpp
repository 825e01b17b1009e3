#pragma once

// Cube partition of the torus and the cube-local marked processes used to
// compare against the global construction: each cube is treated as a bounded
// region with the plain Euclidean metric, marks are computed from points of
// that cube only, and atoms are kept only for centers in the shell-inset
// interior of their cube.

#include "knnball/nnball.hpp"
#include "knnball/spatial_index.hpp"
#include "knnball/types.hpp"

namespace knnball {

// Partition of [0,1)^d into m^d congruent half-open cubes of side 1/m.
struct Partition {
    int dim = 1;
    int m = 1;

    std::int64_t cube_count() const {
        std::int64_t c = 1;
        for (int i = 0; i < dim; ++i) c *= m;
        return c;
    }
    double side() const { return 1.0 / static_cast<double>(m); }
};

// m = max(1, round(b_target^{1/d})), so the cube count approximates b_target.
Partition make_partition(double b_target, int dim);

struct CubeSplit {
    std::vector<double> cube_lo, cube_hi;      // the full cube Q_l
    std::vector<double> interior_lo, interior_hi;  // the inset interior K_l
};

// Bounds of cube `l` and of its interior inset by `shell` on every side.
// 2*shell >= side is a domain error (degenerate interior).
CubeSplit split_cube(const Partition& part, std::int64_t l, double shell);

struct BlockingConfig {
    Partition part;
    double shell = 0.0;  // inset radius, normally radius_r_n(w_n)
};

// Everything the blocking comparison needs from one configuration, computed
// in one pass: the union of cube-local retained processes (eta), its
// truncation to atoms with cube-local R_k <= shell (eta_trunc), and the
// per-cube atom counts of eta.
struct EtaResult {
    MarkedPointSet eta;
    MarkedPointSet eta_trunc;
    std::vector<std::uint32_t> counts;  // |eta_l| per cube, cube-id order
};

EtaResult build_eta_full(const ProcessParams& p, const PointSet& ps, const BlockingConfig& cfg,
                         const GridIndex* idx = nullptr);

// Convenience wrappers over build_eta_full.
MarkedPointSet build_eta(const ProcessParams& p, const PointSet& ps, const BlockingConfig& cfg);
MarkedPointSet build_eta_truncated(const ProcessParams& p, const PointSet& ps,
                                   const BlockingConfig& cfg);
std::vector<std::uint32_t> per_cube_counts(const ProcessParams& p, const PointSet& ps,
                                           const BlockingConfig& cfg);

}  // namespace knnball
