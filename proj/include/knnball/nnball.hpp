#pragma once

// Construction of the rescaled marked point process: every point of a
// configuration gets the mark n*theta_d*R_k^d - a_n, where R_k is the
// distance to its k-th nearest other point, and atoms are retained where the
// mark strictly exceeds the threshold s0.

#include "knnball/spatial_index.hpp"
#include "knnball/types.hpp"

namespace knnball {

struct ProcessParams {
    int dim = 2;
    int k = 1;
    double n = 1.0;    // intensity / point count of the source process
    double a_n = 0.0;  // centering sequence value
    double s0 = 0.0;   // retention threshold for marks
};

// Mark of a point whose k-th nearest neighbor distance is r:
//   n * theta_d * r^d - a_n  (+infinity stays +infinity).
double mark_value(const ProcessParams& p, double r);

// Largest radius at which a k-th neighbor rules out a mark above s0, shrunk
// by a relative margin so count prefilters stay conservative under rounding.
// Negative return means no radius can rule a point out.
double mark_gate_radius(const ProcessParams& p);

// Builds the retained marked process.  Configurations with at most k points
// yield the null measure.  An optional prebuilt index over `ps` avoids
// re-bucketing inside replication loops.
MarkedPointSet build_L(const ProcessParams& p, const PointSet& ps, const GridIndex* idx = nullptr);

// As build_L, but atoms are additionally required to satisfy
// R_k <= sqrt(d) * b^{-1/d} (the diameter of a cube in a partition of [0,1)^d
// into b congruent cubes), mirroring what a cube-local computation can see.
MarkedPointSet build_L_truncated(const ProcessParams& p, const PointSet& ps, double b,
                                 const GridIndex* idx = nullptr);

// Number of points whose closed r-ball contains at most k points of ps
// including the point itself (equivalently at most k-1 others).
std::size_t count_low_degree(const PointSet& ps, double r, int k, const GridIndex* idx = nullptr);

// Total-variation distance between two finite atomic measures with unit
// weights: atoms match only when every coordinate and the mark are exactly
// equal; the distance is the larger one-sided count of unmatched atoms.
double tv_distance_atomic(const MarkedPointSet& m1, const MarkedPointSet& m2);

}  // namespace knnball
