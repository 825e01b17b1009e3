#pragma once

// Geometry of the flat unit torus [0,1)^d: canonical coordinates, the
// wrap-around metric, and Euclidean ball volumes.

#include <cmath>
#include <vector>

#include "knnball/types.hpp"

namespace knnball {

// Wraps one raw coordinate into [0,1).  Handles arbitrary reals, including
// negatives and values whose fractional part rounds up to 1.0.
inline double canonicalize_coord(double x) {
    double y = x - std::floor(x);
    if (y >= 1.0) y = 0.0;  // e.g. x = -1e-17: x - floor(x) rounds to 1.0
    return y;
}

// Canonical representative of a raw point in R^d.
std::vector<double> canonicalize(const std::vector<double>& raw);

// Squared toroidal distance between two d-vectors (hot path; no checks).
inline double torus_distance2(const double* a, const double* b, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) {
        double dx = std::fabs(a[i] - b[i]);
        if (dx > 0.5) dx = 1.0 - dx;
        s += dx * dx;
    }
    return s;
}

// Toroidal (wrap-around) Euclidean distance.  Inputs must be canonical.
inline double torus_distance(const double* a, const double* b, int dim) {
    return std::sqrt(torus_distance2(a, b, dim));
}

double torus_distance(const std::vector<double>& a, const std::vector<double>& b);

// Plain Euclidean distance, used for per-cube computations where the cube is
// treated as a bounded region without wrap-around.  Written with the same
// arithmetic shape as torus_distance so results are bit-identical whenever
// no coordinate difference exceeds 1/2.
inline double euclid_distance2(const double* a, const double* b, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) {
        double dx = std::fabs(a[i] - b[i]);
        s += dx * dx;
    }
    return s;
}

inline double euclid_distance(const double* a, const double* b, int dim) {
    return std::sqrt(euclid_distance2(a, b, dim));
}

// Volume of the unit ball in R^d: pi^{d/2} / Gamma(d/2 + 1).
double ball_volume_coeff(int dim);

// Volume of a Euclidean ball of radius r >= 0 in R^d.
double ball_volume(double r, int dim);

// Diameter of the torus under the wrap-around metric: sqrt(d)/2.
inline double torus_diameter(int dim) { return std::sqrt(static_cast<double>(dim)) / 2.0; }

}  // namespace knnball
