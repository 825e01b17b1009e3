#pragma once

// Shared value types for point processes on the flat unit torus [0,1)^d.
// Coordinates are stored flat (row major, point-major) so that samplers,
// spatial queries and estimators can share buffers without conversions.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace knnball {

inline constexpr int kMaxDim = 8;

inline void check_dim(int dim) {
    if (dim < 1 || dim > kMaxDim)
        throw std::invalid_argument("dimension must be between 1 and 8");
}

// A finite point configuration on [0,1)^d.
struct PointSet {
    int dim = 1;
    std::vector<double> xs;  // size() == n * dim, point i at xs[i*dim .. i*dim+dim-1]

    PointSet() = default;
    explicit PointSet(int d) : dim(d) { check_dim(d); }

    std::size_t size() const { return dim > 0 ? xs.size() / static_cast<std::size_t>(dim) : 0; }
    const double* point(std::size_t i) const { return xs.data() + i * static_cast<std::size_t>(dim); }
    double* point(std::size_t i) { return xs.data() + i * static_cast<std::size_t>(dim); }

    void push_back(const double* p) { xs.insert(xs.end(), p, p + dim); }
    void clear() { xs.clear(); }
    void reserve(std::size_t n) { xs.reserve(n * static_cast<std::size_t>(dim)); }
};

// An atomic marked point measure: sum of g-weighted Dirac masses at
// (location, mark) pairs.  Weights here are always 0 or 1, so retained
// atoms are stored explicitly and absent atoms are simply not stored.
struct MarkedPointSet {
    int dim = 1;
    std::vector<double> xs;     // locations, flat as in PointSet
    std::vector<double> marks;  // one mark per atom

    MarkedPointSet() = default;
    explicit MarkedPointSet(int d) : dim(d) { check_dim(d); }

    std::size_t size() const { return marks.size(); }
    const double* location(std::size_t i) const { return xs.data() + i * static_cast<std::size_t>(dim); }
    double mark(std::size_t i) const { return marks[i]; }

    void push_back(const double* loc, double mark) {
        xs.insert(xs.end(), loc, loc + dim);
        marks.push_back(mark);
    }
    void clear() { xs.clear(); marks.clear(); }

    // Total mass (number of retained atoms, since weights are indicator valued).
    double total_mass() const { return static_cast<double>(marks.size()); }
};

// Jointly sampled processes used by the de-Poissonization sandwich:
//   thinned   = base with independent deletions,
//   augmented = base plus an independent extra Poisson layer,
// so thinned <= base <= augmented as sets, by construction.
struct CoupledTriple {
    PointSet base;
    PointSet thinned;
    PointSet augmented;
    std::vector<std::uint8_t> deleted;  // per base point: 1 if absent from thinned
    PointSet extra;                     // augmented = base followed by extra
};

}  // namespace knnball
