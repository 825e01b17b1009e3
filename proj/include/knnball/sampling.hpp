#pragma once

// Samplers for the point processes under study: homogeneous Poisson and
// binomial processes on the torus, the thinning/augmentation coupling used
// by de-Poissonization, and the limiting marked Poisson measure.

#include "knnball/rng.hpp"
#include "knnball/types.hpp"

namespace knnball {

// Homogeneous Poisson process on [0,1)^d with the given intensity
// (= expected number of points).
PointSet sample_poisson_process(double intensity, int dim, Rng& rng);
void sample_poisson_process_into(PointSet& out, double intensity, int dim, Rng& rng);

// Binomial process: exactly n i.i.d. uniform points.
PointSet sample_binomial_process(std::uint64_t n, int dim, Rng& rng);
void sample_binomial_process_into(PointSet& out, std::uint64_t n, int dim, Rng& rng);

// Couples a Poisson sample `base` of the given intensity with
//   thinned   - base with each point deleted independently with prob. eta,
//   augmented - base plus an independent Poisson(intensity * eta) layer,
// so that thinned and augmented are Poisson processes of intensity
// (1 -+ eta) * intensity with thinned <= base <= augmented pointwise.
CoupledTriple sample_coupled(const PointSet& base, double eta, double intensity, Rng& rng);

// Draws an n-point binomial process that sits inside the coupling sandwich
// whenever the counts permit: it keeps all of `thinned` and tops up with a
// uniformly chosen subset of augmented \ thinned.  By exchangeability the
// result is exactly n i.i.d. uniform points in every case; when
// |thinned| > n or |augmented| < n the sandwich cannot hold and the draw
// falls back to a subset (resp. a topped-up superset) instead.
PointSet coupled_binomial(const CoupledTriple& triple, std::uint64_t n, Rng& rng);

// Checks thinned <= binom <= augmented as multisets of exact coordinates.
bool sandwich_holds(const CoupledTriple& triple, const PointSet& binom);

// Samples the limiting marked Poisson measure on [0,1)^d x [s0, inf) with
// intensity b * Lebesgue (x) tau_k, tau_k(du) = e^{-u}/(k-1)! du.  The
// expected number of atoms is b * e^{-s0}/(k-1)!.
MarkedPointSet sample_limit_process(double b, int k, double s0, int dim, Rng& rng);

}  // namespace knnball
