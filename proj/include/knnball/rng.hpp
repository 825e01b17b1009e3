#pragma once

// Deterministic random number generation.  The whole laboratory draws from
// xoshiro256** generators seeded through SplitMix64, so that every
// (seed, stream_index) pair yields the same bit stream on every platform and
// replication streams are independent of scheduling.

#include <cstdint>

namespace knnball {

class Rng {
public:
    // Stream `stream_index` of the experiment-level seed.  Stream 0 is the
    // conventional default for single-stream uses.
    explicit Rng(std::uint64_t seed, std::uint64_t stream_index = 0);

    std::uint64_t next_u64();

    // Uniform double in [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n), n >= 1, via masked rejection (unbiased).
    std::uint64_t uniform_below(std::uint64_t n);

    // Standard exponential via inversion; uses -log1p(-u) so u = 0 is safe.
    double exponential();

    // Poisson(lambda), lambda >= 0.  Sequential inversion for small lambda,
    // transformed rejection (PTRS) for large lambda.
    std::uint64_t poisson(double lambda);

private:
    std::uint64_t s_[4];
    std::uint64_t poisson_inversion(double lambda);
    std::uint64_t poisson_ptrs(double lambda);
};

}  // namespace knnball
