#include "knnball/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace knnball {

namespace {

inline std::uint64_t splitmix64_mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream_index) {
    // Disperse (seed, stream) into four state words via SplitMix64.
    std::uint64_t z = seed ^ (0xD1B54A32D192ED03ULL * (stream_index + 1));
    for (int i = 0; i < 4; ++i) {
        z = splitmix64_mix(z);
        s_[i] = z;
    }
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t Rng::next_u64() {
    // xoshiro256** step (Blackman & Vigna).
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

std::uint64_t Rng::uniform_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_below requires n >= 1");
    if (n == 1) return 0;
    std::uint64_t mask = ~0ULL >> __builtin_clzll((n - 1) | 1);
    for (;;) {
        std::uint64_t v = next_u64() & mask;
        if (v < n) return v;
    }
}

double Rng::exponential() {
    return -std::log1p(-uniform());
}

std::uint64_t Rng::poisson(double lambda) {
    if (!(lambda >= 0.0)) throw std::domain_error("poisson rate must be >= 0");
    if (lambda == 0.0) return 0;
    if (lambda < 30.0) return poisson_inversion(lambda);
    return poisson_ptrs(lambda);
}

std::uint64_t Rng::poisson_inversion(double lambda) {
    // Sequential search from 0; fine for lambda < 30.
    double p = std::exp(-lambda);
    double cum = p;
    double u = uniform();
    std::uint64_t k = 0;
    while (u > cum) {
        ++k;
        p *= lambda / static_cast<double>(k);
        cum += p;
        if (k > 2000) break;  // u within rounding of 1; tail is below 1e-300
    }
    return k;
}

std::uint64_t Rng::poisson_ptrs(double lambda) {
    // Transformed rejection with squeeze (Hormann's PTRS).
    const double b = 0.931 + 2.53 * std::sqrt(lambda);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_lambda = std::log(lambda);
    for (;;) {
        double u = uniform() - 0.5;
        double v = uniform();
        double us = 0.5 - std::fabs(u);
        double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        double k = kf;
        double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
        double rhs = k * log_lambda - lambda - std::lgamma(k + 1.0);
        if (lhs <= rhs) return static_cast<std::uint64_t>(kf);
    }
}

}  // namespace knnball
