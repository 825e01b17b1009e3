#include "knnball/analytic.hpp"

#include <cmath>
#include <stdexcept>

#include "knnball/stats.hpp"
#include "knnball/torus.hpp"

namespace knnball {

namespace {

void check_k(int k) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
}

// (k-1)! via lgamma; exact in double for k <= 20.
double factorial_k_minus_1(int k) {
    check_k(k);
    return std::exp(std::lgamma(static_cast<double>(k)));
}

// sum_{i<k} e^{-v} v^i / i!, computed by a forward product (v >= 0).
double poisson_cdf_below_k(int k, double v) {
    double term = std::exp(-v);
    double sum = term;
    for (int i = 1; i < k; ++i) {
        term *= v / static_cast<double>(i);
        sum += term;
    }
    return sum;
}

}  // namespace

double scaling_b_n(double n, double a_n, int k) {
    check_k(k);
    if (!(n > 0.0)) throw std::domain_error("n must be positive");
    if (!(a_n >= 0.0)) throw std::domain_error("a_n must be non-negative");
    return n * std::pow(a_n, static_cast<double>(k - 1)) * std::exp(-a_n);
}

double radius_r_n(double u, double n, double a_n, int dim) {
    check_dim(dim);
    if (!(n > 0.0)) throw std::domain_error("n must be positive");
    double v = a_n + u;
    if (v < 0.0) throw std::domain_error("a_n + u must be non-negative");
    return std::pow(v / (n * ball_volume_coeff(dim)), 1.0 / static_cast<double>(dim));
}

double alpha_k(int k, double s0) {
    return std::exp(-s0) / factorial_k_minus_1(k);
}

double tau_k_density(double u, int k, double s0) {
    check_k(k);
    if (u < s0) return 0.0;
    return std::exp(-u) / factorial_k_minus_1(k);
}

double rate_I_k(double x, int k, double s0) {
    double alpha = alpha_k(k, s0);
    if (x < 0.0) return HUGE_VAL;
    if (x == 0.0) return alpha;
    return x * std::log(x / alpha) - x + alpha;
}

double entropy_H(double x) {
    if (x < 0.0) throw std::domain_error("entropy_H needs x >= 0");
    if (x == 0.0) return 1.0;
    return x * std::log(x) + 1.0 - x;
}

double sandwich_failure_bound(double n, double a_n, double eps) {
    if (!(n > 0.0)) throw std::domain_error("n must be positive");
    if (!(eps > 0.0 && eps < a_n)) throw std::domain_error("need 0 < eps < a_n");
    double eta = eps / a_n;
    double up = std::exp(-n * (1.0 + eta) * entropy_H(1.0 / (1.0 + eta)));
    double down = std::exp(-n * (1.0 - eta) * entropy_H(1.0 / (1.0 - eta)));
    return up + down;
}

double expected_low_degree_count(double n, double a_n, int k, double s0) {
    check_k(k);
    if (!(n > 0.0)) throw std::domain_error("n must be positive");
    double v = a_n + s0;
    if (v < 0.0) throw std::domain_error("a_n + s0 must be non-negative");
    return n * poisson_cdf_below_k(k, v);
}

double expected_low_degree_count_binomial(std::uint64_t n, double a_n, int k, double s0) {
    check_k(k);
    if (n < 1) throw std::domain_error("n must be positive");
    double v = a_n + s0;
    if (v < 0.0) throw std::domain_error("a_n + s0 must be non-negative");
    double p = v / static_cast<double>(n);
    if (p > 1.0) throw std::domain_error("(a_n + s0)/n must not exceed 1");
    return static_cast<double>(n) *
           binomial_cdf(static_cast<std::uint64_t>(k - 1), n - 1, p);
}

double intensity_tail(double n, double a_n, int k, double u, double leb_B) {
    check_k(k);
    if (!(n > 0.0)) throw std::domain_error("n must be positive");
    if (!(leb_B >= 0.0)) throw std::domain_error("region measure must be >= 0");
    double v = a_n + u;
    if (v < 0.0) throw std::domain_error("a_n + u must be non-negative");
    return n * leb_B * poisson_cdf_below_k(k, v);
}

DensityGrid DensityGrid::constant(double c, double s0, double u_max, std::size_t nodes) {
    if (!(c >= 0.0)) throw std::domain_error("density must be >= 0");
    if (!(u_max > s0)) throw std::invalid_argument("u_max must exceed s0");
    if (nodes < 2) throw std::invalid_argument("need at least two grid nodes");
    DensityGrid g;
    g.s0 = s0;
    g.u_nodes.resize(nodes);
    g.h_values.assign(nodes, c);
    for (std::size_t i = 0; i < nodes; ++i)
        g.u_nodes[i] = s0 + (u_max - s0) * static_cast<double>(i) / static_cast<double>(nodes - 1);
    return g;
}

double relative_entropy(const DensityGrid& grid, int k, double s0) {
    check_k(k);
    if (grid.u_nodes.size() != grid.h_values.size())
        throw std::invalid_argument("grid nodes and values must align");
    if (grid.u_nodes.size() < 2) throw std::invalid_argument("need at least two grid nodes");
    if (grid.u_nodes.front() < s0 - 1e-12)
        throw std::invalid_argument("grid must start at or above s0");
    auto integrand = [](double h) {
        if (h < 0.0) throw std::domain_error("density values must be >= 0");
        if (h == 0.0) return 1.0;
        return h * std::log(h) - h + 1.0;
    };
    double fact = factorial_k_minus_1(k);
    double acc = 0.0, comp = 0.0;
    for (std::size_t i = 0; i + 1 < grid.u_nodes.size(); ++i) {
        double ulo = grid.u_nodes[i], uhi = grid.u_nodes[i + 1];
        if (!(uhi > ulo)) throw std::invalid_argument("grid nodes must increase");
        double mass = (std::exp(-ulo) - std::exp(-uhi)) / fact;  // exact tau_k cell mass
        double val = 0.5 * (integrand(grid.h_values[i]) + integrand(grid.h_values[i + 1]));
        double y = mass * val - comp;
        double t = acc + y;
        comp = (t - acc) - y;
        acc = t;
    }
    return acc;
}

double m0_limit_functional(const PlateauWindow& U1, const PlateauWindow& U2,
                           double eps1, double eps2, int k) {
    check_k(k);
    if (U1.box_lo.size() != U1.box_hi.size() || U2.box_lo.size() != U2.box_hi.size() ||
        U1.box_lo.size() != U2.box_lo.size())
        throw std::invalid_argument("window boxes must share one dimension");
    if (!(U1.height >= 0.0) || !(U2.height >= 0.0))
        throw std::domain_error("window heights must be >= 0");
    // A configuration with zero atoms contributes nothing (each factor is
    // 1 - e^0 = 0 whenever some (h - eps)_+ vanishes there), and two or more
    // atoms carry probability O(b^2); the b -> 0 limit reduces to one atom
    // integrated against Leb x tau_k, which factorizes over the overlap.
    double g1 = 1.0 - std::exp(-std::max(U1.height - eps1, 0.0));
    double g2 = 1.0 - std::exp(-std::max(U2.height - eps2, 0.0));
    double vol = 1.0;
    for (std::size_t i = 0; i < U1.box_lo.size(); ++i) {
        double lo = std::max(U1.box_lo[i], U2.box_lo[i]);
        double hi = std::min(U1.box_hi[i], U2.box_hi[i]);
        vol *= std::max(hi - lo, 0.0);
    }
    double ulo = std::max(U1.u_lo, U2.u_lo);
    double uhi = std::min(U1.u_hi, U2.u_hi);
    double umass = uhi > ulo ? (std::exp(-ulo) - std::exp(-uhi)) / factorial_k_minus_1(k) : 0.0;
    return g1 * g2 * vol * umass;
}

std::string regime_name(Regime r) {
    switch (r) {
        case Regime::LDP: return "ldp";
        case Regime::Boundary: return "boundary";
        case Regime::M0: return "m0";
    }
    return "boundary";
}

RegimeResult regime_diagnostic(const std::vector<double>& n_ladder,
                               const std::vector<double>& a_values, int k) {
    check_k(k);
    if (n_ladder.size() != a_values.size())
        throw std::invalid_argument("ladder and schedule must align");
    if (n_ladder.size() < 2)
        throw std::invalid_argument("regime diagnostic needs at least two ladder points");
    for (std::size_t i = 0; i < n_ladder.size(); ++i) {
        if (n_ladder[i] < 3.0) throw std::domain_error("ladder entries must be >= 3");
        if (i > 0 && !(n_ladder[i] > n_ladder[i - 1]))
            throw std::invalid_argument("ladder must be strictly increasing");
        if (!(a_values[i] >= 0.0)) throw std::domain_error("a_n must be non-negative");
    }
    RegimeResult out;
    out.diagnostic.resize(n_ladder.size());
    for (std::size_t i = 0; i < n_ladder.size(); ++i)
        out.diagnostic[i] = std::log(scaling_b_n(n_ladder[i], a_values[i], k));
    // Least-squares slope of log b_n against log10 n.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    double len = static_cast<double>(n_ladder.size());
    for (std::size_t i = 0; i < n_ladder.size(); ++i) {
        double x = std::log10(n_ladder[i]);
        sx += x;
        sy += out.diagnostic[i];
        sxx += x * x;
        sxy += x * out.diagnostic[i];
    }
    out.slope_per_decade = (len * sxy - sx * sy) / (len * sxx - sx * sx);
    if (std::fabs(out.slope_per_decade) <= 0.01) out.regime = Regime::Boundary;
    else out.regime = out.slope_per_decade > 0.0 ? Regime::LDP : Regime::M0;
    return out;
}

}  // namespace knnball
