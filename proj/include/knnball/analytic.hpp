#pragma once

// Closed-form quantities for the k-nearest-neighbor ball-volume process:
// scaling sequences, limit densities, rate functions, exact first-moment
// references, and the schedule diagnostic separating the growth regimes.

#include <cstdint>
#include <string>
#include <vector>

namespace knnball {

// b_n = n * a_n^{k-1} * e^{-a_n}: the scale of the number of small-ball points.
double scaling_b_n(double n, double a_n, int k);

// r_n(u) = ((a_n + u) / (n * theta_d))^{1/d}; a_n + u < 0 is a domain error.
double radius_r_n(double u, double n, double a_n, int dim);

// alpha_k = e^{-s0} / (k-1)!  (total mass of the limit mark density).
double alpha_k(int k, double s0);

// tau_k(u) = e^{-u} / (k-1)! for u >= s0, else 0.
double tau_k_density(double u, int k, double s0);

// Poisson-type rate function I_k(x) = x log(x/alpha_k) - x + alpha_k,
// with I_k(0) = alpha_k and I_k(x) = +infinity for x < 0.
double rate_I_k(double x, int k, double s0);

// H(x) = x log x + 1 - x on x >= 0 (H(0) = 1); x < 0 is a domain error.
double entropy_H(double x);

// Chernoff bound on the probability that the coupling sandwich fails:
//   exp(-n(1+eta)H(1/(1+eta))) + exp(-n(1-eta)H(1/(1-eta))),  eta = eps/a_n.
// Requires 0 < eps < a_n; the value always lies in (0, 2].
double sandwich_failure_bound(double n, double a_n, double eps);

// Exact mean number of points whose closed r_n(s0)-ball holds at most k
// points including itself, for the Poisson model (Mecke formula):
//   n * sum_{i<k} e^{-(a_n+s0)} (a_n+s0)^i / i!.
double expected_low_degree_count(double n, double a_n, int k, double s0);

// The same mean under the n-point binomial model, exact:
//   n * P(Binomial(n-1, (a_n+s0)/n) <= k-1).
double expected_low_degree_count_binomial(std::uint64_t n, double a_n, int k, double s0);

// Exact intensity of the rescaled marked process above level u on a region
// of Lebesgue measure leb_B:
//   n * leb_B * sum_{i<k} e^{-(a_n+u)} (a_n+u)^i / i!.
double intensity_tail(double n, double a_n, int k, double u, double leb_B);

// A mark-density profile h on a u-grid (locations enter only through
// Lebesgue measure, so a profile depends on u alone here).  Nodes must be
// increasing and start at s0 or above.
struct DensityGrid {
    double s0 = 0.0;
    std::vector<double> u_nodes;
    std::vector<double> h_values;

    static DensityGrid constant(double c, double s0, double u_max, std::size_t nodes = 400);
};

// Relative entropy of h d(Leb x tau_k) with respect to Leb x tau_k:
//   integral of (h log h - h + 1) dtau_k over [s0, u_max],
// evaluated with exact tau_k masses per grid cell and trapezoidal values of
// the integrand, so constant profiles are exact up to the tail truncation.
// For h == c this equals alpha_k * H(c) up to e^{-u_max}/(k-1)!.
double relative_entropy(const DensityGrid& grid, int k, double s0);

// A flat window test function U(x,u) = height on box x (u_lo, u_hi], else 0.
struct PlateauWindow {
    std::vector<double> box_lo, box_hi;  // axis-aligned box in [0,1]^d
    double u_lo = 0.0, u_hi = 1.0;
    double height = 1.0;
};

// Limit value of b^{-1} E[ prod_l (1 - exp(-(mu(U_l) - eps_l)_+)) ] under the
// limiting marked Poisson measure: only single-atom configurations survive,
// giving a closed form over the window intersection.
double m0_limit_functional(const PlateauWindow& U1, const PlateauWindow& U2,
                           double eps1, double eps2, int k);

enum class Regime { LDP, Boundary, M0 };

struct RegimeResult {
    std::vector<double> diagnostic;  // log b_n per ladder point
    double slope_per_decade = 0.0;   // least-squares slope vs log10 n
    Regime regime = Regime::Boundary;
};

std::string regime_name(Regime r);

// Classifies a schedule by the trend of log b_n across the ladder.  The
// ladder must be strictly increasing with at least two entries, all >= 3.
// |slope| <= 0.01 per decade is called Boundary; growth is LDP; decay is M0.
RegimeResult regime_diagnostic(const std::vector<double>& n_ladder,
                               const std::vector<double>& a_values, int k);

}  // namespace knnball
