#pragma once

// Numeric helpers shared by the analytic formulas, the estimators and the
// test oracles: compensated summation, Poisson/binomial tail probabilities
// in log space, the regularized incomplete beta function, Student-t and
// Spearman rank statistics.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace knnball {

// Kahan-compensated sum in index order (deterministic, thread-count free).
double kahan_sum(const double* xs, std::size_t n);
double kahan_sum(const std::vector<double>& xs);

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;  // standard error of the mean
};

// Two-pass mean and standard error (sample sd / sqrt(n)), Kahan accumulation.
MeanStderr mean_stderr(const std::vector<double>& xs);

// log of the Poisson pmf P(X = j), X ~ Poisson(lambda).
double log_poisson_pmf(std::uint64_t j, double lambda);
double poisson_pmf(std::uint64_t j, double lambda);

// log P(X >= m) and log P(X <= m), computed stably for extreme tails.
double log_poisson_upper_tail(std::uint64_t m, double lambda);
double log_poisson_lower_tail(std::uint64_t m, double lambda);
double poisson_upper_tail(std::uint64_t m, double lambda);
double poisson_lower_tail(std::uint64_t m, double lambda);

// Regularized incomplete beta function I_x(a, b), continued fraction (Lentz).
double incomplete_beta(double a, double b, double x);

// P(Binomial(n, p) <= m), exact via the incomplete beta identity.
double binomial_cdf(std::uint64_t m, std::uint64_t n, double p);

// One-sided tail P(T_df >= t) of Student's t distribution.
double student_t_upper_tail(double t, double df);

struct SpearmanResult {
    double rho = 0.0;
    double p_one_sided_neg = 1.0;  // P(observing a trend this negative), t approximation
    double p_one_sided_pos = 1.0;
};

// Spearman rank correlation with average ranks for ties.  p-values use the
// t approximation t = rho * sqrt((n-2)/(1-rho^2)); |rho| = 1 maps to p = 0.
SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y);

// Two-sample style one-sample Kolmogorov-Smirnov statistic of `sample`
// against a cdf given as callable on doubles.
double ks_statistic(std::vector<double> sample, double (*cdf)(double, const void*), const void* ctx);

// Asymptotic one-sample KS critical value at level alpha for n samples.
double ks_critical(double alpha, std::size_t n);

// Chi-square upper critical value via the Wilson-Hilferty approximation.
double chi2_critical(double alpha, double df);

}  // namespace knnball
