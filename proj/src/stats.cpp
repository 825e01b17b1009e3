#include "knnball/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace knnball {

double kahan_sum(const double* xs, std::size_t n) {
    // Neumaier's compensated sum: unlike the plain Kahan loop it also keeps
    // the low-order part when a new addend cancels a large running sum.
    double sum = 0.0, c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double t = sum + xs[i];
        if (std::fabs(sum) >= std::fabs(xs[i]))
            c += (sum - t) + xs[i];
        else
            c += (xs[i] - t) + sum;
        sum = t;
    }
    return sum + c;
}

double kahan_sum(const std::vector<double>& xs) { return kahan_sum(xs.data(), xs.size()); }

MeanStderr mean_stderr(const std::vector<double>& xs) {
    MeanStderr out;
    const std::size_t n = xs.size();
    if (n == 0) return out;
    out.mean = kahan_sum(xs) / static_cast<double>(n);
    if (n == 1) return out;
    double ss = 0.0, c = 0.0;
    for (double x : xs) {
        double d = x - out.mean;
        double y = d * d - c;
        double t = ss + y;
        c = (t - ss) - y;
        ss = t;
    }
    double var = ss / static_cast<double>(n - 1);
    out.stderr_ = std::sqrt(var / static_cast<double>(n));
    return out;
}

// ======================= Poisson tails in log space =======================

double log_poisson_pmf(std::uint64_t j, double lambda) {
    if (lambda == 0.0) return j == 0 ? 0.0 : -HUGE_VAL;
    double jd = static_cast<double>(j);
    return jd * std::log(lambda) - lambda - std::lgamma(jd + 1.0);
}

double poisson_pmf(std::uint64_t j, double lambda) { return std::exp(log_poisson_pmf(j, lambda)); }

namespace {

// Sum of pmf ratios going up from m: 1 + lam/(m+1) + lam^2/((m+1)(m+2)) + ...
double upper_ratio_sum(std::uint64_t m, double lambda) {
    double f = 1.0, term = 1.0;
    double j = static_cast<double>(m);
    while (term > 1e-19 * f) {
        term *= lambda / (j + 1.0);
        f += term;
        j += 1.0;
        if (j > static_cast<double>(m) + 1e7) break;
    }
    return f;
}

// Sum of pmf ratios going down from m: 1 + m/lam + m(m-1)/lam^2 + ...
double lower_ratio_sum(std::uint64_t m, double lambda) {
    double f = 1.0, term = 1.0;
    for (std::uint64_t j = m; j > 0; --j) {
        term *= static_cast<double>(j) / lambda;
        f += term;
        if (term < 1e-19 * f) break;
    }
    return f;
}

}  // namespace

double log_poisson_upper_tail(std::uint64_t m, double lambda) {
    if (m == 0) return 0.0;
    if (lambda == 0.0) return -HUGE_VAL;
    double md = static_cast<double>(m);
    if (md > lambda) {
        // Anchor at the boundary term; ratios < 1 give a convergent series.
        return log_poisson_pmf(m, lambda) + std::log(upper_ratio_sum(m, lambda));
    }
    double lower = std::exp(log_poisson_pmf(m - 1, lambda)) * lower_ratio_sum(m - 1, lambda);
    lower = std::min(lower, 1.0);
    return std::log1p(-lower);
}

double log_poisson_lower_tail(std::uint64_t m, double lambda) {
    if (lambda == 0.0) return 0.0;
    double md = static_cast<double>(m);
    if (md < lambda) {
        return log_poisson_pmf(m, lambda) + std::log(lower_ratio_sum(m, lambda));
    }
    double upper = std::exp(log_poisson_pmf(m + 1, lambda)) * upper_ratio_sum(m + 1, lambda);
    upper = std::min(upper, 1.0);
    return std::log1p(-upper);
}

double poisson_upper_tail(std::uint64_t m, double lambda) {
    return std::exp(log_poisson_upper_tail(m, lambda));
}

double poisson_lower_tail(std::uint64_t m, double lambda) {
    return std::exp(log_poisson_lower_tail(m, lambda));
}

// ===================== incomplete beta and descendants =====================

namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double betacf(double a, double b, double x) {
    const double eps = 3e-16, fpmin = 1e-300;
    const int max_iter = 400;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    return h;  // converged to working precision for all uses here
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("incomplete_beta needs a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                      a * std::log(x) + b * std::log1p(-x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double binomial_cdf(std::uint64_t m, std::uint64_t n, double p) {
    if (p < 0.0 || p > 1.0) throw std::domain_error("binomial probability must lie in [0,1]");
    if (m >= n) return 1.0;
    if (p == 0.0) return 1.0;
    if (p == 1.0) return 0.0;
    // P(X <= m) = I_{1-p}(n - m, m + 1)
    return incomplete_beta(static_cast<double>(n - m), static_cast<double>(m) + 1.0, 1.0 - p);
}

double student_t_upper_tail(double t, double df) {
    if (df <= 0.0) throw std::domain_error("degrees of freedom must be positive");
    double x = df / (df + t * t);
    double half_two_sided = 0.5 * incomplete_beta(0.5 * df, 0.5, x);
    return t >= 0.0 ? half_two_sided : 1.0 - half_two_sided;
}

// ============================ rank statistics ==============================

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("spearman needs equal-length inputs");
    SpearmanResult out;
    const std::size_t n = x.size();
    if (n < 2) return out;
    std::vector<double> rx = average_ranks(x), ry = average_ranks(y);
    double mx = kahan_sum(rx) / n, my = kahan_sum(ry) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = rx[i] - mx, dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return out;  // constant input: no trend testable
    out.rho = sxy / std::sqrt(sxx * syy);
    if (n < 3) return out;
    double one_minus = 1.0 - out.rho * out.rho;
    if (one_minus < 1e-14) {
        out.p_one_sided_neg = out.rho < 0.0 ? 0.0 : 1.0;
        out.p_one_sided_pos = out.rho > 0.0 ? 0.0 : 1.0;
        return out;
    }
    double df = static_cast<double>(n - 2);
    double t = out.rho * std::sqrt(df / one_minus);
    out.p_one_sided_pos = student_t_upper_tail(t, df);
    out.p_one_sided_neg = student_t_upper_tail(-t, df);
    return out;
}

double ks_statistic(std::vector<double> sample, double (*cdf)(double, const void*), const void* ctx) {
    std::sort(sample.begin(), sample.end());
    const std::size_t n = sample.size();
    if (n == 0) return 0.0;
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double f = cdf(sample[i], ctx);
        double hi = static_cast<double>(i + 1) / n - f;
        double lo = f - static_cast<double>(i) / n;
        d = std::max(d, std::max(hi, lo));
    }
    return d;
}

double ks_critical(double alpha, std::size_t n) {
    double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    double sn = std::sqrt(static_cast<double>(n));
    return c / (sn + 0.12 + 0.11 / sn);
}

namespace {

// Acklam's rational approximation to the standard normal quantile.
double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("quantile needs p in (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00, 2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1.0 - plow;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > phigh) {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double q = p - 0.5, r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double chi2_critical(double alpha, double df) {
    if (df <= 0.0) throw std::domain_error("degrees of freedom must be positive");
    double z = normal_quantile(1.0 - alpha);
    double t = 1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df));
    return df * t * t * t;
}

}  // namespace knnball
