#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "mindprint/errors.hpp"
#include "mindprint/rng.hpp"

namespace mindprint {

inline double normal_pdf(double x) {
    return 0.3989422804014326779399460599344 * std::exp(-0.5 * x * x);
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.70710678118654752440084436210485);
}

namespace detail {

// Acklam's rational approximation for p in (0, 0.5], followed by two
// Halley-polished Newton steps against the erfc-based CDF.
inline double normal_quantile_lower(double p) {
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};

    double x;
    if (p < 0.02425) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    for (int i = 0; i < 2; ++i) {
        double e = normal_cdf(x) - p;
        double u = e / normal_pdf(x);
        x = x - u / (1.0 + x * u / 2.0);
    }
    return x;
}

} // namespace detail

// Inverse standard-normal quantile, better than 1e-9 absolute accuracy
// (validated against the committed oracle table in data/oracle/). Reduced to
// the lower tail by symmetry; the upper extreme tail is limited only by the
// double representation of 1 - p itself.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("normal_quantile: p must lie strictly in (0,1)");
    }
    if (p > 0.5) return -detail::normal_quantile_lower(1.0 - p);
    return detail::normal_quantile_lower(p);
}

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

// Wilson score interval for a binomial proportion (default 95%).
inline Interval wilson_interval(std::size_t successes, std::size_t n,
                                double z = 1.959963984540054) {
    if (n == 0) throw InsufficientDataError("wilson_interval: n == 0");
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

namespace detail {

// Regularized lower incomplete gamma P(a,x) by series expansion.
inline double gamma_p_series(double a, double x) {
    double sum = 1.0 / a;
    double term = sum;
    for (int n = 1; n < 1000; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a,x) by Lentz continued fraction.
inline double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

} // namespace detail

// Survival function of the chi-square distribution with dof degrees of freedom.
inline double chi_square_sf(double x, double dof) {
    if (x < 0.0 || dof <= 0.0) throw std::domain_error("chi_square_sf: bad arguments");
    if (x == 0.0) return 1.0;
    const double a = 0.5 * dof;
    const double xx = 0.5 * x;
    if (xx < a + 1.0) return 1.0 - detail::gamma_p_series(a, xx);
    return detail::gamma_q_cf(a, xx);
}

// Percentile bootstrap CI over per-unit values. Resampling is seeded and
// single-threaded, so results are reproducible and order-independent given
// a sorted unit list.
inline Interval bootstrap_percentile_ci(const std::vector<double>& unit_values,
                                        std::size_t resamples, std::uint64_t seed,
                                        double alpha = 0.05) {
    if (unit_values.empty()) throw InsufficientDataError("bootstrap: no units");
    Rng rng(seed);
    const std::size_t n = unit_values.size();
    std::vector<double> means;
    means.reserve(resamples);
    for (std::size_t r = 0; r < resamples; ++r) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += unit_values[static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)) % n];
        }
        means.push_back(acc / static_cast<double>(n));
    }
    std::sort(means.begin(), means.end());
    auto pick = [&](double q) {
        double pos = q * static_cast<double>(means.size() - 1);
        std::size_t i = static_cast<std::size_t>(pos);
        double frac = pos - static_cast<double>(i);
        if (i + 1 >= means.size()) return means.back();
        return means[i] * (1.0 - frac) + means[i + 1] * frac;
    };
    return {pick(alpha / 2.0), pick(1.0 - alpha / 2.0)};
}

inline double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) return std::numeric_limits<double>::quiet_NaN();
    double mx = mean_of(x), my = mean_of(y);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

} // namespace mindprint
