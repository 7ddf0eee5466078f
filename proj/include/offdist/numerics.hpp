#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace offdist {

// Neumaier (Kahan-Babuska) compensated accumulator. Keeps long sums honest
// at 1e-12 tolerances for n up to 10^6 terms.
class CompensatedSum {
public:
    CompensatedSum() = default;
    explicit CompensatedSum(double x) : sum_(x) {}

    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    CompensatedSum& operator+=(double x) {
        add(x);
        return *this;
    }

    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

template <typename Iter, typename Fn>
double compensated_sum(Iter first, Iter last, Fn term) {
    CompensatedSum acc;
    for (; first != last; ++first) acc.add(term(*first));
    return acc.value();
}

inline double standard_normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

// Inverse standard normal CDF. Acklam's rational approximation refined with
// one Halley step; absolute error below 1e-15 over (0,1).
inline double standard_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("standard_normal_quantile: p must be in (0,1)");
    }
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley refinement against erfc.
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

// Solves the symmetric positive definite system A x = b in place via
// Cholesky. A is row-major d x d. Returns false when a pivot falls below
// `rank_tol` times the largest diagonal entry (numerically rank deficient).
inline bool solve_spd(std::vector<double> a, std::vector<double> b, std::size_t d,
                      std::vector<double>& x, double rank_tol = 1e-10) {
    double max_diag = 0.0;
    for (std::size_t i = 0; i < d; ++i) max_diag = std::max(max_diag, std::abs(a[i * d + i]));
    if (max_diag == 0.0) return false;
    for (std::size_t k = 0; k < d; ++k) {
        double pivot = a[k * d + k];
        for (std::size_t j = 0; j < k; ++j) pivot -= a[k * d + j] * a[k * d + j];
        if (!(pivot > rank_tol * max_diag)) return false;
        const double lkk = std::sqrt(pivot);
        a[k * d + k] = lkk;
        for (std::size_t i = k + 1; i < d; ++i) {
            double s = a[i * d + k];
            for (std::size_t j = 0; j < k; ++j) s -= a[i * d + j] * a[k * d + j];
            a[i * d + k] = s / lkk;
        }
    }
    // forward then backward substitution
    for (std::size_t i = 0; i < d; ++i) {
        double s = b[i];
        for (std::size_t j = 0; j < i; ++j) s -= a[i * d + j] * b[j];
        b[i] = s / a[i * d + i];
    }
    x.assign(d, 0.0);
    for (std::size_t ii = d; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < d; ++j) s -= a[j * d + ii] * x[j];
        x[ii] = s / a[ii * d + ii];
    }
    return true;
}

// Empirical quantile of a sorted vector: the order statistic at
// floor(q * n), clamped to the valid range. Shared by the bootstrap
// routines so replicate quantiles are reproducible.
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("sorted_quantile: empty input");
    const auto n = static_cast<long long>(sorted.size());
    auto idx = static_cast<long long>(std::floor(q * static_cast<double>(n)));
    if (idx < 0) idx = 0;
    if (idx >= n) idx = n - 1;
    return sorted[static_cast<std::size_t>(idx)];
}

}  // namespace offdist
