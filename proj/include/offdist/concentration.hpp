#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "offdist/numerics.hpp"
#include "offdist/return_data.hpp"

namespace offdist {

// Scalar concentration interval for F_pi(kappa) built from the weighted
// indicator X_i = min(rho_i, cap) * 1{G_i <= kappa}. Truncating the weight
// only lowers a nonnegative variable, so E[X] <= F_pi(kappa) and a lower
// confidence bound on E[X] stays a valid lower bound on F_pi(kappa) without
// knowing the true weight range.
struct CiMethod {
    enum class Kind { truncated_empirical_bernstein, hoeffding_with_cap };

    Kind kind = Kind::truncated_empirical_bernstein;
    double cap = 1.0;

    void validate() const {
        if (!(cap > 0.0)) throw std::invalid_argument("CiMethod: cap must be positive");
    }
};

namespace detail {

// One-sided 1-delta lower confidence bound on the mean of values in
// [0, cap], with the sample size used in the slack terms overridable
// (plan optimization prices bounds as if n were the eval-split size).
inline double lower_bound_on_mean(const std::vector<double>& x, double delta,
                                  const CiMethod& method, std::size_t as_if_n) {
    const auto n_stat = x.size();
    const auto n = static_cast<double>(as_if_n);
    if (n_stat < 2 || as_if_n < 2) {
        throw std::invalid_argument("concentration bound requires n >= 2");
    }
    CompensatedSum s;
    for (double v : x) s.add(v);
    const double mean = s.value() / static_cast<double>(n_stat);

    double lb = 0.0;
    if (method.kind == CiMethod::Kind::hoeffding_with_cap) {
        lb = mean - method.cap * std::sqrt(std::log(1.0 / delta) / (2.0 * n));
    } else {
        CompensatedSum sq;
        for (double v : x) {
            const double d = v - mean;
            sq.add(d * d);
        }
        const double var = sq.value() / static_cast<double>(n_stat - 1);
        const double log_term = std::log(2.0 / delta);
        lb = mean - std::sqrt(2.0 * var * log_term / n) -
             7.0 * method.cap * log_term / (3.0 * (n - 1.0));
    }
    return std::clamp(lb, 0.0, 1.0);
}

inline std::vector<double> truncated_indicators(const ReturnDataset& data, double kappa,
                                                double cap, bool above) {
    std::vector<double> x;
    x.reserve(data.size());
    for (const auto& s : data.samples) {
        const bool hit = above ? (s.g > kappa) : (s.g <= kappa);
        x.push_back(hit ? std::min(s.rho, cap) : 0.0);
    }
    return x;
}

}  // namespace detail

inline double ci_lower(const ReturnDataset& data, double kappa, double delta_i,
                       const CiMethod& method) {
    if (!(delta_i > 0.0 && delta_i < 1.0)) {
        throw std::invalid_argument("ci_lower: delta must be in (0,1)");
    }
    method.validate();
    return detail::lower_bound_on_mean(detail::truncated_indicators(data, kappa, method.cap, false),
                                       delta_i, method, data.size());
}

// Upper bound via the complement: E[rho 1{G > kappa}] = 1 - F_pi(kappa)
// because E[rho] = 1, so a lower bound on the complement mean yields an
// upper bound on F_pi(kappa).
inline double ci_upper(const ReturnDataset& data, double kappa, double delta_i,
                       const CiMethod& method) {
    if (!(delta_i > 0.0 && delta_i < 1.0)) {
        throw std::invalid_argument("ci_upper: delta must be in (0,1)");
    }
    method.validate();
    const double complement_lb = detail::lower_bound_on_mean(
        detail::truncated_indicators(data, kappa, method.cap, true), delta_i, method, data.size());
    return std::clamp(1.0 - complement_lb, 0.0, 1.0);
}

// Bound predictions used during plan search: statistics come from the
// train split, slack is priced at the eval-split size.
inline double ci_lower_predicted(const ReturnDataset& train, double kappa, double delta_i,
                                 const CiMethod& method, std::size_t as_if_n) {
    method.validate();
    return detail::lower_bound_on_mean(
        detail::truncated_indicators(train, kappa, method.cap, false), delta_i, method, as_if_n);
}

inline double ci_upper_predicted(const ReturnDataset& train, double kappa, double delta_i,
                                 const CiMethod& method, std::size_t as_if_n) {
    method.validate();
    const double complement_lb = detail::lower_bound_on_mean(
        detail::truncated_indicators(train, kappa, method.cap, true), delta_i, method, as_if_n);
    return std::clamp(1.0 - complement_lb, 0.0, 1.0);
}

// Picks the weight-truncation threshold on the train split: candidate caps
// are upper quantiles of the observed weights, scored by the predicted
// lower bounds (priced at the eval size) summed over the probe key points.
// Falls back to the 95th weight percentile when scoring is degenerate.
inline double choose_cap(const ReturnDataset& train, std::size_t eval_size, double delta,
                         const std::vector<double>& probe_kappas,
                         CiMethod::Kind kind = CiMethod::Kind::truncated_empirical_bernstein) {
    std::vector<double> rhos;
    rhos.reserve(train.size());
    for (const auto& s : train.samples) rhos.push_back(s.rho);
    std::sort(rhos.begin(), rhos.end());
    if (rhos.empty() || !(rhos.back() > 0.0)) return 1.0;

    const double fallback = std::max(sorted_quantile(rhos, 0.95), 1e-6);
    if (train.size() < 2 || eval_size < 2 || probe_kappas.empty()) return fallback;

    const double delta_i = delta / static_cast<double>(probe_kappas.size());
    std::vector<double> candidates;
    for (double q : {0.5, 0.75, 0.9, 0.95, 0.99, 1.0}) {
        const double c = sorted_quantile(rhos, q);
        if (c > 0.0) candidates.push_back(c);
    }
    candidates.push_back(1.0);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    double best_cap = fallback;
    double best_score = -1.0;
    for (double c : candidates) {
        const CiMethod method{kind, c};
        CompensatedSum score;
        for (double kappa : probe_kappas) {
            score.add(ci_lower_predicted(train, kappa, delta_i, method, eval_size));
        }
        if (score.value() > best_score) {
            best_score = score.value();
            best_cap = c;
        }
    }
    return best_score > 0.0 ? best_cap : fallback;
}

}  // namespace offdist
