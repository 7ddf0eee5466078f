#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "offdist/numerics.hpp"
#include "offdist/return_data.hpp"
#include "offdist/step_cdf.hpp"

namespace offdist {

namespace detail {

struct SortedWeights {
    std::vector<double> breakpoints;   // distinct returns, ascending
    std::vector<double> group_weight;  // sum of rho over samples tied at each breakpoint
    std::vector<double> cum_weight;    // compensated running sum of rho in sorted order
    double total_weight = 0.0;
};

// Stable sort by return (sample order preserved within ties), then group
// duplicates: each distinct return carries the summed weight of its ties.
inline SortedWeights sort_and_group(const ReturnDataset& data) {
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return data.samples[a].g < data.samples[b].g;
    });

    SortedWeights out;
    CompensatedSum running;
    std::size_t i = 0;
    while (i < order.size()) {
        const double g = data.samples[order[i]].g;
        CompensatedSum group;
        while (i < order.size() && data.samples[order[i]].g == g) {
            group.add(data.samples[order[i]].rho);
            running.add(data.samples[order[i]].rho);
            ++i;
        }
        out.breakpoints.push_back(g);
        out.group_weight.push_back(group.value());
        out.cum_weight.push_back(running.value());
    }
    out.total_weight = out.cum_weight.empty() ? 0.0 : out.cum_weight.back();
    return out;
}

// Divides cumulative weights by `denom`, clamping away one-ulp monotonicity
// wobble from the compensation terms.
inline std::vector<double> scaled_monotone(const std::vector<double>& cum, double denom,
                                           bool cap_at_one) {
    std::vector<double> vs(cum.size());
    double prev = 0.0;
    for (std::size_t i = 0; i < cum.size(); ++i) {
        double v = cum[i] / denom;
        if (cap_at_one && v > 1.0) v = 1.0;
        if (v < prev) v = prev;
        vs[i] = v;
        prev = v;
    }
    return vs;
}

}  // namespace detail

// Importance-sampled CDF estimate: nu -> (1/n) sum_i rho_i 1{G_i <= nu}.
// Unnormalized: the terminal value is (1/n) sum rho_i, which may differ
// from one. Per-breakpoint masses rho_i/n are retained for the plug-ins.
inline StepCdf estimate_cdf_is(const ReturnDataset& data) {
    if (data.empty()) throw std::invalid_argument("no samples");
    const auto sw = detail::sort_and_group(data);
    const auto n = static_cast<double>(data.size());
    StepCdf cdf(sw.breakpoints, detail::scaled_monotone(sw.cum_weight, n, false), 0.0,
                /*unnormalized=*/true);
    std::vector<double> masses(sw.group_weight.size());
    for (std::size_t i = 0; i < masses.size(); ++i) masses[i] = sw.group_weight[i] / n;
    cdf.set_masses(std::move(masses));
    return cdf;
}

// Weighted variant: nu -> sum_i rho_i 1{G_i <= nu} / sum_j rho_j.
// Biased but consistent; terminal value exactly one.
inline StepCdf estimate_cdf_wis(const ReturnDataset& data) {
    if (data.empty()) throw std::invalid_argument("no samples");
    const auto sw = detail::sort_and_group(data);
    if (!(sw.total_weight > 0.0)) throw std::invalid_argument("degenerate weights");
    StepCdf cdf(sw.breakpoints, detail::scaled_monotone(sw.cum_weight, sw.total_weight, true));
    std::vector<double> masses(sw.group_weight.size());
    for (std::size_t i = 0; i < masses.size(); ++i) masses[i] = sw.group_weight[i] / sw.total_weight;
    cdf.set_masses(std::move(masses));
    return cdf;
}

// Inverse CDF over the order statistics: the smallest breakpoint g with
// cdf(g) >= alpha. An importance-sampled estimate can top out below alpha;
// the largest order statistic is returned in that case.
inline double inverse_cdf(const StepCdf& cdf, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("inverse_cdf: alpha must be in (0,1]");
    }
    if (cdf.empty()) throw std::invalid_argument("inverse_cdf: empty cdf");
    return first_breakpoint_reaching(cdf, alpha, cdf.breakpoints().back());
}

// Point masses dF at the order statistics. For estimator-built CDFs these
// are the exact rho_i/n (or normalized) weights, summed over ties.
inline std::vector<MassPoint> discrete_pmf(const StepCdf& cdf) { return cdf.point_masses(); }

inline double plugin_mean(const StepCdf& cdf) {
    CompensatedSum acc;
    for (const auto& p : cdf.point_masses()) acc.add(p.mass * p.value);
    return acc.value();
}

inline double plugin_variance(const StepCdf& cdf) {
    const double mu = plugin_mean(cdf);
    CompensatedSum acc;
    for (const auto& p : cdf.point_masses()) {
        const double d = p.value - mu;
        acc.add(p.mass * d * d);
    }
    return acc.value();
}

inline double plugin_quantile(const StepCdf& cdf, double alpha) { return inverse_cdf(cdf, alpha); }

// CVaR in the distribution-generic form q - (1/alpha) E[max(0, q - G)]
// with q the alpha-quantile plug-in.
inline double plugin_cvar(const StepCdf& cdf, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("plugin_cvar: alpha must be in (0,1)");
    }
    const double q = inverse_cdf(cdf, alpha);
    CompensatedSum acc;
    for (const auto& p : cdf.point_masses()) {
        acc.add(p.mass * std::max(0.0, q - p.value));
    }
    return q - acc.value() / alpha;
}

// Discrete Shannon entropy (natural log) of the estimated point masses.
inline double plugin_entropy(const StepCdf& cdf) {
    CompensatedSum acc;
    for (const auto& p : cdf.point_masses()) {
        if (p.mass > 0.0) acc.add(-p.mass * std::log(p.mass));
    }
    return acc.value();
}

}  // namespace offdist
