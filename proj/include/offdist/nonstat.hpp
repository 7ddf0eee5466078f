#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "offdist/band.hpp"
#include "offdist/numerics.hpp"
#include "offdist/return_data.hpp"
#include "offdist/rng.hpp"

namespace offdist {

// Smooth non-stationarity: each episode contributes the single-sample
// unbiased CDF estimate rho_i * 1{G_i <= kappa}; the per-episode sequence
// is regressed on a Fourier basis and extrapolated `lead` episodes ahead.
// Wild bootstrap (Rademacher multipliers on the residuals) gives
// approximate percentile intervals that tolerate the heteroskedastic,
// non-identically-distributed noise of importance-sampled estimates.

// The length-L sequence rho_i * 1{G_i <= kappa} ordered by episode.
// Episode indices must be exactly 1..L, each once.
inline std::vector<double> per_episode_cdf_points(const ReturnDataset& data, double kappa) {
    const std::size_t L = data.size();
    std::vector<double> points(L, 0.0);
    std::vector<char> seen(L, 0);
    for (const auto& s : data.samples) {
        if (s.episode < 1 || s.episode > L || seen[s.episode - 1]) {
            throw std::invalid_argument("duplicate or missing episode index");
        }
        seen[s.episode - 1] = 1;
        points[s.episode - 1] = (s.g <= kappa) ? s.rho : 0.0;
    }
    return points;
}

namespace detail {

// phi(i) = [1, sin(2*pi*1*i/P), cos(2*pi*1*i/P), sin(2*pi*2*i/P), ...],
// truncated to d terms, with period P = L + lead.
inline void fourier_features(double i, double period, std::size_t d, std::vector<double>& out) {
    out.resize(d);
    out[0] = 1.0;
    for (std::size_t j = 1; j < d; ++j) {
        const auto harmonic = static_cast<double>((j + 1) / 2);
        const double angle = 2.0 * M_PI * harmonic * i / period;
        out[j] = (j % 2 == 1) ? std::sin(angle) : std::cos(angle);
    }
}

struct FourierFit {
    std::size_t d = 0;
    double period = 0.0;
    std::vector<double> design;     // L x d, row-major
    std::vector<double> gram;       // d x d
    std::vector<double> weights;    // least-squares solution
    std::vector<double> fitted;     // design * weights
    std::vector<double> residuals;  // y - fitted
};

inline std::vector<double> solve_gram(const FourierFit& fit, const std::vector<double>& y) {
    const std::size_t L = y.size();
    std::vector<double> rhs(fit.d, 0.0);
    for (std::size_t i = 0; i < L; ++i) {
        for (std::size_t j = 0; j < fit.d; ++j) rhs[j] += fit.design[i * fit.d + j] * y[i];
    }
    std::vector<double> w;
    if (!solve_spd(fit.gram, rhs, fit.d, w)) throw std::runtime_error("degenerate basis");
    return w;
}

inline FourierFit fit_fourier(const std::vector<double>& points, std::size_t basis_order,
                              int lead) {
    const std::size_t L = points.size();
    if (basis_order < 1) throw std::invalid_argument("basis order must be positive");
    if (lead < 1) throw std::invalid_argument("lead must be positive");
    if (L < basis_order) throw std::runtime_error("degenerate basis");
    FourierFit fit;
    fit.d = basis_order;
    fit.period = static_cast<double>(L) + static_cast<double>(lead);
    fit.design.resize(L * fit.d);
    std::vector<double> row;
    for (std::size_t i = 0; i < L; ++i) {
        fourier_features(static_cast<double>(i + 1), fit.period, fit.d, row);
        std::copy(row.begin(), row.end(), fit.design.begin() + static_cast<std::ptrdiff_t>(i * fit.d));
    }
    fit.gram.assign(fit.d * fit.d, 0.0);
    for (std::size_t i = 0; i < L; ++i) {
        for (std::size_t a = 0; a < fit.d; ++a) {
            for (std::size_t b = 0; b < fit.d; ++b) {
                fit.gram[a * fit.d + b] += fit.design[i * fit.d + a] * fit.design[i * fit.d + b];
            }
        }
    }
    fit.weights = solve_gram(fit, points);
    fit.fitted.resize(L);
    fit.residuals.resize(L);
    for (std::size_t i = 0; i < L; ++i) {
        double yhat = 0.0;
        for (std::size_t j = 0; j < fit.d; ++j) yhat += fit.design[i * fit.d + j] * fit.weights[j];
        fit.fitted[i] = yhat;
        fit.residuals[i] = points[i] - yhat;
    }
    return fit;
}

inline double forecast_from_weights(const FourierFit& fit, const std::vector<double>& w) {
    std::vector<double> row;
    fourier_features(fit.period, fit.period, fit.d, row);  // i = L + lead
    double f = 0.0;
    for (std::size_t j = 0; j < fit.d; ++j) f += row[j] * w[j];
    return f;
}

}  // namespace detail

// Point forecast of F^(L+lead)(kappa): least-squares Fourier fit
// extrapolated to episode L + lead.
inline double forecast_cdf_point(const std::vector<double>& points, std::size_t basis_order,
                                 int lead) {
    const auto fit = detail::fit_fourier(points, basis_order, lead);
    return detail::forecast_from_weights(fit, fit.weights);
}

// Wild bootstrap interval for the forecast: B pseudo-series
// y* = yhat + sigma .* r with Rademacher signs, each refit and forecast;
// returns the delta/2 and 1 - delta/2 replicate quantiles clipped to [0,1].
inline std::pair<double, double> wild_bootstrap_ci(const std::vector<double>& points,
                                                   std::size_t basis_order, int lead,
                                                   double delta_i, int replicates,
                                                   std::uint64_t seed, std::uint64_t stream = 0) {
    if (replicates < 200) throw std::invalid_argument("insufficient replicates");
    if (!(delta_i > 0.0 && delta_i <= 1.0)) {
        throw std::invalid_argument("wild_bootstrap_ci: delta must be in (0,1]");
    }
    const auto fit = detail::fit_fourier(points, basis_order, lead);
    const std::size_t L = points.size();

    Rng root(seed, 0x3d1dull + stream);
    std::vector<double> forecasts(static_cast<std::size_t>(replicates));
    std::vector<double> pseudo(L);
    for (int b = 0; b < replicates; ++b) {
        Rng sub = root.substream(static_cast<std::uint64_t>(b) + 1);
        for (std::size_t i = 0; i < L; ++i) {
            pseudo[i] = fit.fitted[i] + sub.rademacher() * fit.residuals[i];
        }
        const auto w = detail::solve_gram(fit, pseudo);
        forecasts[static_cast<std::size_t>(b)] = detail::forecast_from_weights(fit, w);
    }
    std::sort(forecasts.begin(), forecasts.end());
    double lo = sorted_quantile(forecasts, delta_i / 2.0);
    double hi = sorted_quantile(forecasts, 1.0 - delta_i / 2.0);
    lo = std::clamp(lo, 0.0, 1.0);
    hi = std::clamp(hi, 0.0, 1.0);
    return {std::min(lo, hi), std::max(lo, hi)};
}

// Forecast confidence band for episode L + lead: wild-bootstrap intervals
// at the plan's key points, assembled through the same monotone envelope
// as the stationary band.
inline ConfidenceBand forecast_band(const ReturnDataset& data, const KeyPointPlan& plan,
                                    std::size_t basis_order, int lead, double delta,
                                    int replicates, std::uint64_t seed) {
    plan.validate(data.g_min, data.g_max, delta);
    std::vector<double> lo(plan.size());
    std::vector<double> hi(plan.size());
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const auto points = per_episode_cdf_points(data, plan.key_points[i]);
        const auto ci = wild_bootstrap_ci(points, basis_order, lead, plan.budgets[i], replicates,
                                          seed, /*stream=*/i + 1);
        lo[i] = ci.first;
        hi[i] = ci.second;
    }
    return assemble_band(data.g_min, data.g_max, plan.key_points, std::move(lo), std::move(hi),
                         delta);
}

}  // namespace offdist
