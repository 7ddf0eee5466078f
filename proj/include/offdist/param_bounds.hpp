#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "offdist/band.hpp"
#include "offdist/numerics.hpp"
#include "offdist/parameters.hpp"
#include "offdist/rng.hpp"
#include "offdist/step_cdf.hpp"

namespace offdist {

// Simultaneous high-confidence bounds psi-, psi+ for distributional
// parameters, derived from one confidence band. Each closed form evaluates
// the parameter at the extremal in-band CDF; extrema that are limits of
// the open band (mass moved just past a key point) are computed on the
// envelope closures, which is exactly the inf/sup.

// Mean of a distribution on [g_min, g_max] through the area identity
// mean(F) = g_max - integral of F. The upper envelope pushes mass low, so
// it attains the lower mean bound, and conversely.
inline std::pair<double, double> mean_bounds(const ConfidenceBand& band) {
    const double lo = band.g_max() - integrate_step(band.upper_closure(), band.g_min(), band.g_max());
    const double hi = band.g_max() - integrate_step(band.lower_closure(), band.g_min(), band.g_max());
    return {lo, hi};
}

inline std::pair<double, double> quantile_bounds(const ConfidenceBand& band, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("quantile_bounds: alpha must be in (0,1)");
    }
    const double lo = first_breakpoint_reaching(band.upper_closure(), alpha, band.g_max());
    const double hi = first_breakpoint_reaching(band.lower_closure(), alpha, band.g_max());
    return {lo, hi};
}

namespace detail {

// CVaR of a right-continuous step CDF in the distribution-generic area
// form: q - (1/alpha) * integral_{g_min}^{q} F.
inline double cvar_of_step(const StepCdf& f, double g_min, double g_max, double alpha) {
    const double q = first_breakpoint_reaching(f, alpha, g_max);
    return q - integrate_step(f, g_min, q) / alpha;
}

inline double variance_of_step(const StepCdf& f) {
    CompensatedSum mean_acc;
    CompensatedSum sq_acc;
    for (const auto& p : f.point_masses()) {
        mean_acc.add(p.mass * p.value);
        sq_acc.add(p.mass * p.value * p.value);
    }
    const double mean = mean_acc.value();
    return std::max(0.0, sq_acc.value() - mean * mean);
}

inline std::pair<double, double> first_two_moments(const StepCdf& f) {
    CompensatedSum m1;
    CompensatedSum m2;
    for (const auto& p : f.point_masses()) {
        m1.add(p.mass * p.value);
        m2.add(p.mass * p.value * p.value);
    }
    return {m1.value(), m2.value()};
}

// CDF that follows the upper closure while below `level`, runs flat at
// `level`, then follows the lower closure: the horizontal-splice family
// whose members maximize spread for some level.
inline StepCdf level_splice(const std::vector<double>& grid, const StepCdf& lower_closure,
                            const StepCdf& upper_closure, double level) {
    std::vector<double> vs(grid.size());
    double prev = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double v = std::max(lower_closure(grid[i]), std::min(level, upper_closure(grid[i])));
        v = std::clamp(v, prev, 1.0);
        vs[i] = v;
        prev = v;
    }
    vs.back() = 1.0;
    return StepCdf(grid, std::move(vs), 0.0);
}

// CDF that follows the lower envelope, jumps vertically at abscissa p to
// the upper envelope, then follows its closure: concentrates mass near p.
inline StepCdf vertical_splice(const ConfidenceBand& band, std::vector<double> grid, double p) {
    grid.push_back(p);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    const StepCdf uc = band.upper_closure();
    std::vector<double> vs(grid.size());
    double prev = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid[i];
        double v;
        if (x < p) {
            v = band.lower_at(x);
        } else if (x == p) {
            v = band.upper_at(p);
        } else {
            v = uc(x);
        }
        v = std::clamp(v, prev, 1.0);
        vs[i] = v;
        prev = v;
    }
    vs.back() = 1.0;
    return StepCdf(std::move(grid), std::move(vs), 0.0);
}

}  // namespace detail

inline std::pair<double, double> cvar_bounds(const ConfidenceBand& band, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("cvar_bounds: alpha must be in (0,1)");
    }
    const double lo =
        detail::cvar_of_step(band.upper_closure(), band.g_min(), band.g_max(), alpha);
    const double hi =
        detail::cvar_of_step(band.lower_closure(), band.g_min(), band.g_max(), alpha);
    return {lo, hi};
}

// Variance extremes over the band. The maximizing CDF follows the upper
// envelope, crosses horizontally at some level, and finishes on the lower
// envelope; variance is quadratic in the level between envelope values, so
// the candidate levels are those values plus each segment's interior
// vertex. The minimizing CDF makes one vertical jump, optimal when the
// jump abscissa sits at the resulting mean; candidates are the band grid
// plus each segment's fixed point.
inline std::pair<double, double> variance_bounds(const ConfidenceBand& band) {
    const auto grid = band.merged_grid();
    const StepCdf lc = band.lower_closure();
    const StepCdf uc = band.upper_closure();

    std::vector<double> levels{0.0, 1.0};
    for (double x : grid) {
        levels.push_back(lc(x));
        levels.push_back(uc(x));
    }
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

    double best_upper = 0.0;
    auto consider_level = [&](double j) {
        const double v = detail::variance_of_step(detail::level_splice(grid, lc, uc, j));
        best_upper = std::max(best_upper, v);
        return v;
    };
    std::vector<std::pair<double, double>> moments(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) {
        moments[i] = detail::first_two_moments(detail::level_splice(grid, lc, uc, levels[i]));
        best_upper = std::max(
            best_upper, std::max(0.0, moments[i].second - moments[i].first * moments[i].first));
    }
    for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
        const double ja = levels[i];
        const double jb = levels[i + 1];
        if (!(jb > ja)) continue;
        const double b = (moments[i + 1].first - moments[i].first) / (jb - ja);
        const double d = (moments[i + 1].second - moments[i].second) / (jb - ja);
        if (b == 0.0) continue;
        // stationary point of Var(j) = E2(j) - E(j)^2 with linear E, E2
        const double jstar = ja + (d / (2.0 * b) - moments[i].first) / b;
        if (jstar > ja && jstar < jb) consider_level(jstar);
    }

    double best_lower = std::numeric_limits<double>::infinity();
    auto consider_abscissa = [&](double p) {
        const double v = detail::variance_of_step(detail::vertical_splice(band, grid, p));
        best_lower = std::min(best_lower, v);
    };
    for (double p : grid) consider_abscissa(p);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double pa = grid[i];
        const double pb = grid[i + 1];
        // atom mass on the open segment and the mean as a function of p
        const double mass = band.upper_at(pb) - band.lower_at(pa);
        if (!(mass > 0.0) || !(mass < 1.0)) continue;
        const auto ma = detail::first_two_moments(detail::vertical_splice(band, grid, pa));
        const double c1 = ma.first - mass * pa;
        const double pstar = c1 / (1.0 - mass);  // solves p = E(p): atom at the mean
        if (pstar > pa && pstar < pb) consider_abscissa(pstar);
    }
    if (!std::isfinite(best_lower)) best_lower = 0.0;
    return {best_lower, best_upper};
}

inline std::pair<double, double> interquantile_bounds(const ConfidenceBand& band, double alpha1,
                                                      double alpha2) {
    if (!(alpha1 > 0.0 && alpha1 < alpha2 && alpha2 < 1.0)) {
        throw std::invalid_argument("interquantile_bounds: need 0 < alpha1 < alpha2 < 1");
    }
    const auto q1 = quantile_bounds(band, alpha1);
    const auto q2 = quantile_bounds(band, alpha2);
    const double hi = q2.second - q1.first;
    const double lo = std::max(0.0, q2.first - q1.second);
    return {lo, hi};
}

// Maximum differential entropy over the band: the taut string from
// (g_min, 0) to (g_max, 1) through the band tube is the CDF of the
// max-entropy member; its density is piecewise uniform. A pinch that
// forces the string to rise over a zero-width gap means every in-band
// distribution carries a point mass, where differential entropy is
// unbounded below and the upper-bound path does not exist.
inline double entropy_upper_bound(const ConfidenceBand& band) {
    const auto grid = band.merged_grid();
    const std::size_t m = grid.size() - 1;  // last node index
    auto lo_at = [&](std::size_t i) { return i == 0 ? 0.0 : (i == m ? 1.0 : band.lower_at(grid[i])); };
    auto hi_at = [&](std::size_t i) { return i == 0 ? 0.0 : (i == m ? 1.0 : band.upper_at(grid[i])); };

    std::vector<std::pair<double, double>> knots;  // (x, y) of the string
    knots.emplace_back(grid[0], 0.0);
    std::size_t anchor = 0;
    double ax = grid[0];
    double ay = 0.0;
    const double inf = std::numeric_limits<double>::infinity();
    double max_slope = inf;
    double min_slope = -inf;
    std::size_t max_idx = anchor;  // node where max_slope binds (upper touch)
    std::size_t min_idx = anchor;  // node where min_slope binds (lower touch)

    std::size_t i = anchor + 1;
    while (i <= m) {
        const double dx = grid[i] - ax;
        if (!(dx > 0.0)) throw std::logic_error("entropy_upper_bound: degenerate grid");
        const double up = (hi_at(i) - ay) / dx;
        const double dn = (lo_at(i) - ay) / dx;
        if (dn > max_slope) {
            // must bend upward at the recorded upper touch
            ax = grid[max_idx];
            ay = hi_at(max_idx);
            knots.emplace_back(ax, ay);
            anchor = max_idx;
            max_slope = inf;
            min_slope = -inf;
            i = anchor + 1;
            continue;
        }
        if (up < min_slope) {
            ax = grid[min_idx];
            ay = lo_at(min_idx);
            knots.emplace_back(ax, ay);
            anchor = min_idx;
            max_slope = inf;
            min_slope = -inf;
            i = anchor + 1;
            continue;
        }
        if (up < max_slope) {
            max_slope = up;
            max_idx = i;
        }
        if (dn > min_slope) {
            min_slope = dn;
            min_idx = i;
        }
        ++i;
    }
    knots.emplace_back(grid[m], 1.0);

    CompensatedSum entropy;
    for (std::size_t kn = 0; kn + 1 < knots.size(); ++kn) {
        const double rise = knots[kn + 1].second - knots[kn].second;
        const double len = knots[kn + 1].first - knots[kn].first;
        if (rise <= 0.0) continue;
        const double scale = std::max({1.0, std::abs(knots[kn].first), std::abs(knots[kn + 1].first)});
        if (len <= 8.0 * std::numeric_limits<double>::epsilon() * scale) {
            throw std::runtime_error("band forces point mass");
        }
        entropy.add(-rise * std::log(rise / len));
    }
    return entropy.value();
}

// Differential entropy has no finite lower bound whenever the band admits
// a point mass, which every nondegenerate band does.
inline double entropy_lower_bound(const ConfidenceBand&) {
    return -std::numeric_limits<double>::infinity();
}

struct GenericBounds {
    double lower = 0.0;
    double upper = 0.0;
    bool guaranteed = false;  // search result, not a closed form
};

// Black-box bounds for an arbitrary functional: candidate CDFs are
// monotone step functions on a grid (band breakpoints plus uniform fill)
// clamped into the band, explored by seeded random search around the two
// envelope closures, then local perturbation of the incumbents.
inline GenericBounds generic_bounds(const ConfidenceBand& band,
                                    const std::function<double(const StepCdf&)>& functional,
                                    std::size_t grid_size, int search_budget,
                                    std::uint64_t seed) {
    if (grid_size < 2) throw std::invalid_argument("generic_bounds: grid too small");
    std::vector<double> grid = band.merged_grid();
    for (std::size_t i = 0; i < grid_size; ++i) {
        grid.push_back(band.g_min() + (band.g_max() - band.g_min()) * static_cast<double>(i) /
                                          static_cast<double>(grid_size - 1));
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    const std::size_t m = grid.size();

    std::vector<double> lo(m);
    std::vector<double> hi(m);
    for (std::size_t i = 0; i < m; ++i) {
        lo[i] = band.lower_at(grid[i]);
        hi[i] = band.upper_at(grid[i]);
    }
    lo[m - 1] = hi[m - 1] = 1.0;  // any in-band CDF reaches one at g_max

    const StepCdf lc = band.lower_closure();
    const StepCdf uc = band.upper_closure();
    auto sample_closure = [&](const StepCdf& f) {
        std::vector<double> vs(m);
        double prev = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            vs[i] = std::clamp(f(grid[i]), prev, 1.0);
            prev = vs[i];
        }
        vs[m - 1] = 1.0;
        return vs;
    };

    auto evaluate = [&](const std::vector<double>& vs) {
        return functional(StepCdf(grid, vs, 0.0));
    };

    std::vector<double> best_min_vs = sample_closure(uc);
    std::vector<double> best_max_vs = best_min_vs;
    double best_min = evaluate(best_min_vs);
    double best_max = best_min;
    auto consider = [&](const std::vector<double>& vs) {
        const double v = evaluate(vs);
        if (v < best_min) {
            best_min = v;
            best_min_vs = vs;
        }
        if (v > best_max) {
            best_max = v;
            best_max_vs = vs;
        }
    };
    consider(sample_closure(lc));

    Rng root(seed, /*stream=*/0x9e6b);
    const int random_phase = std::max(1, search_budget / 2);
    for (int c = 0; c < random_phase; ++c) {
        Rng sub = root.substream(static_cast<std::uint64_t>(c));
        std::vector<double> vs(m);
        double prev = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double a = std::max(lo[i], prev);
            vs[i] = (hi[i] > a) ? sub.uniform(a, hi[i]) : a;
            prev = vs[i];
        }
        vs[m - 1] = 1.0;
        consider(vs);
    }
    for (int c = random_phase; c < search_budget; ++c) {
        Rng sub = root.substream(static_cast<std::uint64_t>(c));
        const bool refine_min = (c % 2) == 0;
        std::vector<double> vs = refine_min ? best_min_vs : best_max_vs;
        double prev = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double width = hi[i] - lo[i];
            double v = vs[i] + 0.15 * width * sub.normal();
            v = std::clamp(v, std::max(lo[i], prev), hi[i]);
            vs[i] = v;
            prev = v;
        }
        vs[m - 1] = 1.0;
        consider(vs);
    }
    return {best_min, best_max, false};
}

// Closed-form dispatcher. Entropy pairs the taut-string upper bound with
// the -infinity sentinel.
inline std::pair<double, double> parameter_bounds(const ConfidenceBand& band,
                                                  const ParameterSpec& p) {
    switch (p.kind) {
        case ParameterSpec::Kind::mean: return mean_bounds(band);
        case ParameterSpec::Kind::variance: return variance_bounds(band);
        case ParameterSpec::Kind::quantile: return quantile_bounds(band, p.alpha);
        case ParameterSpec::Kind::cvar: return cvar_bounds(band, p.alpha);
        case ParameterSpec::Kind::interquantile:
            return interquantile_bounds(band, p.alpha, p.alpha2);
        case ParameterSpec::Kind::entropy:
            return {entropy_lower_bound(band), entropy_upper_bound(band)};
    }
    throw std::logic_error("parameter_bounds: unhandled kind");
}

enum class BoundSide { lower, upper };

// Plan-search objective that targets one parameter bound instead of the
// band area: maximize psi- or minimize psi+.
inline PlanObjective specialize_objective(const ParameterSpec& p, BoundSide side) {
    return PlanObjective::specialize_score([p, side](const ConfidenceBand& band) {
        const auto b = parameter_bounds(band, p);
        return side == BoundSide::lower ? -b.first : b.second;
    });
}

}  // namespace offdist
