#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "offdist/band.hpp"
#include "offdist/envs.hpp"
#include "offdist/numerics.hpp"
#include "offdist/parameters.hpp"
#include "offdist/rng.hpp"
#include "offdist/step_cdf.hpp"

namespace offdist {
namespace oracle {

// Ground-truth machinery: exhaustive trajectory enumeration for the exact
// return CDF of a finite POMDP, exact parameters of discrete
// distributions, and a dense in-band sampler that brackets the closed-form
// parameter bounds.

namespace detail {

struct EnumState {
    std::map<double, double> atom_mass;
    std::size_t leaves = 0;
    std::size_t leaf_guard = 0;
    std::vector<double> rewards;
};

inline void enumerate_rec(const PomdpSpec& spec, const TabularPolicy& policy, PolicySide side,
                          std::size_t s, int t, double prob, EnumState& st) {
    if (prob < 1e-300) return;  // underflow pruning on deep chains
    if (t == spec.horizon) {
        if (++st.leaves > st.leaf_guard) {
            throw std::runtime_error("enumerate_return_cdf: trajectory budget exceeded");
        }
        st.atom_mass[accumulate_return(st.rewards, spec.gamma)] += prob;
        return;
    }
    for (std::size_t o = 0; o < spec.num_obs; ++o) {
        const double po = spec.obs_behavior[s][o];
        if (po == 0.0) continue;
        for (std::size_t oe = 0; oe < spec.num_obs_eval; ++oe) {
            const double poe = spec.obs_eval[s][o][oe];
            if (poe == 0.0) continue;
            for (std::size_t a = 0; a < spec.num_actions; ++a) {
                const double pa = (side == PolicySide::behavior) ? policy[o][a] : policy[oe][a];
                if (pa == 0.0) continue;
                st.rewards.push_back(spec.reward[s][a]);
                for (std::size_t s2 = 0; s2 < spec.num_states; ++s2) {
                    const double ps2 = spec.transition[s][a][s2];
                    if (ps2 == 0.0) continue;
                    enumerate_rec(spec, policy, side, s2, t + 1, prob * po * poe * pa * ps2, st);
                }
                st.rewards.pop_back();
            }
        }
    }
}

inline StepCdf cdf_from_atoms(const std::map<double, double>& atom_mass) {
    std::vector<double> xs;
    std::vector<double> masses;
    CompensatedSum total;
    for (const auto& [g, m] : atom_mass) {
        xs.push_back(g);
        masses.push_back(m);
        total.add(m);
    }
    const double z = total.value();
    if (!(z > 0.0)) throw std::runtime_error("cdf_from_atoms: zero total mass");
    std::vector<double> vs(xs.size());
    CompensatedSum cum;
    double prev = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        cum.add(masses[i]);
        masses[i] /= z;
        double v = cum.value() / z;
        v = std::clamp(v, prev, 1.0);
        vs[i] = v;
        prev = v;
    }
    vs.back() = 1.0;
    StepCdf cdf(std::move(xs), std::move(vs), 0.0);
    cdf.set_masses(std::move(masses));
    return cdf;
}

}  // namespace detail

// Exact F_pi (or F_beta) by summing trajectory probabilities grouped by
// return. Returns are accumulated with the same arithmetic as the rollout
// path, so atoms align bitwise with sampled returns.
inline StepCdf enumerate_return_cdf(const PomdpSpec& spec, const TabularPolicy& policy,
                                    PolicySide side = PolicySide::evaluation,
                                    std::size_t max_trajectories = 10'000'000) {
    detail::EnumState st;
    st.leaf_guard = max_trajectories;
    std::vector<std::pair<std::size_t, double>> starts;
    for (std::size_t s = 0; s < spec.num_states; ++s) {
        if (spec.start[s] > 0.0) {
            detail::enumerate_rec(spec, policy, side, s, 0, spec.start[s], st);
        }
    }
    return detail::cdf_from_atoms(st.atom_mass);
}

// Exact single-episode return CDF of the recommender under the given item
// probabilities.
inline StepCdf enumerate_recommender_cdf(const RecommenderEnv& env,
                                         const std::vector<double>& policy_probs,
                                         std::int64_t episode) {
    std::map<double, double> atom_mass;
    for (int a = 0; a < env.num_items; ++a) {
        const auto p = env.level_probs(a, episode);
        for (int l = 0; l < RecommenderEnv::kLevels; ++l) {
            atom_mass[env.level_values[static_cast<std::size_t>(l)]] +=
                policy_probs[static_cast<std::size_t>(a)] * p[static_cast<std::size_t>(l)];
        }
    }
    return detail::cdf_from_atoms(atom_mass);
}

// Monte Carlo on-policy return CDF; cross-checks the enumeration.
inline StepCdf mc_return_cdf(const PomdpSpec& spec, const TabularPolicy& policy, PolicySide side,
                             std::size_t rollouts, std::uint64_t seed) {
    std::map<double, double> atom_mass;
    Rng root(seed, /*stream=*/0x3c);
    const double w = 1.0 / static_cast<double>(rollouts);
    for (std::size_t i = 1; i <= rollouts; ++i) {
        Rng sub = root.substream(i);
        const Trajectory traj = rollout_pomdp(spec, policy, side, sub);
        atom_mass[accumulate_return(traj.rewards, spec.gamma)] += w;
    }
    return detail::cdf_from_atoms(atom_mass);
}

// Exact parameter of a normalized discrete distribution. Same definitions
// as the plug-ins, written against the raw atoms.
inline double true_parameter(const StepCdf& cdf, const ParameterSpec& p) {
    const auto pmf = cdf.point_masses();
    auto mean = [&]() {
        CompensatedSum acc;
        for (const auto& a : pmf) acc.add(a.mass * a.value);
        return acc.value();
    };
    auto quantile = [&](double alpha) {
        double cum = 0.0;
        for (const auto& a : pmf) {
            cum += a.mass;
            if (cum >= alpha - 1e-15) return a.value;
        }
        return pmf.back().value;
    };
    switch (p.kind) {
        case ParameterSpec::Kind::mean:
            return mean();
        case ParameterSpec::Kind::variance: {
            const double mu = mean();
            CompensatedSum acc;
            for (const auto& a : pmf) acc.add(a.mass * (a.value - mu) * (a.value - mu));
            return acc.value();
        }
        case ParameterSpec::Kind::quantile:
            return quantile(p.alpha);
        case ParameterSpec::Kind::cvar: {
            const double q = quantile(p.alpha);
            CompensatedSum acc;
            for (const auto& a : pmf) acc.add(a.mass * std::max(0.0, q - a.value));
            return q - acc.value() / p.alpha;
        }
        case ParameterSpec::Kind::interquantile:
            return quantile(p.alpha2) - quantile(p.alpha);
        case ParameterSpec::Kind::entropy: {
            CompensatedSum acc;
            for (const auto& a : pmf) {
                if (a.mass > 0.0) acc.add(-a.mass * std::log(a.mass));
            }
            return acc.value();
        }
    }
    throw std::logic_error("true_parameter: unhandled kind");
}

// Extreme parameter values over randomly sampled monotone step CDFs
// clamped inside the band. Validates the closed forms: the sampled extremes
// can never escape the closed-form interval.
inline std::pair<double, double> bruteforce_bound(
    const ConfidenceBand& band, const std::function<double(const StepCdf&)>& functional,
    std::size_t num_samples, std::size_t grid_size, std::uint64_t seed) {
    std::vector<double> grid = band.merged_grid();
    for (std::size_t i = 0; i < grid_size; ++i) {
        grid.push_back(band.g_min() + (band.g_max() - band.g_min()) * static_cast<double>(i) /
                                          static_cast<double>(std::max<std::size_t>(grid_size - 1, 1)));
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
    lo[m - 1] = hi[m - 1] = 1.0;

    Rng root(seed, /*stream=*/0xb7);
    double best_min = std::numeric_limits<double>::infinity();
    double best_max = -std::numeric_limits<double>::infinity();
    std::vector<double> vs(m);
    // Paths cycle through families that reach the extremal shapes: the two
    // envelope huggers, vertical-jump and flat-level splices, and random
    // monotone profiles threaded through the tube.
    auto clamp_path = [&](auto&& target) {
        double prev = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            vs[i] = std::clamp(target(i), std::max(lo[i], prev), hi[i]);
            prev = vs[i];
        }
        vs[m - 1] = 1.0;
    };
    for (std::size_t c = 1; c <= num_samples; ++c) {
        Rng sub = root.substream(c);
        switch (c % 5) {
            case 1:
                clamp_path([&](std::size_t i) { return hi[i]; });
                break;
            case 2:
                clamp_path([&](std::size_t i) { return lo[i]; });
                break;
            case 3: {
                const double p = sub.uniform(band.g_min(), band.g_max());
                clamp_path([&](std::size_t i) { return grid[i] < p ? 0.0 : 1.0; });
                break;
            }
            case 4: {
                const double level = sub.uniform01();
                clamp_path([&](std::size_t i) { (void)i; return level; });
                break;
            }
            default: {
                // random monotone profile from normalized cumulative draws
                std::vector<double> profile(m);
                double acc = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    acc += -std::log(std::max(sub.uniform01(), 1e-300));
                    profile[i] = acc;
                }
                for (double& v : profile) v /= acc;
                clamp_path([&](std::size_t i) { return lo[i] + profile[i] * (hi[i] - lo[i]); });
                break;
            }
        }
        const double v = functional(StepCdf(grid, vs, 0.0));
        best_min = std::min(best_min, v);
        best_max = std::max(best_max, v);
    }
    return {best_min, best_max};
}

}  // namespace oracle
}  // namespace offdist
