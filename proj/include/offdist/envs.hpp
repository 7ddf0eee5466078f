#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "offdist/numerics.hpp"
#include "offdist/return_data.hpp"
#include "offdist/rng.hpp"

namespace offdist {

// Finite partially observable decision process with separate observation
// channels for the behavior side (O, via obs_behavior) and the evaluation
// side (O~, via obs_eval, which may condition on both state and O).
struct PomdpSpec {
    std::size_t num_states = 0;
    std::size_t num_obs = 0;       // behavior-side observations O
    std::size_t num_obs_eval = 0;  // evaluation-side observations O~
    std::size_t num_actions = 0;
    int horizon = 1;
    double gamma = 1.0;
    std::vector<double> start;                                 // [s]
    std::vector<std::vector<std::vector<double>>> transition;  // [s][a][s']
    std::vector<std::vector<double>> obs_behavior;             // [s][o]
    std::vector<std::vector<std::vector<double>>> obs_eval;    // [s][o][o~]
    std::vector<std::vector<double>> reward;                   // [s][a]
    double g_min = 0.0;
    double g_max = 1.0;

    void validate() const {
        auto check_dist = [](const std::vector<double>& p) {
            double total = 0.0;
            for (double v : p) {
                if (v < 0.0) throw std::invalid_argument("PomdpSpec: negative probability");
                total += v;
            }
            if (std::abs(total - 1.0) > 1e-12) {
                throw std::invalid_argument("PomdpSpec: distribution does not sum to 1");
            }
        };
        check_dist(start);
        for (std::size_t s = 0; s < num_states; ++s) {
            check_dist(obs_behavior[s]);
            for (std::size_t o = 0; o < num_obs; ++o) check_dist(obs_eval[s][o]);
            for (std::size_t a = 0; a < num_actions; ++a) check_dist(transition[s][a]);
        }
    }
};

// Row-stochastic policy table: probabilities over actions per observation.
using TabularPolicy = std::vector<std::vector<double>>;

enum class PolicySide { behavior, evaluation };

// What one logged episode records: evaluation-side observations, actions,
// the scalar behavior probability of each logged action, and rewards.
struct Trajectory {
    std::vector<int> obs;            // o~_t
    std::vector<int> actions;        // a_t
    std::vector<double> beta_probs;  // beta(a_t | o_t)
    std::vector<double> rewards;     // r_t
};

inline double accumulate_return(const std::vector<double>& rewards, double gamma) {
    CompensatedSum g;
    double discount = 1.0;
    for (double r : rewards) {
        g.add(discount * r);
        discount *= gamma;
    }
    return g.value();
}

// Reduces a logged trajectory to (G, rho): rho multiplies the per-step
// ratios pi(a_t | o~_t) / beta(a_t | o_t). A logged behavior probability of
// zero with positive evaluation probability violates the support
// assumption and is rejected.
inline ReturnSample make_return_sample(const Trajectory& traj, const TabularPolicy& eval_policy,
                                       double gamma, std::uint64_t episode) {
    double rho = 1.0;
    for (std::size_t t = 0; t < traj.actions.size(); ++t) {
        const double pi_prob =
            eval_policy[static_cast<std::size_t>(traj.obs[t])][static_cast<std::size_t>(
                traj.actions[t])];
        const double beta_prob = traj.beta_probs[t];
        if (!(beta_prob > 0.0)) {
            if (pi_prob > 0.0) throw std::runtime_error("support violation");
            rho = 0.0;
            continue;
        }
        rho *= pi_prob / beta_prob;
    }
    return ReturnSample{accumulate_return(traj.rewards, gamma), rho, episode};
}

// Convex mixture with the uniform-random policy:
// beta(a|o) = alpha * pi(a|o) + (1 - alpha) / num_actions.
inline TabularPolicy mixture_policy(const TabularPolicy& pi, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("mixture_policy: alpha must be in [0,1]");
    }
    TabularPolicy beta = pi;
    for (auto& row : beta) {
        const double uniform = 1.0 / static_cast<double>(row.size());
        for (double& p : row) p = alpha * p + (1.0 - alpha) * uniform;
    }
    return beta;
}

// Small enumerable chain: five positions, two actions (a cautious step and
// a longer leap), saturating at the end. The behavior channel merges
// positions 1 and 2; the evaluation channel is a different, coarser
// grouping, so O~ != O.
inline PomdpSpec chain_pomdp(int depth, double noise) {
    if (depth < 2 || depth > 4) throw std::invalid_argument("chain_pomdp: depth must be 2..4");
    if (!(noise >= 0.0 && noise < 1.0)) {
        throw std::invalid_argument("chain_pomdp: noise must be in [0,1)");
    }
    PomdpSpec spec;
    spec.num_states = 5;
    spec.num_obs = 4;
    spec.num_obs_eval = 3;
    spec.num_actions = 2;
    spec.horizon = depth;
    spec.gamma = 0.9;
    spec.start = {1.0, 0.0, 0.0, 0.0, 0.0};

    const int obs_of_state[5] = {0, 1, 1, 2, 3};       // O merges states 1,2
    const int eval_obs_of_state[5] = {0, 0, 1, 1, 2};  // O~ merges {0,1} and {2,3}

    spec.transition.assign(5, std::vector<std::vector<double>>(2, std::vector<double>(5, 0.0)));
    spec.obs_behavior.assign(5, std::vector<double>(4, 0.0));
    spec.obs_eval.assign(5, std::vector<std::vector<double>>(4, std::vector<double>(3, 0.0)));
    spec.reward.assign(5, std::vector<double>(2, 0.0));
    for (std::size_t s = 0; s < 5; ++s) {
        const auto step_to = std::min<std::size_t>(s + 1, 4);
        const auto leap_to = std::min<std::size_t>(s + 2, 4);
        spec.transition[s][0][step_to] += 1.0 - noise;
        spec.transition[s][0][s] += noise;
        spec.transition[s][1][leap_to] += 1.0 - noise;
        spec.transition[s][1][s] += noise;
        spec.obs_behavior[s][static_cast<std::size_t>(obs_of_state[s])] = 1.0;
        for (std::size_t o = 0; o < 4; ++o) {
            spec.obs_eval[s][o][static_cast<std::size_t>(eval_obs_of_state[s])] = 1.0;
        }
        spec.reward[s][0] = 0.10 + 0.15 * static_cast<double>(s);
        spec.reward[s][1] = 0.05 + 0.20 * static_cast<double>(s);
    }
    double horizon_weight = 0.0;
    double discount = 1.0;
    for (int t = 0; t < depth; ++t) {
        horizon_weight += discount;
        discount *= spec.gamma;
    }
    spec.g_min = 0.05 * horizon_weight;
    spec.g_max = 0.85 * horizon_weight;
    spec.validate();
    return spec;
}

// Stochastic evaluation policy over the chain's O~ channel and a behavior
// policy over its O channel; both fixed tables so experiments reproduce.
inline TabularPolicy chain_eval_policy() {
    return {{0.75, 0.25}, {0.40, 0.60}, {0.70, 0.30}};
}

inline TabularPolicy chain_behavior_policy() {
    return {{0.55, 0.45}, {0.60, 0.40}, {0.45, 0.55}, {0.50, 0.50}};
}

// One episode of a finite POMDP. The acting policy reads the O channel
// when side == behavior and the O~ channel when side == evaluation; the
// logged probability is the acting policy's probability of the taken
// action, and the logged observations are always the evaluation-side ones.
inline Trajectory rollout_pomdp(const PomdpSpec& spec, const TabularPolicy& policy,
                                PolicySide side, Rng& rng) {
    Trajectory traj;
    traj.obs.reserve(static_cast<std::size_t>(spec.horizon));
    std::size_t s = rng.categorical(spec.start);
    for (int t = 0; t < spec.horizon; ++t) {
        const std::size_t o = rng.categorical(spec.obs_behavior[s]);
        const std::size_t oe = rng.categorical(spec.obs_eval[s][o]);
        const auto& row = (side == PolicySide::behavior) ? policy[o] : policy[oe];
        const std::size_t a = rng.categorical(row);
        traj.obs.push_back(static_cast<int>(oe));
        traj.actions.push_back(static_cast<int>(a));
        traj.beta_probs.push_back(row[a]);
        traj.rewards.push_back(spec.reward[s][a]);
        s = rng.categorical(spec.transition[s][a]);
    }
    return traj;
}

// Off-policy logged data: episode e (1-based) rolls out with the behavior
// policy behaviors[(e-1) % count] on its own RNG substream, so generation
// is bit-reproducible regardless of evaluation order or thread count.
inline ReturnDataset generate_dataset(const PomdpSpec& spec,
                                      const std::vector<TabularPolicy>& behaviors,
                                      std::size_t episodes, const TabularPolicy& eval_policy,
                                      std::uint64_t seed) {
    if (behaviors.empty()) throw std::invalid_argument("generate_dataset: no behavior policies");
    ReturnDataset data{{}, spec.g_min, spec.g_max};
    data.samples.reserve(episodes);
    Rng root(seed, /*stream=*/0xe9);
    for (std::size_t e = 1; e <= episodes; ++e) {
        Rng sub = root.substream(e);
        const auto& beta = behaviors[(e - 1) % behaviors.size()];
        const Trajectory traj = rollout_pomdp(spec, beta, PolicySide::behavior, sub);
        data.samples.push_back(make_return_sample(traj, eval_policy, spec.gamma, e));
    }
    return data;
}

// Continuous-state gridworld on [0,1]^2 with stochastic moves, eight
// discrete actions (cardinals and diagonals), and grid-cell observations:
// a 4x4 discretization for the behavior side and a coarser 2x2 one for the
// evaluation side. Rewards grow toward the goal corner and are bounded.
struct GridworldEnv {
    int horizon = 6;
    double gamma = 0.95;
    double step_size = 0.18;
    double noise_sigma = 0.05;
    int behavior_grid = 4;
    int eval_grid = 2;
    double goal_x = 1.0;
    double goal_y = 1.0;
    double g_min = 0.0;
    double g_max = 0.0;

    static constexpr int kActions = 8;

    std::size_t behavior_cells() const {
        return static_cast<std::size_t>(behavior_grid * behavior_grid);
    }
    std::size_t eval_cells() const { return static_cast<std::size_t>(eval_grid * eval_grid); }

    int cell_index(double x, double y, int grid) const {
        const int cx = std::min(grid - 1, static_cast<int>(x * grid));
        const int cy = std::min(grid - 1, static_cast<int>(y * grid));
        return cy * grid + cx;
    }

    Trajectory rollout(const TabularPolicy& policy, PolicySide side, Rng& rng) const {
        static const double dir_x[kActions] = {1, -1, 0, 0, M_SQRT1_2, M_SQRT1_2, -M_SQRT1_2,
                                               -M_SQRT1_2};
        static const double dir_y[kActions] = {0, 0, 1, -1, M_SQRT1_2, -M_SQRT1_2, M_SQRT1_2,
                                               -M_SQRT1_2};
        Trajectory traj;
        double x = 0.1 + 0.05 * rng.uniform01();
        double y = 0.1 + 0.05 * rng.uniform01();
        for (int t = 0; t < horizon; ++t) {
            const int o = cell_index(x, y, behavior_grid);
            const int oe = cell_index(x, y, eval_grid);
            const auto& row =
                (side == PolicySide::behavior) ? policy[static_cast<std::size_t>(o)]
                                               : policy[static_cast<std::size_t>(oe)];
            const std::size_t a = rng.categorical(row);
            const double dist = std::hypot(x - goal_x, y - goal_y);
            const double r = 1.0 - dist / M_SQRT2;
            traj.obs.push_back(oe);
            traj.actions.push_back(static_cast<int>(a));
            traj.beta_probs.push_back(row[a]);
            traj.rewards.push_back(r);
            x = std::clamp(x + step_size * dir_x[a] + noise_sigma * rng.normal(), 0.0, 1.0);
            y = std::clamp(y + step_size * dir_y[a] + noise_sigma * rng.normal(), 0.0, 1.0);
        }
        return traj;
    }
};

inline GridworldEnv gridworld() {
    GridworldEnv env;
    double w = 0.0;
    double discount = 1.0;
    for (int t = 0; t < env.horizon; ++t) {
        w += discount;
        discount *= env.gamma;
    }
    env.g_min = 0.0;
    env.g_max = w;
    return env;
}

namespace detail {

// Goal-seeking softmax table: action weights follow the alignment of each
// move direction with the direction from the cell center to the goal.
inline TabularPolicy goal_softmax_policy(int grid, double goal_x, double goal_y,
                                         double sharpness) {
    static const double dir_x[GridworldEnv::kActions] = {1,          -1,         0, 0,
                                                         M_SQRT1_2,  M_SQRT1_2,  -M_SQRT1_2,
                                                         -M_SQRT1_2};
    static const double dir_y[GridworldEnv::kActions] = {0,          0,          1, -1,
                                                         M_SQRT1_2,  -M_SQRT1_2, M_SQRT1_2,
                                                         -M_SQRT1_2};
    TabularPolicy policy;
    for (int cy = 0; cy < grid; ++cy) {
        for (int cx = 0; cx < grid; ++cx) {
            const double px = (cx + 0.5) / grid;
            const double py = (cy + 0.5) / grid;
            double tx = goal_x - px;
            double ty = goal_y - py;
            const double norm = std::hypot(tx, ty);
            if (norm > 0.0) {
                tx /= norm;
                ty /= norm;
            }
            std::vector<double> row(GridworldEnv::kActions);
            double total = 0.0;
            for (int a = 0; a < GridworldEnv::kActions; ++a) {
                row[static_cast<std::size_t>(a)] =
                    std::exp(sharpness * (dir_x[a] * tx + dir_y[a] * ty));
                total += row[static_cast<std::size_t>(a)];
            }
            for (double& p : row) p /= total;
            policy.push_back(std::move(row));
        }
    }
    return policy;
}

}  // namespace detail

inline TabularPolicy gridworld_eval_policy() { return detail::goal_softmax_policy(2, 1.0, 1.0, 2.0); }

inline TabularPolicy gridworld_behavior_base() {
    return detail::goal_softmax_policy(4, 1.0, 1.0, 1.5);
}

inline ReturnDataset generate_dataset(const GridworldEnv& env,
                                      const std::vector<TabularPolicy>& behaviors,
                                      std::size_t episodes, const TabularPolicy& eval_policy,
                                      std::uint64_t seed) {
    if (behaviors.empty()) throw std::invalid_argument("generate_dataset: no behavior policies");
    ReturnDataset data{{}, env.g_min, env.g_max};
    data.samples.reserve(episodes);
    Rng root(seed, /*stream=*/0x6d);
    for (std::size_t e = 1; e <= episodes; ++e) {
        Rng sub = root.substream(e);
        const auto& beta = behaviors[(e - 1) % behaviors.size()];
        const Trajectory traj = env.rollout(beta, PolicySide::behavior, sub);
        data.samples.push_back(make_return_sample(traj, eval_policy, env.gamma, e));
    }
    return data;
}

// Single-step recommender: the user's interest in each item is the item's
// reward, drawn from five discrete levels whose probabilities drift
// sinusoidally with the episode index. `speed` is the integer harmonic
// count over `period` episodes; speed 0 is the stationary setting.
struct RecommenderEnv {
    static constexpr int kLevels = 5;

    int num_items = 5;
    int speed = 0;
    std::int64_t period = 2000;
    std::array<double, kLevels> level_values{0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<std::array<double, kLevels>> base;  // per item, sums to 1
    std::vector<double> amp_scale;                  // per item
    std::vector<double> phase;                      // per item
    double g_min = 0.0;
    double g_max = 1.0;
    double gamma = 1.0;

    std::array<double, kLevels> level_probs(int item, std::int64_t episode) const {
        static constexpr std::array<double, kLevels> pattern{-0.10, -0.05, 0.0, 0.05, 0.10};
        const double s =
            std::sin(2.0 * M_PI * static_cast<double>(speed) * static_cast<double>(episode) /
                         static_cast<double>(period) +
                     phase[static_cast<std::size_t>(item)]);
        std::array<double, kLevels> p{};
        for (int l = 0; l < kLevels; ++l) {
            p[static_cast<std::size_t>(l)] =
                base[static_cast<std::size_t>(item)][static_cast<std::size_t>(l)] +
                amp_scale[static_cast<std::size_t>(item)] * pattern[static_cast<std::size_t>(l)] *
                    s;
        }
        return p;
    }

    double mean_reward(int item, std::int64_t episode) const {
        const auto p = level_probs(item, episode);
        double m = 0.0;
        for (int l = 0; l < kLevels; ++l) {
            m += p[static_cast<std::size_t>(l)] * level_values[static_cast<std::size_t>(l)];
        }
        return m;
    }

    std::vector<double> uniform_policy() const {
        return std::vector<double>(static_cast<std::size_t>(num_items),
                                   1.0 / static_cast<double>(num_items));
    }

    // Softmax over the items' mean rewards at the target episode; the
    // near-optimal stochastic evaluation policy for that episode.
    std::vector<double> optimal_softmax_policy(std::int64_t episode, double temperature) const {
        std::vector<double> logits(static_cast<std::size_t>(num_items));
        double zmax = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < num_items; ++a) {
            logits[static_cast<std::size_t>(a)] = mean_reward(a, episode) / temperature;
            zmax = std::max(zmax, logits[static_cast<std::size_t>(a)]);
        }
        double total = 0.0;
        for (double& z : logits) {
            z = std::exp(z - zmax);
            total += z;
        }
        for (double& z : logits) z /= total;
        return logits;
    }

    Trajectory rollout(const std::vector<double>& policy_probs, std::int64_t episode,
                       Rng& rng) const {
        const std::size_t a = rng.categorical(policy_probs);
        const auto p = level_probs(static_cast<int>(a), episode);
        const std::size_t level = rng.categorical(std::vector<double>(p.begin(), p.end()));
        Trajectory traj;
        traj.obs = {0};
        traj.actions = {static_cast<int>(a)};
        traj.beta_probs = {policy_probs[a]};
        traj.rewards = {level_values[level]};
        return traj;
    }
};

inline RecommenderEnv recommender(int num_items, int speed, std::int64_t period = 2000) {
    if (num_items != 5) throw std::invalid_argument("recommender: five items supported");
    if (speed < 0) throw std::invalid_argument("recommender: speed must be nonnegative");
    RecommenderEnv env;
    env.num_items = num_items;
    env.speed = speed;
    env.period = period;
    env.base = {std::array<double, 5>{0.30, 0.25, 0.20, 0.15, 0.10},
                std::array<double, 5>{0.10, 0.15, 0.20, 0.25, 0.30},
                std::array<double, 5>{0.20, 0.20, 0.20, 0.20, 0.20},
                std::array<double, 5>{0.35, 0.15, 0.10, 0.15, 0.25},
                std::array<double, 5>{0.15, 0.25, 0.30, 0.20, 0.10}};
    env.amp_scale = {0.8, -0.8, 1.6, -0.7, 0.6};
    env.phase.resize(5);
    for (int i = 0; i < 5; ++i) {
        env.phase[static_cast<std::size_t>(i)] = 2.0 * M_PI * static_cast<double>(i) / 5.0;
    }
    return env;
}

// Episodes first_episode .. first_episode + episodes - 1, one sample per
// episode index (the layout the non-stationary fits expect).
inline ReturnDataset generate_dataset(const RecommenderEnv& env,
                                      const std::vector<double>& behavior_probs,
                                      std::size_t episodes, const std::vector<double>& eval_probs,
                                      std::uint64_t seed, std::int64_t first_episode = 1) {
    ReturnDataset data{{}, env.g_min, env.g_max};
    data.samples.reserve(episodes);
    Rng root(seed, /*stream=*/0x7ec);
    TabularPolicy eval_table{eval_probs};
    for (std::size_t e = 0; e < episodes; ++e) {
        const std::int64_t episode = first_episode + static_cast<std::int64_t>(e);
        Rng sub = root.substream(static_cast<std::uint64_t>(e) + 1);
        const Trajectory traj = env.rollout(behavior_probs, episode, sub);
        data.samples.push_back(
            make_return_sample(traj, eval_table, env.gamma, static_cast<std::uint64_t>(e) + 1));
    }
    return data;
}

}  // namespace offdist
