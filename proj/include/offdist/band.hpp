#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "offdist/concentration.hpp"
#include "offdist/estimators.hpp"
#include "offdist/return_data.hpp"
#include "offdist/rng.hpp"
#include "offdist/step_cdf.hpp"

namespace offdist {

// theta = (K, key points, per-point budgets) driving band construction.
struct KeyPointPlan {
    std::vector<double> key_points;  // strictly increasing, inside (g_min, g_max)
    std::vector<double> budgets;     // per-point failure budgets, sum <= delta
    CiMethod ci_method;

    std::size_t size() const { return key_points.size(); }

    void validate(double g_min, double g_max, double delta) const {
        if (key_points.size() != budgets.size()) {
            throw std::invalid_argument("KeyPointPlan: key point/budget size mismatch");
        }
        ci_method.validate();
        double prev = g_min;
        for (double k : key_points) {
            if (!(k > prev && k < g_max)) {
                throw std::invalid_argument(
                    "KeyPointPlan: key points must be strictly increasing inside (g_min, g_max)");
            }
            prev = k;
        }
        double total = 0.0;
        for (double b : budgets) {
            if (!(b > 0.0)) throw std::invalid_argument("KeyPointPlan: budgets must be positive");
            total += b;
        }
        if (total > delta) throw std::invalid_argument("budget exceeded");
    }
};

// Paired envelopes (F-, F+) with failure budget delta on the declared
// return range. `lower` is an ordinary right-continuous step function;
// `upper` stores the envelope values AT its breakpoints and changes value
// immediately after them (the min-over-later-key-points envelope is
// left-continuous), so it is read through upper_at / value_at_or_after.
class ConfidenceBand {
public:
    ConfidenceBand(StepCdf lower, StepCdf upper, double delta, double g_min, double g_max)
        : lower_(std::move(lower)),
          upper_(std::move(upper)),
          delta_(delta),
          g_min_(g_min),
          g_max_(g_max) {
        if (!(g_min_ < g_max_)) throw std::invalid_argument("ConfidenceBand: g_min >= g_max");
        for (double x : merged_grid()) {
            if (lower_at(x) > upper_at(x) + 1e-15) {
                throw std::invalid_argument("ConfidenceBand: lower exceeds upper");
            }
        }
    }

    double lower_at(double nu) const {
        if (nu > g_max_) return 1.0;
        return lower_(nu);
    }

    double upper_at(double nu) const {
        if (nu < g_min_) return 0.0;
        return upper_.value_at_or_after(nu, 1.0);
    }

    const StepCdf& lower() const { return lower_; }
    const StepCdf& upper() const { return upper_; }
    double delta() const { return delta_; }
    double g_min() const { return g_min_; }
    double g_max() const { return g_max_; }

    // All abscissas where either envelope changes, with the range endpoints.
    std::vector<double> merged_grid() const {
        std::vector<double> xs{g_min_, g_max_};
        for (double x : lower_.breakpoints()) {
            if (x >= g_min_ && x <= g_max_) xs.push_back(x);
        }
        for (double x : upper_.breakpoints()) {
            if (x >= g_min_ && x <= g_max_) xs.push_back(x);
        }
        std::sort(xs.begin(), xs.end());
        xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
        return xs;
    }

    // The lower envelope completed into a distribution: unit mass forced at
    // g_max. This is the CDF attaining sup_{F in band} for mass-to-the-right
    // functionals.
    StepCdf lower_closure() const {
        std::vector<double> xs = lower_.breakpoints();
        std::vector<double> vs = lower_.values();
        if (!xs.empty() && xs.back() == g_max_) {
            vs.back() = 1.0;
        } else {
            xs.push_back(g_max_);
            vs.push_back(1.0);
        }
        return StepCdf(std::move(xs), std::move(vs), 0.0);
    }

    // Right-continuous closure of the upper envelope (value just after each
    // breakpoint). Attains inf_{F in band} for mass-to-the-right
    // functionals; it touches the open band only as a limit.
    StepCdf upper_closure() const {
        std::vector<double> xs{g_min_};
        for (double x : upper_.breakpoints()) {
            if (x > g_min_ && x < g_max_) xs.push_back(x);
        }
        xs.push_back(g_max_);
        std::vector<double> vs;
        vs.reserve(xs.size());
        for (double x : xs) {
            vs.push_back(x >= g_max_
                             ? 1.0
                             : upper_.value_at_or_after(
                                   std::nextafter(x, std::numeric_limits<double>::infinity()),
                                   1.0));
        }
        double prev = 0.0;
        for (double& v : vs) {
            v = std::clamp(v, prev, 1.0);
            prev = v;
        }
        return StepCdf(std::move(xs), std::move(vs), 0.0);
    }

    // Whole-band containment of a normalized right-continuous CDF.
    bool covers(const StepCdf& truth, double tol = 1e-12) const {
        std::vector<double> xs = merged_grid();
        for (double x : truth.breakpoints()) {
            if (x >= g_min_ && x <= g_max_) xs.push_back(x);
        }
        std::sort(xs.begin(), xs.end());
        xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
        for (double x : xs) {
            const double f = truth(x);
            if (f < lower_at(x) - tol || f > upper_at(x) + tol) return false;
        }
        return true;
    }

    static ConfidenceBand vacuous(double g_min, double g_max, double delta) {
        return ConfidenceBand(StepCdf({}, {}, 0.0),
                              StepCdf({g_max}, {1.0}, 0.0), delta, g_min, g_max);
    }

    // Zero-width band pinned to a normalized CDF (terminal value one). The
    // upper storage re-encodes the right-continuous F for the left-
    // continuous reading: each value is keyed to the last double before the
    // next jump.
    static ConfidenceBand degenerate(const StepCdf& f, double g_min, double g_max, double delta) {
        if (f.empty() || f.terminal_value() != 1.0) {
            throw std::invalid_argument("degenerate band requires a normalized cdf");
        }
        const auto& xs = f.breakpoints();
        const auto& vs = f.values();
        std::vector<double> uxs;
        std::vector<double> uvs;
        double prev_v = f.value_before_first();
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double before = std::nextafter(xs[i], -std::numeric_limits<double>::infinity());
            if (before >= g_min && (uxs.empty() || before > uxs.back())) {
                uxs.push_back(before);
                uvs.push_back(prev_v);
            }
            prev_v = vs[i];
        }
        uxs.push_back(g_max);
        uvs.push_back(1.0);
        return ConfidenceBand(f, StepCdf(std::move(uxs), std::move(uvs), 0.0), delta, g_min,
                              g_max);
    }

private:
    StepCdf lower_;
    StepCdf upper_;
    double delta_;
    double g_min_;
    double g_max_;
};

// Monotone envelope over raw per-key-point confidence bounds: running max
// from the left for F-, running min from the right (seeded by
// CI+(g_max) = 1) for F+. Raw crossings across different key points are
// only possible when some interval already failed; the upper envelope is
// raised to the lower one there so the band stays well formed.
inline ConfidenceBand assemble_band(double g_min, double g_max, const std::vector<double>& kappas,
                                    std::vector<double> ci_lo, std::vector<double> ci_hi,
                                    double delta) {
    const std::size_t k = kappas.size();
    if (ci_lo.size() != k || ci_hi.size() != k) {
        throw std::invalid_argument("assemble_band: size mismatch");
    }
    for (std::size_t i = 0; i < k; ++i) {
        ci_lo[i] = std::clamp(ci_lo[i], 0.0, 1.0);
        ci_hi[i] = std::clamp(ci_hi[i], 0.0, 1.0);
    }
    for (std::size_t i = 1; i < k; ++i) ci_lo[i] = std::max(ci_lo[i], ci_lo[i - 1]);
    for (std::size_t i = k; i-- > 1;) ci_hi[i - 1] = std::min(ci_hi[i - 1], ci_hi[i]);
    for (std::size_t i = 0; i < k; ++i) ci_hi[i] = std::max(ci_hi[i], ci_lo[i]);

    StepCdf lower(kappas, ci_lo, 0.0);
    std::vector<double> uxs = kappas;
    uxs.push_back(g_max);
    ci_hi.push_back(1.0);
    StepCdf upper(std::move(uxs), std::move(ci_hi), 0.0);
    return ConfidenceBand(std::move(lower), std::move(upper), delta, g_min, g_max);
}

inline ConfidenceBand build_band(const ReturnDataset& data, const KeyPointPlan& plan,
                                 double delta) {
    plan.validate(data.g_min, data.g_max, delta);
    std::vector<double> lo(plan.size());
    std::vector<double> hi(plan.size());
    for (std::size_t i = 0; i < plan.size(); ++i) {
        lo[i] = ci_lower(data, plan.key_points[i], plan.budgets[i], plan.ci_method);
        hi[i] = ci_upper(data, plan.key_points[i], plan.budgets[i], plan.ci_method);
    }
    return assemble_band(data.g_min, data.g_max, plan.key_points, std::move(lo), std::move(hi),
                         delta);
}

// Seeded partition; train gets round(fraction * n) samples, clamped so both
// parts are nonempty. Sample order within each part follows the input.
inline std::pair<ReturnDataset, ReturnDataset> split_train_eval(const ReturnDataset& data,
                                                                double fraction,
                                                                std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw std::invalid_argument("split_train_eval: fraction must be in (0,1)");
    }
    const std::size_t n = data.size();
    if (n < 2) throw std::invalid_argument("split_train_eval: need at least 2 samples");
    auto m = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    m = std::clamp<std::size_t>(m, 1, n - 1);

    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed, /*stream=*/0x5017);
    for (std::size_t i = n; i-- > 1;) {
        std::swap(idx[i], idx[rng.uniform_index(i + 1)]);
    }
    std::vector<std::size_t> train_idx(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m));
    std::vector<std::size_t> eval_idx(idx.begin() + static_cast<std::ptrdiff_t>(m), idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(eval_idx.begin(), eval_idx.end());

    ReturnDataset train{{}, data.g_min, data.g_max};
    ReturnDataset eval{{}, data.g_min, data.g_max};
    train.samples.reserve(m);
    eval.samples.reserve(n - m);
    for (auto i : train_idx) train.samples.push_back(data.samples[i]);
    for (auto i : eval_idx) eval.samples.push_back(data.samples[i]);
    return {std::move(train), std::move(eval)};
}

// Objective for plan search. `area` minimizes the enclosed band area;
// `specialize` minimizes an arbitrary score of the predicted band (used to
// target one parameter bound; see param_bounds.hpp for the adapters).
struct PlanObjective {
    enum class Kind { area, specialize };

    Kind kind = Kind::area;
    std::function<double(const ConfidenceBand&)> band_score;

    static PlanObjective area() { return {Kind::area, {}}; }
    static PlanObjective specialize_score(std::function<double(const ConfidenceBand&)> score) {
        return {Kind::specialize, std::move(score)};
    }
};

namespace detail {

inline std::vector<double> budgets_from_logits(const std::vector<double>& logits, double delta) {
    const std::size_t k = logits.size();
    if (k == 1) return {delta};
    double zmax = logits[0];
    for (double z : logits) zmax = std::max(zmax, z);
    std::vector<double> p(k);
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        p[i] = std::exp(std::clamp(logits[i] - zmax, -30.0, 0.0));
        total += p[i];
    }
    double renorm = 0.0;
    for (double& w : p) {
        w = std::max(w / total, 1e-9);
        renorm += w;
    }
    std::vector<double> budgets(k);
    double partial = 0.0;
    for (std::size_t i = 0; i + 1 < k; ++i) {
        budgets[i] = delta * (p[i] / renorm);
        partial += budgets[i];
    }
    budgets[k - 1] = delta - partial;  // exact remainder keeps the sum at delta
    return budgets;
}

struct PlanCandidate {
    std::vector<double> kappas;
    std::vector<double> logits;
};

inline PlanCandidate uniform_candidate(double g_min, double g_max, std::size_t k) {
    PlanCandidate c;
    c.kappas.resize(k);
    c.logits.assign(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        c.kappas[i] =
            g_min + (g_max - g_min) * static_cast<double>(i + 1) / static_cast<double>(k + 1);
    }
    return c;
}

inline bool strictly_increasing_interior(const std::vector<double>& xs, double g_min,
                                         double g_max) {
    double prev = g_min;
    for (double x : xs) {
        if (!(x > prev && x < g_max)) return false;
        prev = x;
    }
    return true;
}

}  // namespace detail

inline KeyPointPlan uniform_plan(double g_min, double g_max, std::size_t k, double delta,
                                 const CiMethod& method) {
    auto cand = detail::uniform_candidate(g_min, g_max, k);
    return KeyPointPlan{std::move(cand.kappas), detail::budgets_from_logits(cand.logits, delta),
                        method};
}

// Searches key-point locations and budget allocation by seeded random
// candidates followed by Gaussian refinement of the best one; K is fixed
// to ceil(ln(eval_size)). Candidate 0 is always the uniform fallback, so a
// budget of one returns it exactly. Evaluations use bounds predicted from
// the train split priced at the eval size; any feasible plan is valid, so
// the search only ever tightens. Candidates draw from seed-indexed
// substreams and the reduction is by (score, candidate index), which keeps
// the result identical under any parallel schedule.
inline KeyPointPlan optimize_plan(const ReturnDataset& train, std::size_t eval_size, double delta,
                                  const PlanObjective& objective, int search_budget,
                                  std::uint64_t seed,
                                  CiMethod::Kind ci_kind = CiMethod::Kind::truncated_empirical_bernstein) {
    if (train.empty()) throw std::invalid_argument("optimize_plan: empty train split");
    if (search_budget < 1) throw std::invalid_argument("optimize_plan: budget must be positive");
    const double g_min = train.g_min;
    const double g_max = train.g_max;
    const auto k = static_cast<std::size_t>(
        std::max(1.0, std::ceil(std::log(static_cast<double>(std::max<std::size_t>(eval_size, 2))))));

    const auto uniform = detail::uniform_candidate(g_min, g_max, k);
    const CiMethod method{ci_kind, choose_cap(train, eval_size, delta, uniform.kappas, ci_kind)};

    auto score_candidate = [&](const detail::PlanCandidate& cand) {
        const auto budgets = detail::budgets_from_logits(cand.logits, delta);
        std::vector<double> lo(k);
        std::vector<double> hi(k);
        for (std::size_t i = 0; i < k; ++i) {
            lo[i] = ci_lower_predicted(train, cand.kappas[i], budgets[i], method, eval_size);
            hi[i] = ci_upper_predicted(train, cand.kappas[i], budgets[i], method, eval_size);
        }
        if (objective.kind == PlanObjective::Kind::area) {
            // A(theta) = sum_i (CI+(kappa_{i+1}) - CI-(kappa_i)) * delta_{i+1}
            // with the G_min / G_max sentinels.
            CompensatedSum area;
            for (std::size_t i = 0; i <= k; ++i) {
                const double x0 = (i == 0) ? g_min : cand.kappas[i - 1];
                const double x1 = (i == k) ? g_max : cand.kappas[i];
                const double lo_i = (i == 0) ? 0.0 : lo[i - 1];
                const double hi_i1 = (i == k) ? 1.0 : hi[i];
                area.add((hi_i1 - lo_i) * (x1 - x0));
            }
            return area.value();
        }
        const auto band = assemble_band(g_min, g_max, cand.kappas, lo, hi, delta);
        return objective.band_score(band);
    };

    Rng root(seed, /*stream=*/0xba2d);
    const int random_phase = std::max(1, (search_budget + 1) / 2);

    auto draw_random = [&](Rng& rng) {
        detail::PlanCandidate cand;
        cand.kappas.resize(k);
        cand.logits.resize(k);
        for (int tries = 0; tries < 64; ++tries) {
            for (std::size_t i = 0; i < k; ++i) cand.kappas[i] = rng.uniform(g_min, g_max);
            std::sort(cand.kappas.begin(), cand.kappas.end());
            if (detail::strictly_increasing_interior(cand.kappas, g_min, g_max)) break;
            if (tries == 63) cand.kappas = uniform.kappas;
        }
        for (std::size_t i = 0; i < k; ++i) cand.logits[i] = 0.7 * rng.normal();
        return cand;
    };

    detail::PlanCandidate best = uniform;
    double best_score = score_candidate(best);
    for (int c = 1; c < random_phase; ++c) {
        Rng sub = root.substream(static_cast<std::uint64_t>(c));
        auto cand = draw_random(sub);
        const double s = score_candidate(cand);
        if (s < best_score) {
            best_score = s;
            best = cand;
        }
    }
    const detail::PlanCandidate anchor = best;
    const double range = g_max - g_min;
    for (int c = random_phase; c < search_budget; ++c) {
        Rng sub = root.substream(static_cast<std::uint64_t>(c));
        detail::PlanCandidate cand = anchor;
        const double scale =
            1.0 - 0.75 * static_cast<double>(c - random_phase) /
                      std::max(1, search_budget - random_phase);
        for (std::size_t i = 0; i < k; ++i) {
            cand.kappas[i] += 0.08 * range * scale * sub.normal();
            cand.logits[i] += 0.5 * scale * sub.normal();
        }
        std::sort(cand.kappas.begin(), cand.kappas.end());
        const double margin = 1e-9 * range;
        for (std::size_t i = 0; i < k; ++i) {
            cand.kappas[i] = std::clamp(cand.kappas[i], g_min + margin, g_max - margin);
        }
        if (!detail::strictly_increasing_interior(cand.kappas, g_min, g_max)) continue;
        const double s = score_candidate(cand);
        if (s < best_score) {
            best_score = s;
            best = cand;
        }
    }

    return KeyPointPlan{best.kappas, detail::budgets_from_logits(best.logits, delta), method};
}

// Kolmogorov-Smirnov-bounded domain shift: widen both envelopes by epsilon
// and re-clip to [0, 1].
inline ConfidenceBand shift_band(const ConfidenceBand& band, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw std::invalid_argument("shift_band: epsilon must be in [0,1]");
    }
    std::vector<double> lo = band.lower().values();
    for (double& v : lo) v = std::max(0.0, v - epsilon);
    std::vector<double> hi = band.upper().values();
    for (double& v : hi) v = std::min(1.0, v + epsilon);
    return ConfidenceBand(StepCdf(band.lower().breakpoints(), std::move(lo), 0.0),
                          StepCdf(band.upper().breakpoints(), std::move(hi), 0.0), band.delta(),
                          band.g_min(), band.g_max());
}

}  // namespace offdist
