#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "offdist/numerics.hpp"

namespace offdist {

struct MassPoint {
    double value;
    double mass;
};

// Right-continuous piecewise-constant function on the real line: the value
// at nu is the value stored at the largest breakpoint <= nu, or
// value_before_first when nu is left of all breakpoints. Values are
// monotone non-decreasing; they may exceed one only for unnormalized
// importance-sampled estimates.
class StepCdf {
public:
    StepCdf() = default;

    StepCdf(std::vector<double> breakpoints, std::vector<double> values,
            double value_before_first = 0.0, bool unnormalized = false)
        : xs_(std::move(breakpoints)),
          vs_(std::move(values)),
          before_(value_before_first),
          unnormalized_(unnormalized) {
        validate();
    }

    // Attaches exact per-breakpoint point masses (sum of rho_i/n over the
    // samples mapped to each breakpoint). When absent, discrete_pmf falls
    // back to first differences of the values.
    void set_masses(std::vector<double> masses) {
        if (masses.size() != xs_.size()) {
            throw std::invalid_argument("StepCdf: one mass per breakpoint required");
        }
        masses_ = std::move(masses);
    }

    double operator()(double nu) const {
        const auto it = std::upper_bound(xs_.begin(), xs_.end(), nu);
        if (it == xs_.begin()) return before_;
        return vs_[static_cast<std::size_t>(it - xs_.begin()) - 1];
    }

    // Companion evaluation for left-continuous envelopes: the value stored
    // at the smallest breakpoint >= nu, or `fallback` past the last one.
    double value_at_or_after(double nu, double fallback) const {
        const auto it = std::lower_bound(xs_.begin(), xs_.end(), nu);
        if (it == xs_.end()) return fallback;
        return vs_[static_cast<std::size_t>(it - xs_.begin())];
    }

    const std::vector<double>& breakpoints() const { return xs_; }
    const std::vector<double>& values() const { return vs_; }
    double value_before_first() const { return before_; }
    bool unnormalized() const { return unnormalized_; }
    bool empty() const { return xs_.empty(); }
    std::size_t size() const { return xs_.size(); }

    double terminal_value() const { return vs_.empty() ? before_ : vs_.back(); }

    bool has_masses() const { return !masses_.empty(); }

    std::vector<MassPoint> point_masses() const {
        std::vector<MassPoint> out;
        out.reserve(xs_.size());
        if (!masses_.empty()) {
            for (std::size_t i = 0; i < xs_.size(); ++i) out.push_back({xs_[i], masses_[i]});
            return out;
        }
        double prev = before_;
        for (std::size_t i = 0; i < xs_.size(); ++i) {
            out.push_back({xs_[i], vs_[i] - prev});
            prev = vs_[i];
        }
        return out;
    }

private:
    void validate() const {
        if (xs_.size() != vs_.size()) {
            throw std::invalid_argument("StepCdf: breakpoint/value size mismatch");
        }
        for (std::size_t i = 1; i < xs_.size(); ++i) {
            if (!(xs_[i - 1] < xs_[i])) {
                throw std::invalid_argument("StepCdf: breakpoints must be strictly increasing");
            }
        }
        double prev = before_;
        for (double v : vs_) {
            if (v < prev) throw std::invalid_argument("StepCdf: values must be non-decreasing");
            prev = v;
        }
    }

    std::vector<double> xs_;
    std::vector<double> vs_;
    std::vector<double> masses_;  // optional, parallel to xs_
    double before_ = 0.0;
    bool unnormalized_ = false;
};

// Exact integral of a right-continuous step function over [a, b]:
// sum of value * interval length, split at the breakpoints inside (a, b).
inline double integrate_step(const StepCdf& f, double a, double b) {
    if (!(a <= b)) throw std::invalid_argument("integrate_step: need a <= b");
    const auto& xs = f.breakpoints();
    CompensatedSum acc;
    double x = a;
    double v = f(a);
    auto it = std::upper_bound(xs.begin(), xs.end(), a);
    for (; it != xs.end() && *it < b; ++it) {
        acc.add(v * (*it - x));
        x = *it;
        v = f.values()[static_cast<std::size_t>(it - xs.begin())];
    }
    acc.add(v * (b - x));
    return acc.value();
}

// Smallest breakpoint whose value reaches `level`; `fallback` when the
// function tops out below it.
inline double first_breakpoint_reaching(const StepCdf& f, double level, double fallback) {
    const auto& vs = f.values();
    const auto it = std::lower_bound(vs.begin(), vs.end(), level);
    if (it == vs.end()) return fallback;
    return f.breakpoints()[static_cast<std::size_t>(it - vs.begin())];
}

}  // namespace offdist
