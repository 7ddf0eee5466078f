#pragma once

#include <stdexcept>
#include <string>

#include "offdist/estimators.hpp"
#include "offdist/step_cdf.hpp"

namespace offdist {

// A distributional parameter psi(F) addressable by name. Quantile-family
// parameters carry their level(s).
struct ParameterSpec {
    enum class Kind { mean, variance, quantile, cvar, interquantile, entropy };

    Kind kind = Kind::mean;
    double alpha = 0.5;
    double alpha2 = 0.75;  // upper level for interquantile

    static ParameterSpec mean() { return {Kind::mean, 0, 0}; }
    static ParameterSpec variance() { return {Kind::variance, 0, 0}; }
    static ParameterSpec quantile(double a) { return {Kind::quantile, a, 0}; }
    static ParameterSpec median() { return quantile(0.5); }
    static ParameterSpec cvar(double a) { return {Kind::cvar, a, 0}; }
    static ParameterSpec interquantile(double a1, double a2) {
        return {Kind::interquantile, a1, a2};
    }
    static ParameterSpec entropy() { return {Kind::entropy, 0, 0}; }

    std::string name() const {
        switch (kind) {
            case Kind::mean: return "mean";
            case Kind::variance: return "variance";
            case Kind::quantile: return "quantile@" + std::to_string(alpha);
            case Kind::cvar: return "cvar@" + std::to_string(alpha);
            case Kind::interquantile:
                return "iqr@" + std::to_string(alpha) + "," + std::to_string(alpha2);
            case Kind::entropy: return "entropy";
        }
        return "unknown";
    }
};

inline double plugin_parameter(const StepCdf& cdf, const ParameterSpec& p) {
    switch (p.kind) {
        case ParameterSpec::Kind::mean: return plugin_mean(cdf);
        case ParameterSpec::Kind::variance: return plugin_variance(cdf);
        case ParameterSpec::Kind::quantile: return plugin_quantile(cdf, p.alpha);
        case ParameterSpec::Kind::cvar: return plugin_cvar(cdf, p.alpha);
        case ParameterSpec::Kind::interquantile:
            return plugin_quantile(cdf, p.alpha2) - plugin_quantile(cdf, p.alpha);
        case ParameterSpec::Kind::entropy: return plugin_entropy(cdf);
    }
    throw std::logic_error("plugin_parameter: unhandled kind");
}

}  // namespace offdist
