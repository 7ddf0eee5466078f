#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace offdist {

// One logged episode reduced to its discounted return G, its trajectory
// importance ratio rho = prod_t pi(a_t|o~_t) / beta(a_t|o_t), and the
// episode index (1-based; used by the non-stationary machinery).
struct ReturnSample {
    double g = 0.0;
    double rho = 1.0;
    std::uint64_t episode = 0;
};

struct ReturnDataset {
    std::vector<ReturnSample> samples;
    double g_min = 0.0;
    double g_max = 1.0;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }

    void validate() const {
        if (!(g_min <= g_max)) throw std::invalid_argument("ReturnDataset: g_min > g_max");
        for (const auto& s : samples) {
            if (!(s.rho >= 0.0) || !std::isfinite(s.rho)) {
                throw std::invalid_argument("ReturnDataset: rho must be finite and nonnegative");
            }
            if (!(s.g >= g_min && s.g <= g_max)) {
                throw std::invalid_argument("ReturnDataset: return outside declared [g_min, g_max]");
            }
        }
    }
};

}  // namespace offdist
