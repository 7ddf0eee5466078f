#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <limits>

#include "offdist/band.hpp"
#include "offdist/oracle.hpp"
#include "offdist/param_bounds.hpp"
#include "offdist/rng.hpp"

using namespace offdist;

namespace {

ConfidenceBand random_band(Rng& rng, double g_min = 0.0, double g_max = 1.0) {
    const std::size_t k = 1 + rng.uniform_index(6);
    std::vector<double> kappas;
    for (std::size_t i = 0; i < k; ++i) {
        kappas.push_back(g_min + (g_max - g_min) * (static_cast<double>(i) + rng.uniform01()) /
                                     static_cast<double>(k));
    }
    std::sort(kappas.begin(), kappas.end());
    kappas.erase(std::unique(kappas.begin(), kappas.end()), kappas.end());
    std::vector<double> lo;
    std::vector<double> hi;
    for (std::size_t i = 0; i < kappas.size(); ++i) {
        double a = rng.uniform01();
        double b = rng.uniform01();
        if (a > b) std::swap(a, b);
        lo.push_back(std::max(0.0, a - 0.05));
        hi.push_back(std::min(1.0, b + 0.05));
    }
    return assemble_band(g_min, g_max, kappas, lo, hi, 0.1);
}

// Test-side extreme: the in-band CDF pushed fully against one envelope,
// built only through the band accessors (jumps placed just after the
// points where the envelope moves).
StepCdf clamped_extreme(const ConfidenceBand& band, bool against_upper) {
    std::vector<double> xs;
    for (double x : band.merged_grid()) {
        xs.push_back(x);
        const double after = std::nextafter(x, std::numeric_limits<double>::infinity());
        if (after < band.g_max()) xs.push_back(after);
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::vector<double> vs;
    double prev = 0.0;
    for (double x : xs) {
        double v = against_upper ? band.upper_at(x) : band.lower_at(x);
        v = std::clamp(v, prev, 1.0);
        vs.push_back(v);
        prev = v;
    }
    vs.back() = 1.0;
    if (xs.back() != band.g_max()) {
        xs.push_back(band.g_max());
        vs.push_back(1.0);
    }
    return StepCdf(xs, vs, 0.0);
}

const ConfidenceBand kVacuous01 = ConfidenceBand::vacuous(0.0, 1.0, 0.1);

}  // namespace

TEST_CASE("mean bounds on extreme bands") {
    const auto v = mean_bounds(kVacuous01);
    CHECK(v.first == Catch::Approx(0.0).margin(1e-15));
    CHECK(v.second == Catch::Approx(1.0).margin(1e-15));

    const auto point = ConfidenceBand::degenerate(StepCdf({3.0}, {1.0}), 0.0, 10.0, 0.1);
    const auto b = mean_bounds(point);
    CHECK(b.first == Catch::Approx(3.0).margin(1e-9));
    CHECK(b.second == Catch::Approx(3.0).margin(1e-9));
}

TEST_CASE("quantile bounds on extreme bands") {
    const auto v = quantile_bounds(kVacuous01, 0.5);
    CHECK(v.first == 0.0);
    CHECK(v.second == 1.0);

    const auto emp = ConfidenceBand::degenerate(
        StepCdf({1.0, 2.0, 3.0, 4.0}, {0.25, 0.5, 0.75, 1.0}), 0.0, 5.0, 0.1);
    const auto q = quantile_bounds(emp, 0.5);
    // the unattained infimum sits one ulp before the atom
    CHECK(q.first == Catch::Approx(2.0).margin(1e-12));
    CHECK(q.second == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("cvar bounds on extreme bands") {
    const auto emp = ConfidenceBand::degenerate(
        StepCdf({1.0, 2.0, 3.0, 4.0}, {0.25, 0.5, 0.75, 1.0}), 0.0, 5.0, 0.1);
    const auto c = cvar_bounds(emp, 0.5);
    CHECK(c.first == Catch::Approx(1.5).margin(1e-9));
    CHECK(c.second == Catch::Approx(1.5).margin(1e-9));

    const auto v = cvar_bounds(kVacuous01, 0.1);
    CHECK(v.first == Catch::Approx(0.0).margin(1e-12));
    CHECK(v.second == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("variance bounds on extreme bands") {
    const auto point = ConfidenceBand::degenerate(StepCdf({3.0}, {1.0}), 0.0, 10.0, 0.1);
    const auto pb = variance_bounds(point);
    CHECK(pb.first == Catch::Approx(0.0).margin(1e-12));
    CHECK(pb.second == Catch::Approx(0.0).margin(1e-9));

    const auto vb = variance_bounds(kVacuous01);
    CHECK(vb.first == Catch::Approx(0.0).margin(1e-12));
    CHECK(vb.second == Catch::Approx(0.25).margin(1e-12));
}

TEST_CASE("interquantile bounds on extreme bands") {
    const auto emp = ConfidenceBand::degenerate(
        StepCdf({1.0, 2.0, 3.0, 4.0}, {0.25, 0.5, 0.75, 1.0}), 0.0, 5.0, 0.1);
    const auto r = interquantile_bounds(emp, 0.25, 0.75);
    CHECK(r.first == Catch::Approx(2.0).margin(1e-12));
    CHECK(r.second == Catch::Approx(2.0).margin(1e-12));

    const auto v = interquantile_bounds(kVacuous01, 0.25, 0.75);
    CHECK(v.first == 0.0);
    CHECK(v.second == 1.0);
}

TEST_CASE("entropy of the vacuous band is the uniform entropy") {
    CHECK(entropy_upper_bound(kVacuous01) == Catch::Approx(0.0).margin(1e-9));
    CHECK(entropy_upper_bound(ConfidenceBand::vacuous(0.0, 2.0, 0.1)) ==
          Catch::Approx(std::log(2.0)).margin(1e-9));
    CHECK(entropy_lower_bound(kVacuous01) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("a band pinched to a point mass has no entropy path") {
    const auto point = ConfidenceBand::degenerate(StepCdf({3.0}, {1.0}), 0.0, 10.0, 0.1);
    CHECK_THROWS_WITH(entropy_upper_bound(point), "band forces point mass");
}

TEST_CASE("taut string dominates random smooth in-band CDFs") {
    Rng rng(2718);
    for (int trial = 0; trial < 8; ++trial) {
        const auto band = random_band(rng);
        const double best = entropy_upper_bound(band);

        // piecewise-linear continuous CDFs threaded through the tube
        std::vector<double> grid = band.merged_grid();
        for (int i = 0; i < 24; ++i) grid.push_back(rng.uniform01());
        std::sort(grid.begin(), grid.end());
        grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
        for (int s = 0; s < 400; ++s) {
            std::vector<double> y(grid.size());
            y[0] = 0.0;
            for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
                const double lo = std::max(band.lower_at(grid[i]), y[i - 1]);
                const double hi = std::max(lo, band.upper_at(grid[i]));
                y[i] = lo + (hi - lo) * rng.uniform01();
            }
            y.back() = 1.0;
            CompensatedSum h;
            bool valid = true;
            for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
                const double rise = y[i + 1] - y[i];
                const double len = grid[i + 1] - grid[i];
                if (rise < 0.0) valid = false;
                if (rise > 0.0) h.add(-rise * std::log(rise / len));
            }
            if (valid) CHECK(h.value() <= best + 1e-9);
        }
    }
}

TEST_CASE("closed forms match and dominate the in-band brute force") {
    Rng rng(31415);
    for (int trial = 0; trial < 10; ++trial) {
        const auto band = random_band(rng);
        const StepCdf hug_upper = clamped_extreme(band, true);
        const StepCdf hug_lower = clamped_extreme(band, false);

        struct Case {
            ParameterSpec spec;
            std::pair<double, double> closed;
            bool attained;  // extremes attained at the envelope closures
        };
        std::vector<Case> cases{
            {ParameterSpec::mean(), mean_bounds(band), true},
            {ParameterSpec::quantile(0.3), quantile_bounds(band, 0.3), true},
            {ParameterSpec::cvar(0.25), cvar_bounds(band, 0.25), true},
            {ParameterSpec::interquantile(0.25, 0.75), interquantile_bounds(band, 0.25, 0.75),
             false},
            {ParameterSpec::variance(), variance_bounds(band), false},
        };
        for (const auto& c : cases) {
            auto psi = [&](const StepCdf& f) { return oracle::true_parameter(f, c.spec); };
            auto [mn, mx] =
                oracle::bruteforce_bound(band, psi, 1500, 48, 1000 + static_cast<std::uint64_t>(trial));
            mn = std::min({mn, psi(hug_upper), psi(hug_lower)});
            mx = std::max({mx, psi(hug_upper), psi(hug_lower)});
            CHECK(c.closed.first <= c.closed.second);
            CHECK(c.closed.first <= mn + 1e-9);
            CHECK(c.closed.second >= mx - 1e-9);
            if (c.attained) {
                // envelope-hugging CDFs attain the closed forms for the
                // mass-monotone parameters
                CHECK(mn <= c.closed.first + 1e-9);
                CHECK(mx >= c.closed.second - 1e-9);
            }
        }
    }
}

TEST_CASE("location bounds stay inside the return range") {
    Rng rng(999);
    for (int trial = 0; trial < 20; ++trial) {
        const auto band = random_band(rng, -2.0, 3.0);
        for (const auto& p : {ParameterSpec::mean(), ParameterSpec::quantile(0.4),
                              ParameterSpec::cvar(0.2)}) {
            const auto b = parameter_bounds(band, p);
            CHECK(b.first >= band.g_min() - 1e-12);
            CHECK(b.second <= band.g_max() + 1e-12);
            CHECK(b.first <= b.second);
        }
        const auto vb = variance_bounds(band);
        const double half_range = (band.g_max() - band.g_min()) / 2.0;
        CHECK(vb.first >= 0.0);
        CHECK(vb.second <= half_range * half_range + 1e-12);
    }
}

TEST_CASE("shrinking the band never widens any bound") {
    Rng rng(424242);
    for (int trial = 0; trial < 12; ++trial) {
        const auto wide = random_band(rng);
        // shrink the (already monotone) envelopes toward each other; the
        // result is pointwise contained in the wide band
        const auto& kappas = wide.lower().breakpoints();
        std::vector<double> lo2;
        std::vector<double> hi2;
        for (double x : kappas) {
            const double lo = wide.lower_at(x);
            const double hi = wide.upper_at(x);
            lo2.push_back(lo + 0.25 * (hi - lo));
            hi2.push_back(hi - 0.25 * (hi - lo));
        }
        const auto narrow = assemble_band(0.0, 1.0, kappas, lo2, hi2, 0.1);
        for (const auto& p :
             {ParameterSpec::mean(), ParameterSpec::variance(), ParameterSpec::quantile(0.5),
              ParameterSpec::cvar(0.25), ParameterSpec::interquantile(0.25, 0.75)}) {
            const auto bw = parameter_bounds(wide, p);
            const auto bn = parameter_bounds(narrow, p);
            CHECK(bn.first >= bw.first - 1e-9);
            CHECK(bn.second <= bw.second + 1e-9);
        }
    }
}

TEST_CASE("generic search agrees with the closed forms") {
    Rng rng(17);
    const auto band = random_band(rng);

    const auto mean_closed = mean_bounds(band);
    const auto mean_generic = generic_bounds(
        band, [](const StepCdf& f) { return oracle::true_parameter(f, ParameterSpec::mean()); },
        512, 200, 7);
    CHECK(!mean_generic.guaranteed);
    CHECK(mean_generic.lower == Catch::Approx(mean_closed.first).margin(1e-3));
    CHECK(mean_generic.upper == Catch::Approx(mean_closed.second).margin(1e-3));

    const auto cvar_closed = cvar_bounds(band, 0.25);
    const auto cvar_generic = generic_bounds(
        band,
        [](const StepCdf& f) { return oracle::true_parameter(f, ParameterSpec::cvar(0.25)); },
        512, 200, 7);
    CHECK(cvar_generic.lower == Catch::Approx(cvar_closed.first).margin(1e-3));
    CHECK(cvar_generic.upper == Catch::Approx(cvar_closed.second).margin(1e-3));

    const auto point = ConfidenceBand::degenerate(StepCdf({0.5}, {1.0}), 0.0, 1.0, 0.1);
    const auto deg = generic_bounds(
        point, [](const StepCdf& f) { return oracle::true_parameter(f, ParameterSpec::mean()); },
        64, 50, 3);
    CHECK(deg.lower == Catch::Approx(0.5).margin(1e-6));
    CHECK(deg.upper == Catch::Approx(0.5).margin(1e-6));
}
