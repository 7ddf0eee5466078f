#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "offdist/band.hpp"
#include "offdist/envs.hpp"
#include "offdist/oracle.hpp"
#include "offdist/param_bounds.hpp"
#include "offdist/rng.hpp"

using namespace offdist;

namespace {

PomdpSpec two_outcome_spec() {
    // depth-1, two actions, returns {0, 1}
    PomdpSpec spec;
    spec.num_states = 1;
    spec.num_obs = 1;
    spec.num_obs_eval = 1;
    spec.num_actions = 2;
    spec.horizon = 1;
    spec.gamma = 1.0;
    spec.start = {1.0};
    spec.transition = {{{1.0}, {1.0}}};
    spec.obs_behavior = {{1.0}};
    spec.obs_eval = {{{1.0}}};
    spec.reward = {{0.0, 1.0}};
    spec.g_min = -0.5;
    spec.g_max = 1.5;
    return spec;
}

}  // namespace

TEST_CASE("deterministic everything enumerates to a point mass") {
    auto spec = two_outcome_spec();
    const TabularPolicy always_second{{0.0, 1.0}};
    const auto cdf = oracle::enumerate_return_cdf(spec, always_second);
    REQUIRE(cdf.breakpoints().size() == 1);
    CHECK(cdf.breakpoints()[0] == 1.0);
    CHECK(cdf.terminal_value() == 1.0);
}

TEST_CASE("uniform two-action depth-one enumeration") {
    const auto spec = two_outcome_spec();
    const TabularPolicy uniform{{0.5, 0.5}};
    const auto cdf = oracle::enumerate_return_cdf(spec, uniform);
    CHECK(cdf(0.0) == Catch::Approx(0.5));
    CHECK(cdf(1.0) == Catch::Approx(1.0));
}

TEST_CASE("enumeration guard rejects an impossible budget") {
    const auto spec = chain_pomdp(4, 0.2);
    CHECK_THROWS(oracle::enumerate_return_cdf(spec, chain_eval_policy(),
                                              PolicySide::evaluation, /*max_trajectories=*/2));
}

TEST_CASE("monte carlo stays within a DKW-style envelope of the enumeration") {
    const auto spec = chain_pomdp(3, 0.2);
    const auto pi = chain_eval_policy();
    const auto truth = oracle::enumerate_return_cdf(spec, pi);
    const std::size_t n = 50'000;
    const auto mc = oracle::mc_return_cdf(spec, pi, PolicySide::evaluation, n, 77);
    const double band = std::sqrt(std::log(2.0 / 1e-6) / (2.0 * static_cast<double>(n)));
    for (double x : truth.breakpoints()) {
        CHECK(std::abs(mc(x) - truth(x)) <= band);
    }
}

TEST_CASE("exact parameters of tiny distributions") {
    const StepCdf point({3.0}, {1.0});
    CHECK(oracle::true_parameter(point, ParameterSpec::mean()) == 3.0);
    CHECK(oracle::true_parameter(point, ParameterSpec::variance()) == 0.0);

    const StepCdf coin({0.0, 1.0}, {0.5, 1.0});
    CHECK(oracle::true_parameter(coin, ParameterSpec::variance()) == Catch::Approx(0.25));

    const StepCdf uniform4({1.0, 2.0, 3.0, 4.0}, {0.25, 0.5, 0.75, 1.0});
    CHECK(oracle::true_parameter(uniform4, ParameterSpec::cvar(0.5)) == Catch::Approx(1.5));
    CHECK(oracle::true_parameter(uniform4, ParameterSpec::quantile(0.5)) == 2.0);
    CHECK(oracle::true_parameter(uniform4, ParameterSpec::interquantile(0.25, 0.75)) ==
          Catch::Approx(2.0));
}

TEST_CASE("brute force on a degenerate band returns the plug-in value") {
    const StepCdf f({1.0, 2.0}, {0.5, 1.0});
    const auto band = ConfidenceBand::degenerate(f, 0.0, 3.0, 0.1);
    auto psi = [](const StepCdf& g) { return oracle::true_parameter(g, ParameterSpec::mean()); };
    const auto [mn, mx] = oracle::bruteforce_bound(band, psi, 200, 16, 5);
    const double truth = oracle::true_parameter(f, ParameterSpec::mean());
    CHECK(mn == Catch::Approx(truth).margin(1e-9));
    CHECK(mx == Catch::Approx(truth).margin(1e-9));
}

TEST_CASE("nested sampling only widens the sampled interval") {
    Rng rng(8);
    const auto band = assemble_band(0.0, 1.0, {0.3, 0.6}, {0.2, 0.4}, {0.5, 0.9}, 0.1);
    auto psi = [](const StepCdf& g) { return oracle::true_parameter(g, ParameterSpec::mean()); };
    const auto small = oracle::bruteforce_bound(band, psi, 50, 32, 11);
    const auto large = oracle::bruteforce_bound(band, psi, 500, 32, 11);
    // substream-indexed draws make the candidate sets nested
    CHECK(large.first <= small.first);
    CHECK(large.second >= small.second);
    const auto closed = mean_bounds(band);
    CHECK(closed.first <= large.first + 1e-12);
    CHECK(closed.second >= large.second - 1e-12);
}

TEST_CASE("grid refinement tightens the sampled gap in the median") {
    Rng rng(21);
    int tightened = 0;
    const int bands = 6;
    auto psi = [](const StepCdf& g) { return oracle::true_parameter(g, ParameterSpec::mean()); };
    for (int t = 0; t < bands; ++t) {
        std::vector<double> kappas{0.2 + 0.1 * rng.uniform01(), 0.5, 0.7 + 0.1 * rng.uniform01()};
        std::vector<double> lo{0.1, 0.3, 0.5};
        std::vector<double> hi{0.4, 0.7, 0.95};
        const auto band = assemble_band(0.0, 1.0, kappas, lo, hi, 0.1);
        const auto coarse = oracle::bruteforce_bound(band, psi, 3000, 9, 31);
        const auto fine = oracle::bruteforce_bound(band, psi, 3000, 129, 31);
        if (fine.second - fine.first >= coarse.second - coarse.first - 1e-9) ++tightened;
    }
    CHECK(2 * tightened >= bands);
}
