#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "offdist/concentration.hpp"
#include "offdist/envs.hpp"
#include "offdist/numerics.hpp"
#include "offdist/oracle.hpp"
#include "offdist/rng.hpp"

using namespace offdist;

namespace {

ReturnDataset constant_data(std::size_t n, double g, double rho) {
    ReturnDataset d;
    d.g_min = g - 1.0;
    d.g_max = g + 1.0;
    for (std::size_t i = 0; i < n; ++i) d.samples.push_back({g, rho, i + 1});
    return d;
}

const CiMethod kEb{CiMethod::Kind::truncated_empirical_bernstein, 1.0};

}  // namespace

TEST_CASE("all-zero indicators clip the lower bound at zero") {
    const auto d = constant_data(50, 5.0, 1.0);
    CHECK(ci_lower(d, 0.0, 0.05, kEb) == 0.0);  // kappa below every return
}

TEST_CASE("zero-variance empirical Bernstein closed form") {
    const auto d = constant_data(100, 0.0, 0.5);
    const double lb = ci_lower(d, 1.0, 0.05, kEb);
    const double expected = 0.5 - 7.0 * std::log(2.0 / 0.05) / (3.0 * 99.0);
    CHECK(lb == Catch::Approx(expected).margin(1e-12));
    CHECK(lb == Catch::Approx(0.41305672).margin(1e-6));
}

TEST_CASE("hoeffding-with-cap closed form") {
    const auto d = constant_data(100, 0.0, 0.5);
    const CiMethod hoeffding{CiMethod::Kind::hoeffding_with_cap, 1.0};
    const double lb = ci_lower(d, 1.0, 0.05, hoeffding);
    CHECK(lb == Catch::Approx(0.5 - std::sqrt(std::log(1.0 / 0.05) / 200.0)).margin(1e-12));
}

TEST_CASE("upper bound saturates when all complements vanish") {
    const auto d = constant_data(30, 0.0, 0.8);
    CHECK(ci_upper(d, 1.0, 0.05, kEb) == 1.0);
}

TEST_CASE("upper bound is one minus the lower bound on the swapped indicator") {
    ReturnDataset d;
    d.g_min = -1.0;
    d.g_max = 2.0;
    Rng rng(17);
    for (std::size_t i = 0; i < 60; ++i) {
        d.samples.push_back({rng.uniform01() > 0.4 ? 1.0 : 0.0, rng.uniform01() * 2.0, i + 1});
    }
    ReturnDataset swapped = d;
    for (auto& s : swapped.samples) s.g = 1.0 - s.g;  // 1{G<=0.5} and 1{G>0.5} trade places
    const double up = ci_upper(d, 0.5, 0.1, kEb);
    const double lo_swapped = ci_lower(swapped, 0.5, 0.1, kEb);
    CHECK(up == Catch::Approx(1.0 - lo_swapped).margin(1e-12));
}

TEST_CASE("bounds live in the unit interval and widen with tighter budgets") {
    Rng rng(23);
    ReturnDataset d;
    d.g_min = -2.0;
    d.g_max = 2.0;
    for (std::size_t i = 0; i < 80; ++i) {
        d.samples.push_back({rng.uniform(-2.0, 2.0), rng.uniform01() * 4.0, i + 1});
    }
    double prev_lo = 0.0;
    for (double delta : {0.01, 0.02, 0.05, 0.1, 0.2}) {
        const double lo = ci_lower(d, 0.0, delta, kEb);
        const double hi = ci_upper(d, 0.0, delta, kEb);
        CHECK(lo >= 0.0);
        CHECK(lo <= 1.0);
        CHECK(hi >= 0.0);
        CHECK(hi <= 1.0);
        CHECK(lo >= prev_lo - 1e-12);  // larger delta never shrinks the lower bound
        prev_lo = lo;
    }
}

TEST_CASE("tighter truncation never exceeds the untruncated mean plus slack") {
    Rng rng(29);
    ReturnDataset d;
    d.g_min = -2.0;
    d.g_max = 2.0;
    for (std::size_t i = 0; i < 120; ++i) {
        d.samples.push_back({rng.uniform(-2.0, 2.0), rng.uniform01() * 5.0, i + 1});
    }
    double rho_max = 0.0;
    CompensatedSum untrunc;
    for (const auto& s : d.samples) {
        rho_max = std::max(rho_max, s.rho);
        untrunc.add(s.g <= 0.0 ? s.rho : 0.0);
    }
    const double mean_untrunc = untrunc.value() / static_cast<double>(d.size());
    // truncation only lowers the variable, so the bound cannot beat the
    // untruncated mean (let alone the mean plus its own slack)
    for (double cap : {0.2, 0.5, 1.0, 2.0}) {
        const CiMethod m{CiMethod::Kind::truncated_empirical_bernstein, cap * rho_max};
        CHECK(ci_lower(d, 0.0, 0.1, m) <= mean_untrunc + 1e-12);
    }
}

TEST_CASE("requires at least two samples") {
    const auto d = constant_data(1, 0.0, 1.0);
    CHECK_THROWS(ci_lower(d, 1.0, 0.1, kEb));
}

TEST_CASE("per-point coverage on the chain oracle") {
    const auto spec = chain_pomdp(2, 0.1);
    const auto pi = chain_eval_policy();
    const auto beta = chain_behavior_policy();
    const auto truth = oracle::enumerate_return_cdf(spec, pi);
    const double kappa = (spec.g_min + spec.g_max) / 2.0;
    const double f_true = truth(kappa);

    const double delta_i = 0.1;
    const CiMethod method{CiMethod::Kind::truncated_empirical_bernstein, 2.0};
    const int trials = 400;
    int lower_violations = 0;
    int joint_violations = 0;
    for (int t = 0; t < trials; ++t) {
        const auto d =
            generate_dataset(spec, {beta}, 120, pi, 61'000 + static_cast<std::uint64_t>(t));
        const double lo = ci_lower(d, kappa, delta_i, method);
        const double hi = ci_upper(d, kappa, delta_i, method);
        if (lo > f_true) ++lower_violations;
        if (lo > f_true || hi < f_true) ++joint_violations;
    }
    const double slack = 3.0 * std::sqrt(delta_i * (1.0 - delta_i) / trials);
    CHECK(static_cast<double>(lower_violations) / trials <= delta_i + slack);
    CHECK(static_cast<double>(joint_violations) / trials <= 2.0 * delta_i + slack);
}

TEST_CASE("cap selection returns a usable threshold") {
    const auto spec = chain_pomdp(3, 0.15);
    const auto d = generate_dataset(spec, {chain_behavior_policy()}, 50, chain_eval_policy(), 5);
    const std::vector<double> probes{spec.g_min + 0.3 * (spec.g_max - spec.g_min),
                                     spec.g_min + 0.7 * (spec.g_max - spec.g_min)};
    const double cap = choose_cap(d, 950, 0.1, probes);
    CHECK(cap > 0.0);
    CHECK(std::isfinite(cap));
    // tiny train split falls back to the weight quantile
    ReturnDataset tiny{{{0.5, 1.0, 1}}, 0.0, 1.0};
    CHECK(choose_cap(tiny, 950, 0.1, probes) > 0.0);
}
