#include <catch2/catch_amalgamated.hpp>

#include "offdist/rng.hpp"
#include "offdist/step_cdf.hpp"

using namespace offdist;

TEST_CASE("right-continuous evaluation") {
    StepCdf f({1.0, 2.0, 3.0}, {0.2, 0.5, 1.0});
    CHECK(f(0.5) == 0.0);
    CHECK(f(1.0) == 0.2);
    CHECK(f(1.5) == 0.2);
    CHECK(f(2.0) == 0.5);
    CHECK(f(3.0) == 1.0);
    CHECK(f(10.0) == 1.0);
}

TEST_CASE("value_at_or_after is the left-continuous companion") {
    StepCdf f({1.0, 2.0}, {0.3, 0.9});
    CHECK(f.value_at_or_after(0.0, 1.0) == 0.3);
    CHECK(f.value_at_or_after(1.0, 1.0) == 0.3);
    CHECK(f.value_at_or_after(1.5, 1.0) == 0.9);
    CHECK(f.value_at_or_after(2.0, 1.0) == 0.9);
    CHECK(f.value_at_or_after(2.5, 1.0) == 1.0);
}

TEST_CASE("construction rejects malformed input") {
    CHECK_THROWS(StepCdf({2.0, 1.0}, {0.1, 0.2}));
    CHECK_THROWS(StepCdf({1.0, 2.0}, {0.5, 0.2}));
    CHECK_THROWS(StepCdf({1.0}, {0.5, 0.6}));
}

TEST_CASE("integrate_step is exact on pieces") {
    StepCdf f({0.0, 1.0}, {0.25, 1.0});
    CHECK(integrate_step(f, -1.0, 0.0) == 0.0);
    CHECK(integrate_step(f, 0.0, 1.0) == Catch::Approx(0.25).margin(1e-15));
    CHECK(integrate_step(f, 0.0, 2.0) == Catch::Approx(1.25).margin(1e-15));
    CHECK(integrate_step(f, -2.0, 3.0) == Catch::Approx(0.25 + 2.0).margin(1e-15));
    CHECK(integrate_step(f, 0.5, 0.75) == Catch::Approx(0.0625).margin(1e-15));
}

TEST_CASE("first_breakpoint_reaching with fallback") {
    StepCdf f({1.0, 2.0}, {0.25, 0.5});
    CHECK(first_breakpoint_reaching(f, 0.2, 99.0) == 1.0);
    CHECK(first_breakpoint_reaching(f, 0.5, 99.0) == 2.0);
    CHECK(first_breakpoint_reaching(f, 0.9, 99.0) == 99.0);
}

TEST_CASE("point masses fall back to first differences") {
    StepCdf f({1.0, 2.0, 3.0}, {0.2, 0.5, 1.0});
    const auto pmf = f.point_masses();
    REQUIRE(pmf.size() == 3);
    CHECK(pmf[0].mass == Catch::Approx(0.2));
    CHECK(pmf[1].mass == Catch::Approx(0.3));
    CHECK(pmf[2].mass == Catch::Approx(0.5));
}

TEST_CASE("random monotone step functions evaluate consistently") {
    Rng rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(20);
        std::vector<double> xs;
        std::vector<double> vs;
        double x = rng.uniform(-5.0, 5.0);
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            x += 0.01 + rng.uniform01();
            v += rng.uniform01();
            xs.push_back(x);
            vs.push_back(v);
        }
        StepCdf f(xs, vs);
        for (int probe = 0; probe < 20; ++probe) {
            const double nu = rng.uniform(xs.front() - 2.0, xs.back() + 2.0);
            const double val = f(nu);
            // right-continuity: approaching from the right never changes the value
            CHECK(f(std::nextafter(nu, 1e18)) >= val);
            // monotone
            CHECK(f(nu + 0.5) >= val);
        }
    }
}
