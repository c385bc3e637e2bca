#include <cmath>
#include <numbers>

#include "doctest.h"
#include "multiface/capacity.hpp"
#include "multiface/errors.hpp"
#include "oracles.hpp"

using namespace multiface;
using std::numbers::pi;

TEST_CASE("sphere surface area closed forms") {
    CHECK(std::abs(std::exp(log_sphere_surface_area(1)) - 2.0) <= 1e-12);
    CHECK(std::abs(std::exp(log_sphere_surface_area(2)) - 2 * pi) <= 1e-12);
    CHECK(std::abs(std::exp(log_sphere_surface_area(3)) - 4 * pi) <= 1e-12);
    CHECK(std::abs(std::exp(log_sphere_surface_area(4)) - 2 * pi * pi) <= 1e-11);
    CHECK_THROWS_AS(log_sphere_surface_area(0), ValueError);
    CHECK(std::isfinite(log_sphere_surface_area(512)));
}

TEST_CASE("cap area closed forms") {
    CHECK(std::abs(std::exp(log_cap_area(2, pi)) - 2.0 * (1.0 - std::cos(pi / 4))) <= 1e-10);
    CHECK(std::exp(log_cap_area(2, pi)) == doctest::Approx(0.585786).epsilon(1e-6));
    for (double theta : {0.3, 1.0, 2.0, 3.0}) {
        CHECK(std::abs(std::exp(log_cap_area(2, theta)) - 2.0 * (1.0 - std::cos(theta / 4))) <= 1e-10);
    }
    CHECK(std::abs(std::exp(log_cap_area(3, 2 * pi)) - pi * pi / 2) <= 1e-10);
    // The exact cap in R^3 is 2 pi (1 - cos(theta/4)).
    CHECK(std::abs(std::exp(log_cap_area(3, pi, CapMode::exact_cap)) - 2 * pi * (1 - std::cos(pi / 4))) <= 1e-10);
}

TEST_CASE("cap integral agrees with Monte Carlo") {
    std::uint64_t seed = 11;
    for (std::size_t n : {3, 8, 16, 32}) {
        for (double theta : {pi / 3, pi / 2, pi}) {
            const double lower = std::cos(theta / 4);
            const auto mc = oracle::cap_integral_mc((static_cast<double>(n) - 2.0) / 2.0, lower, 1'000'000, seed++);
            const double quad = std::exp(log_cap_integral(n, theta));
            CHECK_MESSAGE(std::abs(quad - mc.value) <= 3.0 * mc.std_error, "n=" << n << " theta=" << theta);
        }
    }
}

TEST_CASE("max_points identity and monotonicity") {
    for (std::size_t n : {2, 3, 16, 128, 512}) {
        const CapacityResult r = max_points({n, pi / 3});
        CHECK(std::abs(r.log_m_star + r.log_cap_area - r.log_sphere_area) <= 1e-9);
        CHECK(r.m_star_decimal_exponent == doctest::Approx(r.log_m_star / std::log(10.0)));
        CHECK(std::isfinite(r.log_m_star));
    }
    double prev = -INFINITY;
    for (std::size_t n = 4; n <= 256; n *= 2) {
        const double v = max_points({n, pi / 3}).log_m_star;
        CHECK(v > prev);
        prev = v;
    }
    prev = INFINITY;
    for (double theta : {pi / 6, pi / 4, pi / 3, pi / 2, pi}) {
        const double v = max_points({128, theta}).log_m_star;
        CHECK(v < prev);
        prev = v;
    }
    CHECK(max_points({64, pi / 3}).log_m_star < max_points({128, pi / 3}).log_m_star);
    CHECK(max_points({128, pi / 2}).log_m_star < max_points({128, pi / 3}).log_m_star);
}

TEST_CASE("paper and exact-cap modes differ") {
    const double a = max_points({3, pi / 2}, CapMode::paper).log_m_star;
    const double b = max_points({3, pi / 2}, CapMode::exact_cap).log_m_star;
    CHECK(std::abs(a - b) > 1e-3);
    CHECK(parse_cap_mode("exact-cap") == CapMode::exact_cap);
    CHECK(to_string(CapMode::paper) == "paper");
    CHECK_THROWS(parse_cap_mode("exact"));
}

TEST_CASE("capacity query validation") {
    CHECK_THROWS_AS(max_points({1, 1.0}), ValueError);
    CHECK_THROWS_AS(max_points({8, 0.0}), ValueError);
    CHECK_THROWS_AS(max_points({8, -1.0}), ValueError);
    CHECK_THROWS_AS(max_points({8, 4 * pi}), ValueError);
}
