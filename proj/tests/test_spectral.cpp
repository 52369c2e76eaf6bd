#include "imjet/rng.hpp"
#include "imjet/spectral.hpp"

#include <doctest.h>

using namespace imjet;

TEST_CASE("eigenvalue ladders") {
    const auto A = SpectralOperator::squares(5, 2.0);
    CHECK(A.lambda(1) == 2.0);
    CHECK(A.lambda(3) == 18.0);
    const auto B = SpectralOperator::powers_of_two(5);
    CHECK(B.lambda(1) == 1.0);
    CHECK(B.lambda(5) == 16.0);
    CHECK_THROWS_AS(SpectralOperator({2.0, 1.0}), InputError);
    CHECK_THROWS_AS(SpectralOperator({1.0, -1.0}), InputError);
    CHECK_THROWS_AS(A.lambda(6), InputError);
}

TEST_CASE("projections split the coordinates") {
    Vec u(4);
    u << 1, 2, 3, 4;
    CHECK(project_low(u, 2) == (Vec(4) << 1, 2, 0, 0).finished());
    CHECK(project_high(u, 2) == (Vec(4) << 0, 0, 3, 4).finished());
    CHECK(project_low(u, 2) + project_high(u, 2) == u);
}

TEST_CASE("first gap for a = 1, L = 3 is N = 3") {
    const auto A = SpectralOperator::squares(16);
    REQUIRE(first_gap_index(A, 3.0).has_value());
    CHECK(*first_gap_index(A, 3.0) == 3);
    CHECK(A.lambda(3) + 3.0 == 12.0);
    CHECK(A.lambda(4) - 3.0 == 13.0);
    CHECK_FALSE(first_gap_index(SpectralOperator::squares(3), 10.0).has_value());
}

TEST_CASE("first gap agrees with the 2N + 1 > 2L / a enumeration") {
    SplitMix64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const double a = rng.uniform(0.2, 3.0), L = rng.uniform(0.0, 30.0 * a);
        const auto A = SpectralOperator::squares(64, a);
        int expected = 1;
        while (!(2 * expected + 1 > 2.0 * L / a)) ++expected;
        REQUIRE(first_gap_index(A, L).has_value());
        CHECK(*first_gap_index(A, L) == expected);
    }
}

TEST_CASE("gap ladder on the doubling spectrum") {
    const auto A = SpectralOperator::powers_of_two(6);
    const auto lad = gap_ladder(A, 0.1, 2);
    REQUIRE(lad.depth() == 2);
    CHECK(lad.level(1).N == 1);
    CHECK(lad.level(2).N == 2);
    for (int k = 1; k <= 2; ++k) {
        const auto& lv = lad.level(k);
        CHECK(lv.theta > A.lambda(lv.N) + lad.L);
        CHECK(lv.theta < A.lambda(lv.N + 1) - lad.L);
    }
    CHECK(lad.jet_exponent(2, 2) == doctest::Approx(lad.level(2).theta + lad.level(1).theta));
    CHECK_THROWS_AS(lad.jet_exponent(1, 2), CapabilityError);
    CHECK(lad.to_json().at("levels").size() == 2);
}

TEST_CASE("three-level ladder needs a longer truncation") {
    CHECK_THROWS_AS(gap_ladder(SpectralOperator::powers_of_two(6), 0.1, 3), InfeasibleLadder);
    const auto lad = gap_ladder(SpectralOperator::powers_of_two(10), 0.1, 3);
    CHECK(lad.level(3).N == 4);
}

TEST_CASE("ladder levels satisfy the Hoelder gap inequality") {
    const auto A = SpectralOperator::squares(40);
    const auto lad = gap_ladder(A, 1.1, 2);
    for (int k = 1; k <= lad.depth(); ++k) {
        const int N = lad.level(k).N;
        CHECK(A.lambda(N + 1) - A.lambda(N) > 2.0 * lad.L);
    }
    CHECK(check_holder_gap(A, lad.level(1).N, lad.L, 1, lad.epsilon));
}
