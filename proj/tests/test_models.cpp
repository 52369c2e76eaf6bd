#include "test_util.hpp"

#include "imjet/jetcalc.hpp"
#include "imjet/models.hpp"

#include <doctest.h>

#include <cmath>

using namespace imjet;
using namespace imjet::testing;

namespace {

/// Checks TaylorPair columns against exact polynomial extraction in the series variable.
void check_taylor(const Nonlinearity& F, const Vec& u, const Mat& c, const Mat& y, int order, int poly_degree,
                  double tol) {
    const int K = F.dim();
    const auto curve = [&](double s, const Mat& m, int first) {
        Vec x = Vec::Zero(K);
        for (int j = 0; j < m.cols(); ++j) x += std::pow(s, j + first) * m.col(j);
        return x;
    };
    const auto tp = F.taylor(u, c, y, order);
    const Jet val = extract_components([&](const Vec& s) { return F.apply(u + curve(s[0], c, 1)); }, poly_degree, 1, K,
                                       poly_degree);
    const Jet tan = extract_components(
        [&](const Vec& s) { return Vec(F.jacobian(u + curve(s[0], c, 1)) * curve(s[0], y, 0)); }, poly_degree, 1, K,
        poly_degree);
    for (int m = 0; m <= order; ++m) {
        const Vec v = val.component(m).eval(Vec::Ones(1)) / factorial(m);
        const Vec t = tan.component(m).eval(Vec::Ones(1)) / factorial(m);
        CHECK((tp.value.col(m) - v).norm() < tol * std::max(1.0, v.norm()));
        CHECK((tp.tangent.col(m) - t).norm() < tol * std::max(1.0, t.norm()));
    }
}

} // namespace

TEST_CASE("Sell constants match a direct numerical integration of the cascade") {
    const auto C = sell_constants(5);
    CHECK(C[0] == 1.0);
    CHECK(C[1] == 1.0);
    CHECK(C[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(C[3] == doctest::Approx(1.0 / 63.0).epsilon(1e-14));
    for (int n = 1; n + 1 <= 5; ++n) CHECK(C[n + 1] == doctest::Approx(C[n] * C[n] / (std::pow(2.0, n + 1) - 1.0)));

    // Uncut cascade from (1, 0, ..., 0): u_{n+1}(t) = C_n t^(2^n - 1) e^(-2^n t).
    const auto A = sell_operator(5);
    ForwardOptions fo;
    fo.dt_out = 0.25;
    fo.tol = 1e-13;
    Vec u0 = Vec::Zero(5);
    u0[0] = 1.0;
    const auto u = forward_solve(A.eigenvalues(), sell_rhs, u0, 4.0, fo);
    for (int j = 1; j < u.grid.nodes(); ++j) {
        const double t = u.grid.t(j);
        for (int n = 0; n < 5; ++n) {
            const double p = std::pow(2.0, n);
            const double expect = C[n] * std::pow(t, p - 1.0) * std::exp(-p * t);
            CHECK(u.values(j, n) == doctest::Approx(expect).epsilon(1e-7));
        }
    }
}

TEST_CASE("Sell explicit solution has machine-level defect") {
    double worst = 0.0;
    for (int n = 1; n <= 5; ++n)
        for (int i = 0; i <= 100; ++i) worst = std::max(worst, std::abs(sell_explicit_defect(0.05 * i, n)));
    CHECK(worst <= 1e-10);
    CHECK(sell_explicit(1.0, 2) == doctest::Approx(std::exp(-2.0)));
}

TEST_CASE("Sell chart closed form") {
    CHECK(sell_manifold_chart(0.1, 1) == 0.1);
    CHECK(sell_manifold_chart(0.1, 2) == doctest::Approx(0.01 * std::log(10.0)));
    CHECK(sell_manifold_chart(0.0, 3) == 0.0);
    CHECK(sell_manifold_chart(-0.1, 2) == sell_manifold_chart(0.1, 2));
    CHECK_THROWS_AS(sell_manifold_chart(0.25, 2), DomainError);
    CHECK(sell_chart_invariance_defect(0.1, 6, 5.0) <= 1e-7);
    CHECK(sell_chart_invariance_defect(0.01, 6, 5.0) <= 1e-7);
}

TEST_CASE("resonance obstruction certificates") {
    for (int n = 1; n <= 3; ++n) {
        const auto cert = sell_c2_obstruction(n);
        CHECK(cert.symbolic_coefficient == 0);
        CHECK(cert.forcing == 1);
        CHECK(cert.fit.residual >= 0.5);
        CHECK(cert.fit.grid_min_residual >= 0.5);
        CHECK(cert.passes);
        CHECK(cert.to_json().at("passes").get<bool>());
    }
    CHECK(sell_shifted_contrast().residual <= 1e-6);
}

TEST_CASE("minimax fit of proportional data is exact") {
    const std::vector<double> y{1, 2, 3, 4};
    const std::vector<double> x{2.5, 5, 7.5, 10};
    const auto f = fit_quadratic_coefficient(x, y);
    CHECK(f.c == doctest::Approx(2.5));
    CHECK(f.residual < 1e-14);
}

TEST_CASE("extended chart is invariant for the modified cascade") {
    for (int n = 1; n <= 3; ++n) {
        Vec p = Vec::Zero(n);
        p[0] = 0.1;
        CHECK(sell_extended_invariance_defect(p, n, 6, 5.0) <= 1e-7);
    }
    const Vec e = sell_extended_chart(Vec::Constant(2, 0.1), 2, 5);
    CHECK(e.size() == 5);
    CHECK(e[2] == doctest::Approx(sell_manifold_chart(0.1, 3)));
    // Modified right-hand side squares the chart values above level n.
    Vec u = Vec::Zero(5);
    u[0] = 0.1;
    const Vec r = sell_modified_rhs(u, 2);
    CHECK(r[0] == 0.0);
    CHECK(r[1] == doctest::Approx(0.01));
    CHECK(r[2] == doctest::Approx(std::pow(sell_manifold_chart(0.1, 2), 2)));
}

TEST_CASE("divided differences locate the smoothness threshold") {
    for (int n = 1; n <= 3; ++n) {
        const auto pr = sell_divided_differences(n);
        CHECK(pr.passes);
        CHECK(static_cast<int>(pr.values.size()) == (1 << n));
    }
    CHECK_THROWS_AS(sell_divided_differences(5), InputError);
}

TEST_CASE("Sell cutoff") {
    CHECK(sell_cutoff(0.3) == 1.0);
    CHECK(sell_cutoff(2.5) == 0.0);
    const double r = 1.1, h = 1e-6;
    CHECK(sell_cutoff_derivative(r) == doctest::Approx((sell_cutoff(r + h) - sell_cutoff(r - h)) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("Sell nonlinearity Taylor coefficients") {
    SellNonlinearity F(4, false, 0.1);
    SplitMix64 rng(21);
    const Vec u = 0.3 * rng.normal_vector(4);
    const Mat c = 0.2 * Mat::Random(4, 3), y = Mat::Random(4, 4);
    check_taylor(F, u, c, y, 3, 6, 1e-10);
    CHECK((F.apply(u) - sell_rhs(u)).norm() == 0.0);
}

TEST_CASE("Sell nonlinearity with cutoff: Taylor and Jacobian agree with differences") {
    SellNonlinearity F(4, true, 0.1);
    const Vec u = (Vec(4) << 0.9, 0.2, -0.1, 0.05).finished();
    const double h = 1e-6;
    Mat fd(4, 4);
    for (int k = 0; k < 4; ++k) {
        Vec e = Vec::Zero(4);
        e[k] = h;
        fd.col(k) = (F.apply(u + e) - F.apply(u - e)) / (2 * h);
    }
    CHECK((F.jacobian(u) - fd).norm() < 1e-7);
    const Mat c = (Mat(4, 1) << 1e-3, 0, 0, 0).finished();
    const auto tp = F.taylor(u, c, Mat::Zero(4, 2), 1);
    CHECK((tp.value.col(1) - F.jacobian(u) * c.col(0)).norm() < 1e-12);
}

TEST_CASE("reaction-diffusion model") {
    RdsOptions o;
    const auto prob = rds_build(o);
    CHECK(prob.A.lambda(1) == 1.0);
    CHECK(prob.A.lambda(2) == 4.0);
    CHECK(prob.A.lambda(3) == 9.0);
    SplitMix64 rng(22);
    for (int s = 0; s < 5; ++s) {
        Vec u = rng.normal_vector(o.K);
        u *= 0.9 * o.R / (u.cwiseAbs().sum() / std::sqrt(M_PI));
        CHECK((prob.F->apply(u) - rds_quadrature_projection(o, u)).norm() < 1e-8);
    }
}

TEST_CASE("reaction-diffusion Taylor coefficients are exact for cubic reactions") {
    RdsOptions o;
    o.cutoff = false;
    o.L = 1.0;
    o.K = 4;
    RdsNonlinearity F(o);
    SplitMix64 rng(23);
    const Vec u = 0.3 * rng.normal_vector(4);
    const Mat c = 0.2 * Mat::Random(4, 3), y = Mat::Random(4, 4);
    check_taylor(F, u, c, y, 3, 9, 1e-9);
}

TEST_CASE("linear reaction gives a diagonal nonlinearity and a flat chart") {
    RdsOptions o;
    o.f_coeffs = {0.0, -0.5};
    o.cutoff = false;
    CHECK(rds_certified_lipschitz(o) == 0.5);
    const auto prob = rds_build(o);
    SplitMix64 rng(24);
    const Vec u = rng.normal_vector(o.K);
    CHECK((prob.F->apply(u) - 0.5 * u).norm() < 1e-12);
    RdsOptions cubic;
    cubic.cutoff = false;
    CHECK_THROWS_AS(rds_certified_lipschitz(cubic), InputError);
}

TEST_CASE("cutoff reaction has the certified Lipschitz bound") {
    RdsOptions o;
    o.R = 0.2;
    o.w = 1.2;
    const auto prob = rds_build(o);
    const auto* F = dynamic_cast<const RdsNonlinearity*>(prob.F.get());
    REQUIRE(F != nullptr);
    double worst = 0.0;
    for (int i = 0; i <= 4000; ++i) worst = std::max(worst, std::abs(F->reaction_derivative(-3.0 + 6.0 * i / 4000)));
    CHECK(worst <= prob.L);
    CHECK(prob.L == doctest::Approx(1.1).epsilon(0.05));
    CHECK(F->reaction(5.0) == 0.0);
}
