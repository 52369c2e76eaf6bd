#include "imjet/parasolve.hpp"
#include "imjet/perron.hpp"
#include "imjet/trajectory.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace imjet;

TEST_CASE("grid keeps t = 0 as a node") {
    SolverOptions o;
    o.dt = 0.03;
    const auto g = make_grid(SpectralOperator::squares(4), 1.0, o, 0.5);
    const int j = g.nearest(0.0);
    CHECK(std::abs(g.t(j)) < 1e-12);
    CHECK(g.t0 <= -1.0 + 1e-12);
    CHECK(g.t_end() >= 0.5 - 1e-12);
    CHECK(g.dt <= 0.03 + 1e-15);
}

TEST_CASE("Green operator solves the forced linear equation") {
    // dv/dt + lambda v = e^{mu t}: forward modes start from zero, backward modes end at zero.
    const auto A = SpectralOperator::squares(3);
    const TimeGrid g = TimeGrid::covering(-4.0, 0.0, 1e-3);
    const double mu = 0.5;
    RowMat h(g.nodes(), 3);
    for (int j = 0; j < g.nodes(); ++j) h.row(j).setConstant(std::exp(mu * g.t(j)));
    const GreenOperator T(A, 1, 2.5, g);
    const RowMat v = T.apply(h);
    double err = 0.0;
    for (int j = 0; j < g.nodes(); ++j) {
        const double t = g.t(j);
        for (int k = 1; k <= 3; ++k) {
            const double lam = A.lambda(k);
            const double part = std::exp(mu * t) / (lam + mu);
            const double exact = k <= 1 ? part - std::exp(-lam * t) / (lam + mu)
                                        : part - std::exp(-lam * (t - g.t0)) * std::exp(mu * g.t0) / (lam + mu);
            err = std::max(err, std::abs(v(j, k - 1) - exact));
        }
    }
    CHECK(err < 1e-6);
    CHECK_THROWS_AS(GreenOperator(A, 1, 5.0, g), PreconditionError);
}

TEST_CASE("Green transpose is the matrix adjoint") {
    const auto A = SpectralOperator::powers_of_two(4);
    const TimeGrid g = TimeGrid::covering(-3.0, 0.0, 0.01);
    const GreenOperator T(A, 2, 3.0, g);
    RowMat x = RowMat::Random(g.nodes(), 4), y = RowMat::Random(g.nodes(), 4);
    const double lhs = (T.apply(x).array() * y.array()).sum();
    const double rhs = (x.array() * T.apply_transpose(y).array()).sum();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("operator norm estimate matches the reciprocal gap") {
    const auto A = SpectralOperator::squares(6);
    const double theta = 2.5;
    const double gap = green_gap(A, 1, theta);
    CHECK(gap == doctest::Approx(1.5));
    const auto est = operator_norm_estimate(A, 1, theta, TimeGrid::covering(-40.0 / gap, 0.0, 0.05), 400);
    CHECK(est.formula == doctest::Approx(1.0 / 1.5));
    CHECK(std::abs(est.estimate - est.formula) / est.formula < 0.02);
}

TEST_CASE("forward solve of a linear system is exact in each mode") {
    const Vec lam = (Vec(3) << 1.0, 4.0, 9.0).finished();
    const Vec u0 = (Vec(3) << 1.0, -0.5, 0.25).finished();
    ForwardOptions fo;
    fo.dt_out = 0.1;
    const auto u = forward_solve(lam, [](const Vec& x) { return Vec::Zero(x.size()); }, u0, 2.0, fo);
    for (int j = 0; j < u.grid.nodes(); ++j)
        for (int k = 0; k < 3; ++k) CHECK(u.values(j, k) == doctest::Approx(u0[k] * std::exp(-lam[k] * u.grid.t(j))));
}

TEST_CASE("forward solve follows the logistic-type scalar law") {
    // u' + u = u^2 has u(t) = 1 / (1 + (1/u0 - 1) e^t).
    ForwardOptions fo;
    fo.dt_out = 0.05;
    const auto u = forward_solve(Vec::Ones(1), [](const Vec& x) { return Vec(x.array().square()); }, Vec::Constant(1, 0.5),
                                 3.0, fo);
    for (int j = 0; j < u.grid.nodes(); ++j)
        CHECK(u.values(j, 0) == doctest::Approx(1.0 / (1.0 + std::exp(u.grid.t(j)))).epsilon(1e-8));
}

TEST_CASE("Perron solution without nonlinearity is the homogeneous flow") {
    SemilinearProblem prob(SpectralOperator::squares(4), std::make_shared<ZeroNonlinearity>(4), 0.0);
    SolverOptions o;
    o.T = 3.0;
    const auto g = make_grid(prob.A, 3.0, o);
    const Vec p = (Vec(4) << 0.3, -0.2, 0.0, 0.0).finished();
    const auto r = backward_fixed_point(prob, 2, 6.5, p, g, o);
    for (int j = 0; j < g.nodes(); j += 50) {
        CHECK(r.V.values(j, 0) == doctest::Approx(0.3 * std::exp(-g.t(j))));
        CHECK(std::abs(r.V.values(j, 2)) < 1e-14);
    }
}

TEST_CASE("trajectory utilities") {
    const TimeGrid g = TimeGrid::covering(-1.0, 1.0, 0.1);
    Trajectory u(g, 1, 0.5);
    for (int j = 0; j < g.nodes(); ++j) u.values(j, 0) = std::pow(g.t(j), 3) - g.t(j);
    CHECK(u.sample(0.437)[0] == doctest::Approx(std::pow(0.437, 3) - 0.437).epsilon(1e-12));
    CHECK(u.at_zero()[0] == doctest::Approx(0.0));
    const auto w = trapezoid_weights(g);
    CHECK(w.sum() == doctest::Approx(2.0));

    const auto path = (std::filesystem::temp_directory_path() / "imjet_test_traj.bin").string();
    write_binary(u, path);
    const auto back = read_binary(path);
    std::filesystem::remove(path);
    CHECK(back.theta == 0.5);
    CHECK(back.grid.intervals == g.intervals);
    CHECK((back.values - u.values).norm() == 0.0);
}

TEST_CASE("weighted norms") {
    const TimeGrid g = TimeGrid::covering(-2.0, 0.0, 1e-3);
    RowMat u(g.nodes(), 1);
    for (int j = 0; j < g.nodes(); ++j) u(j, 0) = std::exp(-g.t(j));
    // e^{theta t} e^{-t} with theta = 1 is constant 1.
    CHECK(weighted_sup_norm(g, u, 1.0) == doctest::Approx(1.0));
    CHECK(weighted_l2_norm(g, u, 1.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
}
