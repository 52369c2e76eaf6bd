#include "test_util.hpp"

#include "imjet/jetcalc.hpp"

#include <doctest.h>

#include <functional>

using namespace imjet;
using namespace imjet::testing;

namespace {

/// Ordered tuples (j_1..j_k), 0 <= j_i <= top, with sum m.
void for_each_tuple(int k, int m, int top, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> t(k, 0);
    const std::function<void(int, int)> rec = [&](int pos, int left) {
        if (pos == k) {
            if (left == 0) fn(t);
            return;
        }
        for (int j = 0; j <= std::min(top, left); ++j) {
            t[pos] = j;
            rec(pos + 1, left - j);
        }
    };
    rec(0, m);
}

} // namespace

TEST_CASE("multiset enumeration and ranks are consistent") {
    CHECK(num_multisets(3, 2) == 6);
    CHECK(factorial(5) == doctest::Approx(120.0));
    CHECK(binomial(6, 2) == 15);
    for (int d = 1; d <= 3; ++d)
        for (int k = 0; k <= 4; ++k) {
            const auto ms = multisets(d, k);
            REQUIRE(ms.size() == num_multisets(d, k));
            for (std::size_t i = 0; i < ms.size(); ++i) CHECK(multiset_rank(ms[i], d) == i);
        }
    const std::vector<int> t{0, 0, 2};
    CHECK(permutation_count(t, 3) == doctest::Approx(3.0));
    CHECK(exponent_factorial(t, 3) == doctest::Approx(2.0));
}

TEST_CASE("component extraction recovers random jets") {
    SplitMix64 rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 1 + trial % 4, din = 1 + trial % 3, dout = 1 + (trial / 3) % 2;
        const Jet J = random_jet(rng, n, din, dout);
        const Jet E = extract_components([&J](const Vec& x) { return J.eval(x); }, n, din, dout);
        for (int k = 0; k <= n; ++k) CHECK(rel_diff(E.component(k).coeffs(), J.component(k).coeffs()) < 1e-10);
    }
}

TEST_CASE("extraction refuses orders above the cap") {
    CHECK_THROWS_AS(extract_components([](const Vec& x) { return x; }, 7, 1, 1), CapabilityError);
}

TEST_CASE("polarization is exact on the diagonal and off it") {
    SplitMix64 rng(12);
    for (int trial = 0; trial < 40; ++trial) {
        const int k = 1 + trial % 4, din = 1 + trial % 3;
        const auto F = random_form(rng, k, din, 2);
        std::vector<Vec> diag(k, rng.normal_vector(din)), args;
        for (int i = 0; i < k; ++i) args.push_back(rng.normal_vector(din));
        CHECK((polarize(F, diag) - F.eval(diag[0])).norm() < 1e-10 * std::max(1.0, F.eval(diag[0]).norm()));
        const Vec viaFn = polarize([&F](const Vec& x) { return F.eval(x); }, k, args);
        CHECK((viaFn - F.eval_multi(args)).norm() < 1e-10 * std::max(1.0, viaFn.norm()));
    }
}

TEST_CASE("binomial expansion reproduces P(xi + eta)") {
    SplitMix64 rng(13);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 1 + trial % 4, din = 1 + trial % 3;
        const auto F = random_form(rng, n, din, 2);
        const Vec xi = rng.normal_vector(din), eta = rng.normal_vector(din);
        Vec sum = Vec::Zero(2);
        for (int j = 0; j <= n; ++j) sum += static_cast<double>(binomial(n, j)) * binomial_expand(F, j)(xi, eta);
        CHECK((sum - F.eval(xi + eta)).norm() < 1e-10 * std::max(1.0, sum.norm()));
    }
}

TEST_CASE("truncated composition matches brute-force series expansion") {
    SplitMix64 rng(14);
    for (int trial = 0; trial < 30; ++trial) {
        const int order = 1 + trial % 4, din = 1 + trial % 3, dmid = 1 + (trial / 2) % 3;
        const Jet outer = random_jet(rng, 1 + trial % 3, dmid, 2);
        const Jet inner = random_jet(rng, order, din, dmid);
        const Jet C = compose_truncate(outer, inner, order);
        const Vec xi = rng.normal_vector(din);
        std::vector<Vec> y;
        for (int j = 0; j <= order; ++j) y.push_back(inner.component(j).eval(xi) / factorial(j));
        for (int m = 0; m <= order; ++m) {
            Vec expect = Vec::Zero(2);
            for (int k = 0; k <= outer.order(); ++k)
                for_each_tuple(k, m, order, [&](const std::vector<int>& t) {
                    std::vector<Vec> args;
                    for (int j : t) args.push_back(y[j]);
                    expect += (k == 0 ? outer.component(0).eval(Vec::Zero(dmid)) : outer.component(k).eval_multi(args)) /
                              factorial(k);
                });
            const Vec got = C.component(m).eval(xi) / factorial(m);
            CHECK((got - expect).norm() < 1e-10 * std::max(1.0, expect.norm()));
        }
    }
}

TEST_CASE("lattice fit recovers a homogeneous form") {
    SplitMix64 rng(15);
    for (int k = 1; k <= 4; ++k) {
        const auto F = random_form(rng, k, 3, 2);
        const auto dirs = simplex_lattice(3, k);
        Mat vals(2, static_cast<Eigen::Index>(dirs.size()));
        for (std::size_t i = 0; i < dirs.size(); ++i) vals.col(static_cast<Eigen::Index>(i)) = F.eval(dirs[i]);
        CHECK(rel_diff(fit_homogeneous(k, dirs, vals).coeffs(), F.coeffs()) < 1e-10);
    }
}

TEST_CASE("re-expanded polynomial jets are exactly compatible") {
    SplitMix64 rng(16);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + trial % 3;
        const Jet Jp = random_jet(rng, n, 2, 2);
        const Vec delta = 0.1 * rng.normal_vector(2);
        const Jet Jp1 = extract_components([&](const Vec& x) { return Jp.eval(delta + x); }, n, 2, 2);
        const Vec xi = rng.normal_vector(2);
        CHECK(compat_residual(Jp1, Jp, delta, xi) < 1e-10);
        for (int l = 0; l <= n; ++l) CHECK(compat_component_defect(Jp1, Jp, delta, l, xi).norm() < 1e-9);
    }
}

TEST_CASE("converse Taylor check sees the truncation order") {
    // f(u) = sin(u); cubic Taylor jet at u = 0.3 leaves an O(r^4) remainder.
    const double u0 = 0.3;
    std::vector<SymMultiForm> comps;
    const double d[4] = {std::sin(u0), std::cos(u0), -std::sin(u0), -std::cos(u0)};
    for (int k = 0; k <= 3; ++k) comps.emplace_back(k, 1, 1, Mat::Constant(1, 1, d[k]));
    const Jet J(comps);
    const auto radii = geometric(1e-3, 1e-1, 8);
    const std::vector<Vec> dirs{Vec::Ones(1), -Vec::Ones(1)};
    const auto r = converse_taylor_check([](const Vec& u) { return Vec(u.array().sin()); }, Vec::Constant(1, u0), J, radii,
                                         dirs);
    CHECK(r.slope == doctest::Approx(4.0).epsilon(0.03));
}

TEST_CASE("loglog slope of a power law") {
    const auto x = geometric(1e-3, 1.0, 10);
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 * v * v);
    CHECK(loglog_slope(x, y) == doctest::Approx(2.0));
}

TEST_CASE("jets serialize and evaluate with factorial weights") {
    SplitMix64 rng(17);
    const Jet J = random_jet(rng, 3, 2, 2);
    const Jet back = jet_from_json(to_json(J));
    for (int k = 0; k <= 3; ++k) CHECK(rel_diff(back.component(k).coeffs(), J.component(k).coeffs()) == 0.0);
    const Vec xi = rng.normal_vector(2);
    Vec manual = Vec::Zero(2);
    for (int k = 0; k <= 3; ++k) manual += J.component(k).eval(xi) / factorial(k);
    CHECK((J.eval(xi) - manual).norm() < 1e-13);
    CHECK((eval_polynomial(J, xi) - manual).norm() < 1e-13);
}
