#include "imjet/extend.hpp"
#include "imjet/models.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace imjet;

namespace {

struct SellFixture {
    std::unique_ptr<JetEngine> eng;
    SampleStore store;
    std::shared_ptr<const ManifoldChart> top;

    SellFixture() {
        const auto prob = sell_problem({});
        const auto lad = gap_ladder(prob.A, prob.L, 2);
        SolverOptions o;
        o.T = 8.0;
        o.dt = 0.01;
        o.tol = 1e-13;
        eng = std::make_unique<JetEngine>(prob, lad, o);
        std::vector<Vec> pts;
        for (int i = 0; i <= 20; ++i) pts.push_back(Vec::Constant(1, 0.05 + 0.005 * i));
        store = SampleStore::build(*eng, pts, 2, 2);
        top = std::make_shared<ManifoldChart>(prob, lad.level(2).N, lad.level(2).theta, eng->grid(), o);
    }
};

const SellFixture& fixture() {
    static const SellFixture f;
    return f;
}

/// Samples on the straight line q = (p, 0) carrying the jet of a fixed quadratic map.
SampleStore line_store(double h, int count) {
    std::vector<JetSample> s;
    for (int i = 0; i < count; ++i) {
        JetSample js;
        js.p = Vec::Constant(1, i * h);
        js.q = (Vec(2) << i * h, 0.0).finished();
        js.tangent = (Mat(2, 1) << 1.0, 0.0).finished();
        // g(q) = q1^2 + 2 q2 expanded at q_i: value, gradient, Hessian.
        std::vector<SymMultiForm> comps;
        comps.emplace_back(0, 2, 1, Mat::Constant(1, 1, js.q[0] * js.q[0]));
        comps.emplace_back(1, 2, 1, (Mat(1, 2) << 2 * js.q[0], 2.0).finished());
        SymMultiForm H(2, 2, 1);
        H.set_entry(0, {0, 0}, 2.0);
        comps.push_back(H);
        js.jet = Jet(comps);
        s.push_back(js);
    }
    return SampleStore(2, s);
}

} // namespace

TEST_CASE("sample store geometry and serialization") {
    const auto st = line_store(0.01, 11);
    CHECK(st.spacing() == doctest::Approx(0.01));
    CHECK(st.nearest((Vec(2) << 0.052, 0.3).finished()) == 5);
    CHECK(base_distance(st, (Vec(2) << 0.052, 0.3).finished()) == doctest::Approx(0.3));
    const auto back = SampleStore::from_json(st.to_json());
    CHECK(back.samples().size() == 11);
    CHECK(back.spacing() == st.spacing());
    CHECK(back.order() == 2);
}

TEST_CASE("cutoff is zero on the tube and one outside twice its width") {
    const auto st = line_store(0.01, 11);
    CHECK(cutoff_rho(st, 0.05, (Vec(2) << 0.05, 0.04).finished()) == 0.0);
    CHECK(cutoff_rho(st, 0.05, (Vec(2) << 0.05, 0.11).finished()) == 1.0);
    const double mid = cutoff_rho(st, 0.05, (Vec(2) << 0.05, 0.075).finished());
    CHECK(mid > 0.0);
    CHECK(mid < 1.0);
}

TEST_CASE("mollifier preserves affine maps") {
    const auto f = [](const Vec& x) { return Vec::Constant(1, 3.0 * x[0] - 2.0 * x[1] + 1.0); };
    const Vec q = (Vec(2) << 0.3, -0.2).finished();
    CHECK(mollify(f, 0.01, q)[0] == doctest::Approx(f(q)[0]).epsilon(1e-13));
}

TEST_CASE("blend reproduces an exact polynomial and anchors at samples") {
    const auto st = line_store(0.01, 11);
    BlendOptions bo;
    bo.nu = 0.02;
    for (const Vec& q : {Vec((Vec(2) << 0.033, 0.01).finished()), Vec((Vec(2) << 0.05, 0.0).finished())}) {
        const auto b = whitney_blend(st, q, bo);
        CHECK(b.value[0] == doctest::Approx(q[0] * q[0] + 2 * q[1]).epsilon(1e-12));
        CHECK(b.derivative(0, 0) == doctest::Approx(2 * q[0]).epsilon(1e-9));
        CHECK(b.derivative(0, 1) == doctest::Approx(2.0).epsilon(1e-9));
    }
    CHECK_THROWS_AS(whitney_blend(st, (Vec(2) << 5.0, 5.0).finished(), bo), DomainError);
}

TEST_CASE("extension requires samples denser than half the tube width") {
    const auto& f = fixture();
    ExtensionConfig ec;
    ec.nu = 0.005;
    CHECK_THROWS_AS(ExtendedManifold(f.store, f.top, ec), PreconditionError);
}

TEST_CASE("extended chart anchors on the sampled level-1 manifold") {
    const auto& f = fixture();
    ExtensionConfig ec;
    ec.nu = 0.05;
    const ExtendedManifold M(f.store, f.top, ec);
    for (const auto& s : f.store.samples()) CHECK((M(s.q) - f.eng->chart_value(s.p, 2)).norm() <= 1e-8);
    bool analytic = false;
    const Mat D = M.derivative(f.store.samples()[10].q, &analytic);
    CHECK(analytic);
    CHECK(D.rows() == 4);
    CHECK(D.cols() == 2);
    // Far from the base the extension is the mollified top chart.
    const Vec far = f.store.samples()[10].q + (Vec(2) << 0.0, 0.5).finished();
    CHECK(M.rho(far) == 1.0);
    CHECK((M(far) - M.mollified(far)).norm() == 0.0);
}

TEST_CASE("modified flow keeps the extended graph invariant") {
    const auto& f = fixture();
    ExtensionConfig ec;
    ec.nu = 0.05;
    const ExtendedManifold M(f.store, f.top, ec);
    const auto g = graph_of(M);
    ForwardOptions fo;
    fo.dt_out = 0.05;
    fo.tol = 1e-10;
    const Vec q0 = f.eng->base_point(Vec::Constant(1, 0.1), 2);
    CHECK(modified_invariance_defect(f.eng->problem(), g, q0, 5.0, fo) <= 1e-6);
    const Vec u = (Vec(6) << q0, M(q0)).finished();
    const Vec Ft = modified_nonlinearity(f.eng->problem(), g, u);
    CHECK(Ft.size() == 6);
    CHECK((Ft.head(2) - extended_if_rhs(f.eng->problem(), g, q0)).norm() < 1e-14);
}

TEST_CASE("extension bundle round trip") {
    const auto& f = fixture();
    ExtensionConfig ec;
    ec.nu = 0.05;
    const ExtendedManifold M(f.store, f.top, ec);
    const auto dir = std::filesystem::temp_directory_path() / "imjet_bundle_test";
    std::filesystem::remove_all(dir);
    write_extension_bundle(M, dir.string(), {{"note", "test"}});
    CHECK(std::filesystem::exists(dir / "manifest.json"));
    CHECK(std::filesystem::exists(dir / "config.json"));
    const auto back = read_extension_samples(dir.string());
    CHECK(back.samples().size() == f.store.samples().size());
    std::filesystem::remove_all(dir);
}
