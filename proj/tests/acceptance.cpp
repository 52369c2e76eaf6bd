// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any criterion fails.
#include "imjet/extend.hpp"
#include "imjet/jetcalc.hpp"
#include "imjet/jets_manifold.hpp"
#include "imjet/models.hpp"
#include "imjet/multiindex.hpp"
#include "imjet/perron.hpp"
#include "imjet/rng.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

using namespace imjet;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool in_time = secs <= budget_s;
    const bool ok = o.pass && in_time;
    if (!ok) ++failures;
    std::printf("[%s] criterion %2d %-34s %s; %.1fs (budget %.0fs)%s\n", ok ? "PASS" : "FAIL", id, name.c_str(),
                o.detail.c_str(), secs, budget_s, in_time ? "" : " over budget");
    std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::vector<double> geometric(double lo, double hi, int count) {
    std::vector<double> v;
    for (int i = 0; i < count; ++i) v.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1)));
    return v;
}

// ---- models used by several criteria ----

SemilinearProblem rds_demo_problem() {
    RdsOptions o;
    o.R = 0.2;
    o.w = 1.2;
    o.K = 8;
    return rds_build(o);
}

SolverOptions rds_solver() {
    SolverOptions o;
    o.tol = 1e-12;
    o.horizon_tol = 1e-10;
    return o;
}

SolverOptions sell_solver(double dt = 0.01) {
    SolverOptions o;
    o.T = 8.0;
    o.dt = dt;
    o.tol = 1e-13;
    o.horizon_tol = 1e-12;
    return o;
}

std::vector<std::pair<Vec, Vec>> anchored_pairs(double anchor, double lo, double hi, int count) {
    std::vector<std::pair<Vec, Vec>> pairs;
    for (double r : geometric(lo, hi, count)) pairs.push_back({Vec::Constant(1, anchor), Vec::Constant(1, anchor + r)});
    return pairs;
}

SymMultiForm random_form(SplitMix64& rng, int degree, int din, int dout) {
    Mat c(dout, static_cast<Eigen::Index>(num_multisets(din, degree)));
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = rng.uniform(-1.0, 1.0);
    return SymMultiForm(degree, din, dout, c);
}

Jet random_jet(SplitMix64& rng, int order, int din, int dout) {
    std::vector<SymMultiForm> comps;
    for (int k = 0; k <= order; ++k) comps.push_back(random_form(rng, k, din, dout));
    return Jet(comps);
}

double rel(const Vec& a, const Vec& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

// Brute-force coefficient of s^m in outer(sum_j s^j y_j) by enumerating ordered index tuples.
Vec series_coefficient(const Jet& outer, const std::vector<Vec>& y, int m) {
    Vec acc = Vec::Zero(outer.dim_out());
    const int top = static_cast<int>(y.size()) - 1;
    for (int k = 0; k <= outer.order(); ++k) {
        if (k == 0) {
            if (m == 0) acc += outer.component(0).eval(Vec::Zero(outer.dim_in()));
            continue;
        }
        std::vector<int> t(k, 0);
        const std::function<void(int, int)> rec = [&](int pos, int left) {
            if (pos == k) {
                if (left != 0) return;
                std::vector<Vec> args;
                for (int j : t) args.push_back(y[j]);
                acc += outer.component(k).eval_multi(args) / factorial(k);
                return;
            }
            for (int j = 0; j <= std::min(top, left); ++j) {
                t[pos] = j;
                rec(pos + 1, left - j);
            }
        };
        rec(0, m);
    }
    return acc;
}

/// Shared RDS extension (level 2, samples p in [0.1, 0.3]).
struct RdsExtension {
    std::unique_ptr<JetEngine> eng;
    std::unique_ptr<ExtendedManifold> M;
};

RdsExtension& rds_extension() {
    static RdsExtension ext = [] {
        RdsExtension e;
        const auto prob = rds_demo_problem();
        const auto lad = gap_ladder(prob.A, prob.L, 2);
        e.eng = std::make_unique<JetEngine>(prob, lad, rds_solver());
        std::vector<Vec> pts;
        for (int i = 0; i <= 16; ++i) pts.push_back(Vec::Constant(1, 0.1 + 0.0125 * i));
        auto store = SampleStore::build(*e.eng, pts, 2, 2);
        auto top = std::make_shared<ManifoldChart>(prob, lad.level(2).N, lad.level(2).theta, e.eng->grid(), rds_solver());
        ExtensionConfig ec;
        ec.nu = 0.05;
        e.M = std::make_unique<ExtendedManifold>(std::move(store), top, ec);
        return e;
    }();
    return ext;
}

struct SellExtension {
    std::unique_ptr<JetEngine> eng;
    SampleStore store;
    std::shared_ptr<const ManifoldChart> top;
};

SellExtension& sell_extension() {
    static SellExtension ext = [] {
        SellExtension e;
        const auto prob = sell_problem({});
        const auto lad = gap_ladder(prob.A, prob.L, 2);
        e.eng = std::make_unique<JetEngine>(prob, lad, sell_solver());
        std::vector<Vec> pts;
        for (int i = 0; i <= 40; ++i) pts.push_back(Vec::Constant(1, 0.005 * i));
        e.store = SampleStore::build(*e.eng, pts, 2, 2);
        e.top = std::make_shared<ManifoldChart>(prob, lad.level(2).N, lad.level(2).theta, e.eng->grid(), sell_solver());
        return e;
    }();
    return ext;
}

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double h) {
    Mat J;
    for (int a = 0; a < x.size(); ++a) {
        Vec e = Vec::Zero(x.size());
        e[a] = h;
        const Vec col = (f(x + e) - f(x - e)) / (2.0 * h);
        if (a == 0) J.resize(col.size(), x.size());
        J.col(a) = col;
    }
    return J;
}

} // namespace

int main() {
    criterion(1, "Green operator norm", 30, [] {
        struct Case {
            SpectralOperator A;
            int N;
            double theta;
        };
        const std::vector<Case> cases{{SpectralOperator::squares(6), 1, 2.5},      // midpoint of (1, 4)
                                      {SpectralOperator::powers_of_two(6), 2, 3.0}, // midpoint of (2, 4)
                                      {SpectralOperator::squares(6), 2, 5.0}};      // off-center in (4, 9)
        double worst = 0.0;
        for (const auto& c : cases) {
            const double gap = green_gap(c.A, c.N, c.theta);
            const auto est = operator_norm_estimate(c.A, c.N, c.theta, TimeGrid::covering(-40.0 / gap, 0.0, 0.05), 400);
            const double exact = 1.0 / gap;
            worst = std::max(worst, std::abs(est.estimate - exact) / exact);
        }
        return Outcome{worst <= 0.02, "max relative error " + fmt("%.2e", worst) + " (<= 2e-2)"};
    });

    criterion(2, "Perron contraction (RDS)", 60, [] {
        const auto prob = rds_demo_problem();
        const auto lad = gap_ladder(prob.A, prob.L, 2);
        const int N = lad.level(1).N;
        const ManifoldChart M(prob, N, lad.level(1).theta, rds_solver());
        double worst = 0.0;
        for (double p : {-0.4, 0.1, 0.3, 0.6}) worst = std::max(worst, M.trajectory(Vec::Constant(N, p))->stats.ratio);
        const double bound = 2.0 * prob.L / (prob.A.lambda(N + 1) - prob.A.lambda(N)) + 0.05;
        return Outcome{worst <= bound, "max ratio " + fmt("%.3f", worst) + " (<= " + fmt("%.3f", bound) + ")"};
    });

    criterion(3, "jet calculus identities", 10, [] {
        SplitMix64 rng(derive_seed(2024, "acceptance-jetcalc"));
        double e_extract = 0.0, e_polar = 0.0, e_binom = 0.0, e_comp = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const int n = 1 + static_cast<int>(rng.next() % 4);
            const int din = 1 + static_cast<int>(rng.next() % 3), dout = 1 + static_cast<int>(rng.next() % 3);
            // extraction round trip
            const Jet J = random_jet(rng, n, din, dout);
            const Jet E = extract_components([&J](const Vec& x) { return J.eval(x); }, n, din, dout);
            for (int k = 0; k <= n; ++k)
                e_extract = std::max(e_extract, (E.component(k).coeffs() - J.component(k).coeffs()).norm() /
                                                    std::max(1.0, J.component(k).coeffs().norm()));
            // polarization on the diagonal
            const auto F = random_form(rng, n, din, dout);
            const Vec xi = rng.normal_vector(din), eta = rng.normal_vector(din);
            const std::vector<Vec> diag(n, xi);
            e_polar = std::max(e_polar, rel(polarize([&F](const Vec& x) { return F.eval(x); }, n, diag), F.eval(xi)));
            // binomial identity
            Vec sum = Vec::Zero(dout);
            for (int j = 0; j <= n; ++j) sum += static_cast<double>(binomial(n, j)) * binomial_expand(F, j)(xi, eta);
            e_binom = std::max(e_binom, rel(sum, F.eval(xi + eta)));
            // truncated composition against series expansion
            const int dmid = 1 + static_cast<int>(rng.next() % 3);
            const Jet outer = random_jet(rng, 1 + static_cast<int>(rng.next() % 3), dmid, dout);
            const Jet inner = random_jet(rng, n, din, dmid);
            const Jet C = compose_truncate(outer, inner, n);
            std::vector<Vec> y;
            for (int j = 0; j <= n; ++j) y.push_back(inner.component(j).eval(xi) / factorial(j));
            for (int m = 0; m <= n; ++m)
                e_comp = std::max(e_comp, rel(C.component(m).eval(xi) / factorial(m), series_coefficient(outer, y, m)));
        }
        const double worst = std::max({e_extract, e_polar, e_binom, e_comp});
        std::ostringstream d;
        d << "extract " << fmt("%.1e", e_extract) << ", polar " << fmt("%.1e", e_polar) << ", binom "
          << fmt("%.1e", e_binom) << ", compose " << fmt("%.1e", e_comp) << " (<= 1e-10)";
        return Outcome{worst <= 1e-10, d.str()};
    });

    criterion(4, "chart derivative consistency", 120, [] {
        // |M(p + h) - M(p) - h M'(p)| ~ h^(1 + eps) at least.
        const auto slope_for = [](const ManifoldChart& M, double p) {
            const Vec pv = Vec::Constant(1, p), e = Vec::Ones(1);
            const Vec m0 = M(pv), d = M.derivative(pv, e);
            std::vector<double> hs = geometric(1e-3, 1e-1, 10), rs;
            for (double h : hs) rs.push_back((M(pv + h * e) - m0 - h * d).norm());
            return loglog_slope(hs, rs);
        };
        const auto sp = sell_problem({});
        const auto sl = gap_ladder(sp.A, sp.L, 2);
        const ManifoldChart ms(sp, 1, sl.level(1).theta, sell_solver());
        const auto rp = rds_demo_problem();
        const auto rl = gap_ladder(rp.A, rp.L, 2);
        const ManifoldChart mr(rp, 1, rl.level(1).theta, rds_solver());
        const double s1 = slope_for(ms, 0.1), s2 = slope_for(mr, 0.2);
        const double need_s = 1.0 + sl.epsilon - 0.1, need_r = 1.0 + rl.epsilon - 0.1;
        return Outcome{s1 >= need_s && s2 >= need_r, "slopes sell " + fmt("%.2f", s1) + ", rds " + fmt("%.2f", s2) +
                                                         " (>= " + fmt("%.2f", need_s) + ")"};
    });

    criterion(5, "order-2 jet prediction (Sell)", 120, [] {
        const auto prob = sell_problem({});
        const JetEngine eng(prob, gap_ladder(prob.A, prob.L, 2), sell_solver());
        const auto pr = jet_prediction(eng, anchored_pairs(0.095, 1e-3, 1e-1, 12), 2, 2);
        return Outcome{pr.slope >= 2.05, "slope " + fmt("%.2f", pr.slope) + " (>= 2.05)"};
    });

    criterion(6, "compatibility scaling", 600, [] {
        std::ostringstream d;
        bool ok = true;
        {
            const auto prob = sell_problem({});
            const JetEngine eng(prob, gap_ladder(prob.A, prob.L, 2), sell_solver());
            CompatOptions co;
            co.alpha = eng.ladder().epsilon;
            const auto r = manifold_compat_check(eng, anchored_pairs(0.095, 1e-3, 1e-1, 12), 2, 2, co);
            ok = ok && r.pass && r.pairs.size() >= 10;
            d << "sell n=2 " << fmt("%.2f", r.slope) << "/" << fmt("%.2f", r.threshold);
        }
        {
            const auto prob = rds_demo_problem();
            const JetEngine eng(prob, gap_ladder(prob.A, prob.L, 2), rds_solver());
            CompatOptions co;
            co.alpha = eng.ladder().epsilon;
            const auto r = manifold_compat_check(eng, anchored_pairs(0.2, 1e-3, 1e-1, 10), 2, 2, co);
            ok = ok && r.pass && r.pairs.size() >= 10;
            d << ", rds n=2 " << fmt("%.2f", r.slope) << "/" << fmt("%.2f", r.threshold);
        }
        {
            SellOptions so;
            so.K = 10;
            const auto prob = sell_problem(so);
            const JetEngine eng(prob, gap_ladder(prob.A, prob.L, 3), sell_solver(0.005));
            CompatOptions co;
            co.alpha = eng.ladder().epsilon;
            co.slack = 0.2;
            const auto r = manifold_compat_check(eng, anchored_pairs(0.095, 1e-3, 1e-1, 12), 3, 3, co);
            ok = ok && r.pass && r.pairs.size() >= 10;
            d << ", sell n=3 " << fmt("%.2f", r.slope) << "/" << fmt("%.2f", r.threshold);
        }
        return Outcome{ok, d.str()};
    });

    criterion(7, "exponential tracking (RDS)", 300, [] {
        const auto prob = rds_demo_problem();
        const auto lad = gap_ladder(prob.A, prob.L, 2);
        const auto& lv1 = lad.level(1);
        double worst = 1e300;
        for (int s = 0; s < 10; ++s) {
            SplitMix64 rng(derive_seed(7, "track", static_cast<std::uint64_t>(s)));
            const Vec u0 = 0.3 * rng.normal_vector(prob.K()) / std::sqrt(static_cast<double>(prob.K()));
            const auto tr = tracking_solve(prob, lv1.N, lv1.theta, u0, rds_solver());
            worst = std::min(worst, tr.fit.ok ? tr.fit.rate : 0.0);
        }
        // Extended inertial form: start off the embedded level-1 manifold and fit the approach.
        auto& ext = rds_extension();
        const auto g = graph_of(*ext.M);
        Vec seed = ext.eng->base_point(Vec::Constant(1, 0.25), 2);
        seed[1] += 0.02;
        const double T1 = 1.0 + 10.0 / lv1.theta;
        ForwardOptions fo;
        fo.dt_out = 0.05;
        fo.tol = 1e-10;
        const auto u = extended_if_solve(prob, g, seed, T1, fo);
        const auto V = ext.eng->base_chart().trajectory(u.at(u.grid.nodes() - 1).head(1));
        std::vector<double> ts, ys;
        for (int j = 0; j < u.grid.nodes(); ++j) {
            const double t = u.grid.t(j);
            if (t < 1.0) continue;
            ts.push_back(t);
            ys.push_back((u.at(j) - V->V.sample(t - T1).head(2)).norm());
        }
        const auto fit = fit_decay_rate(ts, ys);
        const double ext_rate = fit.ok ? fit.rate : 0.0;
        const bool ok = worst >= 0.95 * lv1.theta && ext_rate >= 0.9 * lv1.theta;
        return Outcome{ok, "min rate " + fmt("%.3f", worst) + " (>= " + fmt("%.3f", 0.95 * lv1.theta) + "), extended " +
                               fmt("%.3f", ext_rate) + " (>= " + fmt("%.3f", 0.9 * lv1.theta) + ")"};
    });

    criterion(8, "extension anchoring and closeness", 300, [] {
        auto& ext = sell_extension();
        std::vector<Vec> probes;
        for (int i = 0; i <= 4; ++i) {
            const Vec q = ext.eng->base_point(Vec::Constant(1, 0.05 + 0.025 * i), 2);
            const Mat& T = ext.store.samples()[ext.store.nearest(q)].tangent;
            const Vec nrm = (Vec(2) << -T(1, 0), T(0, 0)).finished().normalized();
            for (double s : {-0.2, -0.1, -0.05, -0.02, 0.0, 0.02, 0.05, 0.1, 0.2}) probes.push_back(q + s * nrm);
        }
        double anchor = 0.0;
        std::vector<double> c0, c1;
        for (double nu : {0.1, 0.05, 0.025}) {
            ExtensionConfig ec;
            ec.nu = nu;
            const ExtendedManifold M(ext.store, ext.top, ec);
            for (const auto& s : ext.store.samples())
                anchor = std::max(anchor, (M(s.q) - ext.eng->chart_value(s.p, 2)).norm());
            double g0 = 0.0, g1 = 0.0;
            const auto fm = [&M](const Vec& x) { return M(x); };
            const auto ft = [&M](const Vec& x) { return M.top_chart(x); };
            for (const auto& x : probes) {
                g0 = std::max(g0, (M(x) - M.top_chart(x)).norm());
                g1 = std::max(g1, (fd_jacobian(fm, x, 1e-4) - fd_jacobian(ft, x, 1e-4)).norm());
            }
            c0.push_back(g0);
            c1.push_back(g1);
        }
        const bool dec = c0[1] < c0[0] && c0[2] < c0[1] && c1[1] < c1[0] && c1[2] < c1[1];
        std::ostringstream d;
        d << "anchor " << fmt("%.1e", anchor) << " (<= 1e-8); C0 " << fmt("%.3g", c0[0]) << ">" << fmt("%.3g", c0[1])
          << ">" << fmt("%.3g", c0[2]) << "; C1 " << fmt("%.3g", c1[0]) << ">" << fmt("%.3g", c1[1]) << ">"
          << fmt("%.3g", c1[2]);
        return Outcome{anchor <= 1e-8 && dec, d.str()};
    });

    criterion(9, "modified-nonlinearity invariance", 180, [] {
        ForwardOptions fo;
        fo.dt_out = 0.05;
        fo.tol = 1e-10;
        auto& se = sell_extension();
        ExtensionConfig ec;
        ec.nu = 0.05;
        const ExtendedManifold ms(se.store, se.top, ec);
        const double ds = modified_invariance_defect(se.eng->problem(), graph_of(ms), se.eng->base_point(Vec::Constant(1, 0.1), 2),
                                                     10.0, fo);
        auto& re = rds_extension();
        const double dr = modified_invariance_defect(re.eng->problem(), graph_of(*re.M),
                                                     re.eng->base_point(Vec::Constant(1, 0.25), 2), 10.0, fo);
        return Outcome{ds <= 1e-6 && dr <= 1e-6,
                       "defect sell " + fmt("%.1e", ds) + ", rds " + fmt("%.1e", dr) + " (<= 1e-6)"};
    });

    criterion(10, "Sell closed forms", 60, [] {
        double defect = 0.0;
        for (int n = 1; n <= 5; ++n)
            for (int i = 0; i <= 500; ++i) defect = std::max(defect, std::abs(sell_explicit_defect(0.01 * i, n)));
        // C_n = C_{n-1}^2 / (2^n - 1) from integrating u_n^2 against the resonant exponential.
        const auto C = sell_constants(4);
        const std::vector<double> expected{1.0, 1.0, 1.0 / 3.0, 1.0 / 63.0, 1.0 / 59535.0};
        double cerr = 0.0;
        for (std::size_t i = 0; i < expected.size(); ++i) cerr = std::max(cerr, std::abs(C[i] - expected[i]));
        bool cert = true, probe = true;
        double min_resid = 1e300;
        for (int n = 1; n <= 3; ++n) {
            const auto oc = sell_c2_obstruction(n);
            cert = cert && oc.passes && oc.symbolic_coefficient == 0 && oc.forcing == 1 && oc.fit.residual >= 0.5;
            min_resid = std::min(min_resid, oc.fit.residual);
            probe = probe && sell_divided_differences(n).passes;
        }
        std::ostringstream d;
        d << "defect " << fmt("%.1e", defect) << ", constants " << fmt("%.1e", cerr) << ", obstruction residual >= "
          << fmt("%.3f", min_resid) << (cert ? " ok" : " FAILED") << ", divided differences" << (probe ? " ok" : " FAILED");
        return Outcome{defect <= 1e-10 && cerr <= 1e-10 && cert && probe, d.str()};
    });

    std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
