#include "imjet/jets_manifold.hpp"

#include "imjet/jetcalc.hpp"
#include "imjet/multiindex.hpp"
#include "imjet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace imjet {

Vec truncated_forcing(const Nonlinearity& F, const Vec& u, const std::vector<Vec>& v, const std::vector<Vec>& w, int m) {
    const int K = F.dim();
    if (m < 1) throw InputError("truncated_forcing: degree must be >= 1");
    if (static_cast<int>(w.size()) < m - 1) throw PreconditionError("truncated_forcing: missing lower jets of W");
    Mat c = Mat::Zero(K, m);
    for (int i = 1; i <= std::min<int>(static_cast<int>(v.size()), m); ++i) c.col(i - 1) = v[i - 1] / factorial(i);
    Mat y = Mat::Zero(K, m + 1);
    for (int i = 1; i < m; ++i) y.col(i) = w[i - 1] / factorial(i) - c.col(i - 1);
    y.col(m) = -c.col(m - 1);
    const TaylorPair t = F.taylor(u, c, y, m);
    return factorial(m) * (t.value.col(m) + t.tangent.col(m));
}

namespace {

double jet_horizon(const SemilinearProblem& prob, const GapLadder& ladder, const SolverOptions& opts) {
    if (opts.T > 0.0) return opts.T;
    double T = 0.0;
    for (int k = 1; k <= ladder.depth(); ++k)
        for (int m = 1; m <= (k == 1 ? 1 : k); ++m)
            T = std::max(T, horizon_for(green_gap(prob.A, ladder.level(k).N, ladder.jet_exponent(k, m)), opts));
    return T;
}

Vec embed_dir(const Vec& xi, int N, int K) {
    if (xi.size() < N) throw InputError("direction has fewer entries than the level dimension");
    Vec r = Vec::Zero(K);
    r.head(N) = xi.head(N);
    return r;
}

} // namespace

JetEngine::JetEngine(SemilinearProblem prob, GapLadder ladder, SolverOptions opts)
    : prob_(std::move(prob)), ladder_(std::move(ladder)), opts_(opts) {
    if (ladder_.depth() < 1) throw InputError("JetEngine: empty ladder");
    if (ladder_.levels.back().N >= prob_.K()) throw InputError("JetEngine: ladder exceeds the truncation");
    grid_ = make_grid(prob_.A, jet_horizon(prob_, ladder_, opts_), opts_);
    base_ = std::make_unique<ManifoldChart>(prob_, ladder_.level(1).N, ladder_.level(1).theta, grid_, opts_);
}

Vec JetEngine::base_point(const Vec& p, int level) const {
    return base_->trajectory(p)->V.at_zero().head(N(level));
}

Vec JetEngine::chart_value(const Vec& p, int level) const {
    const int n = N(level);
    return base_->trajectory(p)->V.at_zero().tail(prob_.K() - n);
}

DirectionalJets JetEngine::directional(const Vec& p, const Vec& xi, int level, int order) const {
    if (level < 1 || level > ladder_.depth()) throw CapabilityError("JetEngine: level beyond the ladder");
    if (order < 1 || order > level) throw CapabilityError("JetEngine: order must lie in [1, level]");
    const int K = prob_.K();
    const auto V = base_->trajectory(p);
    const auto jac = base_->jacobians(p);
    const double xn = xi.head(std::min<Eigen::Index>(xi.size(), N(level))).norm();
    DirectionalJets out;
    out.W.resize(static_cast<std::size_t>(level));
    out.growth.resize(static_cast<std::size_t>(level));
    const int nodes = grid_.nodes();
    for (int k = 1; k <= level; ++k) {
        const int Nk = N(k);
        const int top = k < level ? k : order;
        auto& Wk = out.W[static_cast<std::size_t>(k - 1)];
        for (int m = 1; m <= top; ++m) {
            const double ex = ladder_.jet_exponent(k, m);
            VariationalResult r;
            if (m == 1) {
                r = variational_solve(prob_, *jac, Nk, ex, grid_, RowMat(), embed_dir(xi, Nk, K), opts_);
            } else {
                const auto& Wlow = out.W[static_cast<std::size_t>(k - 2)];
                RowMat h(nodes, K);
                std::vector<Vec> v(Wlow.size()), w(static_cast<std::size_t>(m - 1));
                for (int j = 0; j < nodes; ++j) {
                    for (std::size_t i = 0; i < Wlow.size(); ++i) v[i] = Wlow[i].at(j);
                    for (int i = 0; i < m - 1; ++i) w[static_cast<std::size_t>(i)] = Wk[static_cast<std::size_t>(i)].at(j);
                    h.row(j) = truncated_forcing(*prob_.F, V->V.at(j), v, w, m).transpose();
                }
                r = variational_solve(prob_, *jac, Nk, ex, grid_, h, Vec::Zero(K), opts_);
            }
            out.iterations += r.stats.iterations;
            out.growth[static_cast<std::size_t>(k - 1)].push_back(
                xn > 0.0 ? weighted_l2_norm(r.v, ex) / std::pow(xn, m) : 0.0);
            Wk.push_back(std::move(r.v));
        }
    }
    return out;
}

Trajectory JetEngine::second_jet(const Vec& p, const Vec& xi, int level) const {
    if (level < 2) throw CapabilityError("second_jet: needs a ladder level >= 2");
    return directional(p, xi, level, 2).W[static_cast<std::size_t>(level - 1)][1];
}

SymMultiForm JetEngine::higher_jet(const Vec& p, int level, int k) const { return jet(p, level, k)->jet.component(k); }

std::shared_ptr<const JetReport> JetEngine::jet(const Vec& p, int level, int order) const {
    if (level < 1 || level > ladder_.depth()) throw CapabilityError("JetEngine: level beyond the ladder");
    if (order < 1 || order > level)
        throw CapabilityError("JetEngine: jet order " + std::to_string(order) + " exceeds ladder level " +
                              std::to_string(level));
    const int N1 = N(1);
    const Vec pN = base_->embed(p).head(N1);
    std::string key(sizeof(double) * static_cast<std::size_t>(N1) + 2 * sizeof(int), '\0');
    std::memcpy(key.data(), pN.data(), sizeof(double) * static_cast<std::size_t>(N1));
    std::memcpy(key.data() + sizeof(double) * N1, &level, sizeof(int));
    std::memcpy(key.data() + sizeof(double) * N1 + sizeof(int), &order, sizeof(int));
    {
        std::lock_guard lock(mu_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    const int K = prob_.K();
    const int n = N(level);
    const auto dirs = simplex_lattice(n, order);
    std::vector<Mat> vals(static_cast<std::size_t>(order), Mat(K - n, static_cast<Eigen::Index>(dirs.size())));
    auto rep = std::make_shared<JetReport>();
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        const auto d = directional(pN, dirs[i], level, order);
        for (int m = 1; m <= order; ++m)
            vals[static_cast<std::size_t>(m - 1)].col(static_cast<Eigen::Index>(i)) =
                d.W[static_cast<std::size_t>(level - 1)][static_cast<std::size_t>(m - 1)].at_zero().tail(K - n);
        for (const auto& g : d.growth)
            for (double x : g) rep->growth = std::max(rep->growth, x);
        rep->solves += level * (level - 1) / 2 + order;
    }
    std::vector<SymMultiForm> comps;
    comps.emplace_back(0, n, K - n, Mat(chart_value(pN, level)));
    for (int m = 1; m <= order; ++m) {
        const Mat& vm = vals[static_cast<std::size_t>(m - 1)];
        comps.push_back(fit_homogeneous(m, dirs, vm));
        const double scale = std::max(vm.cwiseAbs().maxCoeff(), 1e-300);
        for (std::size_t i = 0; i < dirs.size(); ++i)
            rep->fit_residual = std::max(
                rep->fit_residual,
                (comps.back().eval(dirs[i]) - vm.col(static_cast<Eigen::Index>(i))).cwiseAbs().maxCoeff() / scale);
    }
    rep->jet = Jet(std::move(comps));
    rep->directions = static_cast<int>(dirs.size());
    std::lock_guard lock(mu_);
    return cache_.emplace(key, std::move(rep)).first->second;
}

nlohmann::json CompatReport::to_json() const {
    nlohmann::json ps = nlohmann::json::array();
    for (const auto& c : pairs)
        ps.push_back({{"p", std::vector<double>(c.p.data(), c.p.data() + c.p.size())},
                      {"p1", std::vector<double>(c.p1.data(), c.p1.data() + c.p1.size())},
                      {"delta", c.delta_norm},
                      {"xi", c.xi_norm},
                      {"residual", c.residual}});
    return {{"level", level}, {"order", order}, {"alpha", alpha},       {"slope", slope},
            {"threshold", threshold}, {"pass", pass}, {"pairs", ps}};
}

namespace {
void check_pairs(const std::vector<double>& deltas, const char* what) {
    if (deltas.size() < 10) throw InputError(std::string(what) + ": at least 10 base pairs required");
    const auto [lo, hi] = std::minmax_element(deltas.begin(), deltas.end());
    if (!(*lo > 0.0) || *hi / *lo < std::pow(10.0, 1.5) * (1.0 - 1e-9))
        throw InputError(std::string(what) + ": pair separations must span 1.5 decades");
}
} // namespace

CompatReport manifold_compat_check(const JetEngine& engine, const std::vector<std::pair<Vec, Vec>>& base_pairs,
                                   int level, int order, const CompatOptions& opts) {
    CompatReport rep;
    rep.level = level;
    rep.order = order;
    rep.alpha = opts.alpha;
    rep.threshold = order + opts.alpha - opts.slack;
    std::vector<double> deltas, radii, residuals;
    for (const auto& [p, p1] : base_pairs) deltas.push_back((engine.base_point(p1, level) - engine.base_point(p, level)).norm());
    check_pairs(deltas, "manifold_compat_check");
    for (std::size_t i = 0; i < base_pairs.size(); ++i) {
        const auto& [p, p1] = base_pairs[i];
        const auto J = engine.jet(p, level, order);
        const auto J1 = engine.jet(p1, level, order);
        const Vec delta = engine.base_point(p1, level) - engine.base_point(p, level);
        SplitMix64 rng(derive_seed(opts.seed, "compat-probe", i));
        const Vec xi = opts.xi_scale * delta.norm() * rng.unit_vector(static_cast<int>(delta.size()));
        CompatPair cp{p, p1, delta.norm(), xi.norm(), compat_residual(J1->jet, J->jet, delta, xi)};
        radii.push_back(cp.delta_norm + cp.xi_norm);
        residuals.push_back(cp.residual);
        rep.pairs.push_back(std::move(cp));
    }
    rep.slope = loglog_slope(radii, residuals, 0.0);
    rep.pass = std::isfinite(rep.slope) && rep.slope >= rep.threshold;
    return rep;
}

nlohmann::json PredictionReport::to_json() const {
    return {{"deltas", deltas}, {"residuals", residuals}, {"slope", slope}};
}

PredictionReport jet_prediction(const JetEngine& engine, const std::vector<std::pair<Vec, Vec>>& base_pairs, int level,
                                int order) {
    PredictionReport rep;
    for (const auto& [p, p1] : base_pairs) {
        const auto J = engine.jet(p, level, order);
        const Vec delta = engine.base_point(p1, level) - engine.base_point(p, level);
        rep.deltas.push_back(delta.norm());
        rep.residuals.push_back((engine.chart_value(p1, level) - J->jet.eval(delta)).norm());
    }
    rep.slope = loglog_slope(rep.deltas, rep.residuals, 0.0);
    return rep;
}

} // namespace imjet
