#include "imjet/perron.hpp"

#include "imjet/series.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <mutex>

namespace imjet {

namespace {

Vec embed_low(const Vec& p, int N, int K) {
    if (p.size() != N && p.size() != K)
        throw InputError("chart point must have N=" + std::to_string(N) + " or K=" + std::to_string(K) + " entries");
    Vec r = Vec::Zero(K);
    r.head(N) = p.head(N);
    return r;
}

void check_window(const SemilinearProblem& prob, int N, double theta, const char* what) {
    if (N < 1 || N >= prob.K()) throw InputError(std::string(what) + ": N out of range");
    if (!(prob.A.lambda(N) + prob.L < theta && theta < prob.A.lambda(N + 1) - prob.L))
        throw PreconditionError(std::string(what) + ": theta=" + std::to_string(theta) +
                                " outside (lambda_N + L, lambda_{N+1} - L)");
}

RowMat apply_rows(const Nonlinearity& F, const RowMat& u) {
    RowMat r(u.rows(), u.cols());
    for (Eigen::Index j = 0; j < u.rows(); ++j) r.row(j) = F.apply(u.row(j).transpose()).transpose();
    return r;
}

std::uint64_t fnv_mix(std::uint64_t h, const void* data, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace

PerronResult backward_fixed_point(const SemilinearProblem& prob, int N, double theta, const Vec& p,
                                  const TimeGrid& grid, const SolverOptions& opts) {
    check_window(prob, N, theta, "backward_fixed_point");
    const int K = prob.K();
    const Vec pN = embed_low(p, N, K);
    const GreenOperator T(prob.A, N, theta, grid);
    const RowMat Hp = homog_apply(prob.A, N, pN, grid).values;
    const Nonlinearity& F = *prob.F;
    auto G = [&](const RowMat& u) { return RowMat(T.apply(apply_rows(F, u)) + Hp); };
    PerronResult res;
    const RowMat u = fixed_point(G, Hp, weighted_row_scale(grid, theta), opts, res.stats, "backward_fixed_point");
    res.V = Trajectory(grid, u, theta);
    return res;
}

ManifoldChart::ManifoldChart(SemilinearProblem prob, int N, double theta, TimeGrid grid, SolverOptions opts)
    : prob_(std::move(prob)), N_(N), theta_(theta), grid_(grid), opts_(opts) {
    check_window(prob_, N, theta, "ManifoldChart");
    if (grid_.t_end() < -1e-12 || std::abs(grid_.t(grid_.nearest(0.0))) > 1e-9 * grid_.dt)
        throw InputError("ManifoldChart: grid must contain t = 0");
    std::uint64_t h = 1469598103934665603ULL;
    const std::string nm = prob_.F->name();
    h = fnv_mix(h, nm.data(), nm.size());
    const double vals[] = {theta, grid.t0, grid.dt, opts.tol, opts.tol_abs, prob_.L};
    h = fnv_mix(h, vals, sizeof vals);
    const int ints[] = {N, grid.intervals, prob_.K()};
    h = fnv_mix(h, ints, sizeof ints);
    hash_ = h;
}

ManifoldChart::ManifoldChart(SemilinearProblem prob, int N, double theta, SolverOptions opts)
    : ManifoldChart(prob, N, theta,
                    make_grid(prob.A, horizon_for(green_gap(prob.A, N, theta), opts), opts), opts) {}

Vec ManifoldChart::embed(const Vec& p) const { return embed_low(p, N_, K()); }

namespace {
std::string cache_key(std::uint64_t hash, const Vec& pN, int N) {
    std::string k(sizeof hash + sizeof(double) * static_cast<std::size_t>(N), '\0');
    std::memcpy(k.data(), &hash, sizeof hash);
    std::memcpy(k.data() + sizeof hash, pN.data(), sizeof(double) * static_cast<std::size_t>(N));
    return k;
}
} // namespace

std::shared_ptr<const PerronResult> ManifoldChart::trajectory(const Vec& p) const {
    const Vec pN = embed(p);
    const std::string key = cache_key(hash_, pN, N_);
    {
        std::shared_lock lock(mu_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    auto res = std::make_shared<const PerronResult>(backward_fixed_point(prob_, N_, theta_, pN, grid_, opts_));
    std::unique_lock lock(mu_);
    return cache_.emplace(key, std::move(res)).first->second;
}

std::shared_ptr<const JacobianField> ManifoldChart::jacobians(const Vec& p) const {
    const Vec pN = embed(p);
    const std::string key = cache_key(hash_, pN, N_);
    {
        std::shared_lock lock(mu_);
        auto it = jac_cache_.find(key);
        if (it != jac_cache_.end()) return it->second;
    }
    auto field = std::make_shared<const JacobianField>(*prob_.F, trajectory(pN)->V);
    std::unique_lock lock(mu_);
    return jac_cache_.emplace(key, std::move(field)).first->second;
}

Vec ManifoldChart::operator()(const Vec& p) const {
    const Vec v = trajectory(p)->V.at_zero();
    return v.tail(K() - N_);
}

Vec ManifoldChart::full_point(const Vec& p) const {
    Vec r = embed(p);
    r.tail(K() - N_) = (*this)(p);
    return r;
}

VariationalResult ManifoldChart::derivative_trajectory(const Vec& p, const Vec& xi) const {
    const auto jac = jacobians(p);
    return variational_solve(prob_, *jac, N_, theta_, grid_, RowMat(), embed(xi), opts_);
}

Vec ManifoldChart::derivative(const Vec& p, const Vec& xi) const {
    return derivative_trajectory(p, xi).v.at_zero().tail(K() - N_);
}

Mat ManifoldChart::jacobian(const Vec& p) const {
    Mat J(K() - N_, N_);
    for (int i = 0; i < N_; ++i) J.col(i) = derivative(p, Vec::Unit(N_, i));
    return J;
}

std::size_t ManifoldChart::cache_size() const {
    std::shared_lock lock(mu_);
    return cache_.size();
}

std::string ManifoldChart::cache_name(const Vec& p) const {
    const Vec pN = embed(p);
    const std::string key = cache_key(hash_, pN, N_);
    const std::uint64_t h = fnv_mix(1469598103934665603ULL, key.data(), key.size());
    char buf[40];
    std::snprintf(buf, sizeof buf, "%016llx-%016llx", static_cast<unsigned long long>(hash_),
                  static_cast<unsigned long long>(h));
    return buf;
}

void ManifoldChart::preload(const Vec& p, Trajectory V) const {
    const bool same_grid = V.grid.intervals == grid_.intervals && std::abs(V.grid.t0 - grid_.t0) <= 1e-12 * std::abs(grid_.t0) + 1e-14 &&
                           std::abs(V.grid.dt - grid_.dt) <= 1e-12 * grid_.dt;
    if (!same_grid || V.dim() != K()) throw InputError("ManifoldChart::preload: trajectory grid or size mismatch");
    V.grid = grid_;
    const Vec pN = embed(p);
    if ((V.at_zero().head(N_) - pN.head(N_)).norm() > 1e-12 * std::max(1.0, pN.norm()))
        throw InputError("ManifoldChart::preload: trajectory does not start from p");
    auto res = std::make_shared<PerronResult>();
    res->V = std::move(V);
    std::unique_lock lock(mu_);
    cache_.emplace(cache_key(hash_, pN, N_), std::move(res));
}

Vec first_derivative(const ManifoldChart& chart, const Vec& p, const Vec& xi) { return chart.derivative(p, xi); }

double lipschitz_probe(const std::function<Vec(const Vec&)>& chart, const std::vector<std::pair<Vec, Vec>>& pairs) {
    if (pairs.size() < 50) throw InputError("lipschitz_probe: at least 50 pairs required");
    double best = 0.0;
    for (const auto& [p, q] : pairs) {
        const double d = (p - q).norm();
        if (d == 0.0) throw InputError("lipschitz_probe: coincident pair");
        best = std::max(best, (chart(p) - chart(q)).norm() / d);
    }
    return best;
}

RateFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& y, double floor) {
    if (t.size() != y.size()) throw InputError("fit_decay_rate: size mismatch");
    double st = 0, sy = 0, stt = 0, sty = 0;
    int n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(y[i] > floor)) continue;
        const double ly = std::log(y[i]);
        st += t[i];
        sy += ly;
        stt += t[i] * t[i];
        sty += t[i] * ly;
        ++n;
    }
    RateFit f;
    f.samples = n;
    const double den = n * stt - st * st;
    if (n < 3 || !(den > 0.0)) return f;
    const double slope = (n * sty - st * sy) / den;
    f.rate = -slope;
    f.C = std::exp((sy - slope * st) / n);
    f.ok = true;
    return f;
}

nlohmann::json TrackingResult::to_json() const {
    return {{"theta", theta},        {"rate", fit.rate},         {"C", fit.C},
            {"samples", fit.samples}, {"window", {window_lo, window_hi}},
            {"iterations", stats.iterations}, {"contraction_ratio", stats.ratio}};
}

TrackingResult tracking_solve(const SemilinearProblem& prob, int N, double theta, const Vec& u0,
                              const SolverOptions& opts, const TrackingOptions& topts) {
    check_window(prob, N, theta, "tracking_solve");
    const int K = prob.K();
    if (u0.size() != K) throw InputError("tracking_solve: u0 must have K entries");
    const double T_plus = topts.T_plus > 0.0 ? topts.T_plus : 1.0 + 15.0 / theta;
    if (!(T_plus > topts.fit_start)) throw InputError("tracking_solve: T_plus must exceed the fit start");
    auto phi = topts.cutoff ? topts.cutoff : [](double t) { return smoothstep5(t); };
    auto dphi = topts.cutoff_deriv ? topts.cutoff_deriv : [](double t) { return smoothstep5_derivative(t); };

    const double T = horizon_for(green_gap(prob.A, N, theta), opts);
    const TimeGrid grid = make_grid(prob.A, T, opts, T_plus);
    ForwardOptions fo;
    fo.dt_out = grid.dt;
    const Trajectory u = forward_solve(prob, u0, grid.t_end() + grid.dt, fo);

    const int nodes = grid.nodes();
    RowMat phiu = RowMat::Zero(nodes, K), src = RowMat::Zero(nodes, K);
    for (int j = 0; j < nodes; ++j) {
        const double t = grid.t(j);
        if (t < -1e-12) continue;
        const Vec uj = u.sample(std::max(t, 0.0));
        const double ph = phi(t), dph = dphi(t);
        phiu.row(j) = (ph * uj).transpose();
        src.row(j) = (-ph * prob.F->apply(uj) - dph * uj).transpose();
    }
    const GreenOperator Tg(prob.A, N, theta, grid);
    auto G = [&](const RowMat& v) {
        RowMat r = src;
        for (int j = 0; j < nodes; ++j) r.row(j) += prob.F->apply((phiu.row(j) + v.row(j)).transpose()).transpose();
        return RowMat(Tg.apply(r));
    };
    TrackingResult res;
    const RowMat v = fixed_point(G, RowMat::Zero(nodes, K), weighted_row_scale(grid, theta), opts, res.stats,
                                 "tracking_solve");
    res.theta = theta;
    res.ubar = Trajectory(grid, RowMat(phiu + v), theta);
    const int j0 = grid.nearest(0.0);
    TimeGrid fg{0.0, grid.dt, grid.intervals - j0};
    res.u = Trajectory(fg, K);
    for (int j = j0; j < nodes; ++j) res.u.values.row(j - j0) = u.sample(std::max(grid.t(j), 0.0)).transpose();
    std::vector<double> ts, ys;
    for (int j = j0; j < nodes; ++j) {
        const double t = grid.t(j);
        if (t < topts.fit_start - 1e-12) continue;
        ts.push_back(t);
        ys.push_back(v.row(j).norm());
    }
    res.fit = fit_decay_rate(ts, ys);
    res.window_lo = topts.fit_start;
    res.window_hi = grid.t_end();
    return res;
}

void write_chart_csv(const ManifoldChart& chart, const std::vector<Vec>& points, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw InputError("write_chart_csv: cannot open " + path);
    os.precision(17);
    for (int i = 0; i < chart.N(); ++i) os << (i ? "," : "") << "p" << (i + 1);
    for (int i = chart.N(); i < chart.K(); ++i) os << ",M" << (i + 1);
    os << '\n';
    for (const auto& p : points) {
        const Vec q = chart.embed(p);
        const Vec m = chart(p);
        for (int i = 0; i < chart.N(); ++i) os << (i ? "," : "") << q[i];
        for (Eigen::Index i = 0; i < m.size(); ++i) os << ',' << m[i];
        os << '\n';
    }
}

} // namespace imjet
