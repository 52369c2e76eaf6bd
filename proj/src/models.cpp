#include "imjet/models.hpp"

#include "imjet/perron.hpp"
#include "imjet/series.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace imjet {

// ---------------------------------------------------------------------------
// Sell

namespace {

constexpr double kSellW = std::numbers::ln2;

Series series_of(const Vec& u, const Mat& c, const Mat& y, int order, int i) {
    Series s(order, u[i]);
    for (int k = 1; k <= order; ++k) s[k] = c(i, k - 1);
    for (int k = 0; k <= order; ++k) s.tangent(k) = y(i, k);
    return s;
}

void check_taylor_shapes(int K, const Vec& u, const Mat& c, const Mat& y, int order, const char* what) {
    if (order < 0 || order > Series::kMaxOrder) throw CapabilityError(std::string(what) + ": Taylor order out of range");
    if (u.size() != K || c.rows() != K || c.cols() < order || y.rows() != K || y.cols() < order + 1)
        throw InputError(std::string(what) + ": Taylor argument shapes");
}

/// chi(|x|) as a series; locally constant away from the transition band.
Series sell_cutoff_series(const Series& x) {
    const double r = std::abs(x[0]);
    if (r <= 0.5) return Series(x.order(), 1.0);
    if (r >= 2.0) return Series(x.order(), 0.0);
    return smoothstep_inf((1.0 / (2.0 * kSellW)) * ((-1.0) * log(abs(x)) + kSellW));
}

long long pow2(int k) { return 1LL << k; }

void check_sell_window(double p, double beta, const char* what) {
    if (!(std::abs(p) < beta)) throw DomainError(std::string(what) + ": |p| must be below beta");
}

} // namespace

double sell_cutoff(double r) {
    if (r <= 0.5) return 1.0;
    if (r >= 2.0) return 0.0;
    return smoothstep_inf((kSellW - std::log(r)) / (2.0 * kSellW));
}

double sell_cutoff_derivative(double r) {
    if (r <= 0.5 || r >= 2.0) return 0.0;
    return smoothstep_inf_derivative((kSellW - std::log(r)) / (2.0 * kSellW)) * (-1.0 / (2.0 * kSellW * r));
}

SellNonlinearity::SellNonlinearity(int K, bool cutoff, double L) : K_(K), cutoff_(cutoff), L_(L) {
    if (K < 2) throw InputError("SellNonlinearity: K must be >= 2");
    if (L < 0.0) throw InputError("SellNonlinearity: L must be nonnegative");
}

Vec SellNonlinearity::apply(const Vec& u) const {
    if (u.size() != K_) throw InputError("SellNonlinearity: dimension mismatch");
    const double chi = cutoff_ ? sell_cutoff(std::abs(u[0])) : 1.0;
    Vec r = Vec::Zero(K_);
    for (int n = 1; n < K_; ++n) r[n] = chi * u[n - 1] * u[n - 1];
    return r;
}

Mat SellNonlinearity::jacobian(const Vec& u) const {
    if (u.size() != K_) throw InputError("SellNonlinearity: dimension mismatch");
    const double r = std::abs(u[0]);
    const double chi = cutoff_ ? sell_cutoff(r) : 1.0;
    const double dchi = cutoff_ ? sell_cutoff_derivative(r) * (u[0] < 0.0 ? -1.0 : 1.0) : 0.0;
    Mat J = Mat::Zero(K_, K_);
    for (int n = 1; n < K_; ++n) {
        J(n, n - 1) += 2.0 * chi * u[n - 1];
        J(n, 0) += dchi * u[n - 1] * u[n - 1];
    }
    return J;
}

TaylorPair SellNonlinearity::taylor(const Vec& u, const Mat& c, const Mat& y, int order) const {
    check_taylor_shapes(K_, u, c, y, order, "SellNonlinearity");
    TaylorPair r{Mat::Zero(K_, order + 1), Mat::Zero(K_, order + 1)};
    const Series x0 = series_of(u, c, y, order, 0);
    const Series chi = cutoff_ ? sell_cutoff_series(x0) : Series(order, 1.0);
    Series prev = x0;
    for (int n = 1; n < K_; ++n) {
        const Series cur = series_of(u, c, y, order, n);
        const Series fn = chi * (prev * prev);
        for (int k = 0; k <= order; ++k) {
            r.value(n, k) = fn[k];
            r.tangent(n, k) = fn.tangent(k);
        }
        prev = cur;
    }
    return r;
}

SpectralOperator sell_operator(int K, bool shifted) {
    if (K < 2) throw InputError("sell_operator: K must be >= 2");
    if (!shifted) return SpectralOperator::powers_of_two(K);
    std::vector<double> lam;
    for (int n = 1; n <= K; ++n) lam.push_back(static_cast<double>(pow2(n) - 1));
    return SpectralOperator(lam, "2^n-1");
}

SemilinearProblem sell_problem(const SellOptions& opts) {
    if (opts.sign != 1 && opts.sign != -1) throw InputError("sell_problem: sign must be +1 or -1");
    if (!(opts.beta > 0.0 && opts.beta < 0.5)) throw InputError("sell_problem: beta must lie in (0, 0.5)");
    return SemilinearProblem(sell_operator(opts.K, opts.shifted),
                             std::make_shared<SellNonlinearity>(opts.K, opts.cutoff, opts.L), opts.L);
}

Vec sell_rhs(const Vec& u) {
    Vec r = Vec::Zero(u.size());
    for (Eigen::Index n = 1; n < u.size(); ++n) r[n] = u[n - 1] * u[n - 1];
    return r;
}

std::vector<double> sell_constants(int n_max) {
    if (n_max < 0 || n_max > 8) throw InputError("sell_constants: n_max must lie in [0, 8]");
    // u_n = g_n(t) e^{-lambda_n t}; since 2 lambda_n = lambda_{n+1}, g_{n+1}' = g_n^2 with g_{n+1}(0) = 0.
    std::vector<double> C{1.0};
    std::vector<double> g{1.0};
    for (int n = 1; n <= n_max; ++n) {
        std::vector<double> sq(2 * g.size() - 1, 0.0);
        for (std::size_t i = 0; i < g.size(); ++i)
            for (std::size_t j = 0; j < g.size(); ++j) sq[i + j] += g[i] * g[j];
        std::vector<double> next(sq.size() + 1, 0.0);
        for (std::size_t i = 0; i < sq.size(); ++i) next[i + 1] = sq[i] / static_cast<double>(i + 1);
        const std::size_t deg = static_cast<std::size_t>(pow2(n) - 1);
        for (std::size_t i = 0; i < next.size(); ++i)
            if (i != deg && next[i] != 0.0) throw SolverError("sell_constants: integrated profile is not a monomial");
        C.push_back(next[deg]);
        g = std::move(next);
    }
    return C;
}

double sell_explicit(double t, int n) {
    if (n < 1 || n > 9) throw InputError("sell_explicit: component must lie in [1, 9]");
    if (n == 1) return std::exp(-t);
    const auto C = sell_constants(n - 1);
    const double m = static_cast<double>(pow2(n - 1));
    return C[static_cast<std::size_t>(n - 1)] * std::pow(t, m - 1.0) * std::exp(-m * t);
}

double sell_explicit_defect(double t, int n) {
    if (n < 1 || n > 9) throw InputError("sell_explicit_defect: component must lie in [1, 9]");
    const auto C = sell_constants(std::max(n - 1, 0));
    auto component = [&](int k) {
        const Series T = Series::variable(1, t);
        const double m = static_cast<double>(pow2(k - 1));
        Series r = exp(-m * T);
        if (k == 1) return r;
        for (long long i = 0; i < pow2(k - 1) - 1; ++i) r = r * T;
        return C[static_cast<std::size_t>(k - 1)] * r;
    };
    const Series un = component(n);
    const double lam = static_cast<double>(pow2(n - 1));
    double d = un[1] + lam * un[0];
    if (n >= 2) {
        const Series up = component(n - 1);
        d -= up[0] * up[0];
    }
    return d;
}

double sell_manifold_chart(double p, int n, double beta) {
    if (n < 1 || n > 9) throw InputError("sell_manifold_chart: component must lie in [1, 9]");
    check_sell_window(p, beta, "sell_manifold_chart");
    if (n == 1) return p;
    if (p == 0.0) return 0.0;
    const auto C = sell_constants(n - 1);
    const double m = static_cast<double>(pow2(n - 1));
    const double a = std::abs(p);
    return C[static_cast<std::size_t>(n - 1)] * std::pow(a, m) * std::pow(std::log(1.0 / a), m - 1.0);
}

double sell_chart_invariance_defect(double p, int K, double horizon, double beta) {
    Vec u0(K);
    for (int n = 1; n <= K; ++n) u0[n - 1] = sell_manifold_chart(p, n, beta);
    ForwardOptions fo;
    fo.tol = 1e-13;
    fo.dt_out = 0.01;
    const Trajectory u = forward_solve(sell_operator(K).eigenvalues(), sell_rhs, u0, horizon, fo);
    double worst = 0.0;
    for (int j = 0; j < u.grid.nodes(); ++j)
        for (int n = 2; n <= K; ++n)
            worst = std::max(worst, std::abs(u.values(j, n - 1) - sell_manifold_chart(u.values(j, 0), n, beta)));
    return worst;
}

QuadraticFit fit_quadratic_coefficient(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.empty()) throw InputError("fit_quadratic_coefficient: need matching nonempty samples");
    std::vector<double> rho;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0 || y[i] == 0.0) continue;
        rho.push_back(y[i] / x[i]); // |x - c y| / |x| = |1 - c rho|
    }
    if (rho.empty()) throw InputError("fit_quadratic_coefficient: all samples degenerate");
    QuadraticFit f;
    const auto [lo, hi] = std::minmax_element(rho.begin(), rho.end());
    auto residual = [&](double c) {
        double r = 0.0;
        for (double q : rho) r = std::max(r, std::abs(1.0 - c * q));
        return r;
    };
    if (*lo > 0.0 || *hi < 0.0) {
        f.c = 2.0 / (*hi + *lo);
    } else {
        f.c = 0.0;
    }
    f.residual = residual(f.c);
    f.grid_min_residual = f.residual;
    if (f.c != 0.0) {
        for (int i = 0; i <= 400; ++i) {
            const double c = f.c * std::pow(10.0, -2.0 + 4.0 * i / 400.0);
            f.grid_min_residual = std::min(f.grid_min_residual, residual(c));
        }
    }
    return f;
}

nlohmann::json ObstructionCertificate::to_json() const {
    return {{"n", n},
            {"symbolic_coefficient", symbolic_coefficient},
            {"forcing", forcing},
            {"best_c", fit.c},
            {"relative_residual", fit.residual},
            {"grid_min_residual", fit.grid_min_residual},
            {"samples", samples},
            {"passes", passes}};
}

ObstructionCertificate sell_c2_obstruction(int n, int samples, double beta) {
    if (n < 1 || n > 7) throw InputError("sell_c2_obstruction: n must lie in [1, 7]");
    if (samples < 2) throw InputError("sell_c2_obstruction: need at least two samples");
    ObstructionCertificate cert;
    cert.n = n;
    cert.symbolic_coefficient = -2 * pow2(n - 1) + pow2(n);
    cert.forcing = 1;
    std::vector<double> x, y;
    const double lo = std::log(1e-8), hi = std::log(0.999 * beta);
    for (int i = 0; i < samples; ++i) {
        const double p = std::exp(lo + (hi - lo) * i / (samples - 1));
        const double mn = sell_manifold_chart(p, n, beta);
        const double xi = sell_manifold_chart(p, n + 1, beta);
        const double yi = mn * mn;
        if (!(std::abs(yi) > 1e-300) || !(std::abs(xi) > 1e-300)) continue;
        x.push_back(xi);
        y.push_back(yi);
    }
    cert.samples = static_cast<int>(x.size());
    cert.fit = fit_quadratic_coefficient(x, y);
    cert.passes = cert.symbolic_coefficient == 0 && cert.forcing == 1 && cert.fit.grid_min_residual >= 0.5 &&
                  cert.fit.residual >= 0.5;
    return cert;
}

QuadraticFit sell_shifted_contrast(int K, double T, int samples) {
    SellOptions so;
    so.K = K;
    so.cutoff = false;
    so.shifted = true;
    const auto prob = sell_problem(so);
    SolverOptions opts;
    opts.T = T;
    opts.tol = 1e-14;
    const double theta = 0.5 * (prob.A.lambda(1) + prob.A.lambda(2));
    const TimeGrid grid = make_grid(prob.A, T, opts);
    std::vector<double> x, y;
    for (int i = 0; i < samples; ++i) {
        const double p = std::exp(std::log(1e-3) + (std::log(0.2) - std::log(1e-3)) * i / std::max(1, samples - 1));
        Vec pv = Vec::Zero(K);
        pv[0] = p;
        const auto res = backward_fixed_point(prob, 1, theta, pv, grid, opts);
        x.push_back(res.V.at_zero()[1]);
        y.push_back(p * p);
    }
    return fit_quadratic_coefficient(x, y);
}

Vec sell_extended_chart(const Vec& p, int n, int K, double beta) {
    if (n < 1 || n >= K) throw InputError("sell_extended_chart: need 1 <= n < K");
    if (p.size() != n && p.size() != K) throw InputError("sell_extended_chart: p must have n or K entries");
    if (K > 9) throw CapabilityError("sell_extended_chart: closed forms available for K <= 9");
    Vec r = Vec::Zero(K);
    for (int m = n + 1; m <= K; ++m) r[m - 1] = sell_manifold_chart(p[0], m, beta);
    return r;
}

Vec sell_modified_rhs(const Vec& u, int n, double beta) {
    const int K = static_cast<int>(u.size());
    if (n < 1 || n >= K) throw InputError("sell_modified_rhs: need 1 <= n < K");
    if (K > 10) throw CapabilityError("sell_modified_rhs: closed forms available for K <= 10");
    Vec r = Vec::Zero(K);
    for (int m = 2; m <= n; ++m) r[m - 1] = u[m - 2] * u[m - 2];
    for (int m = n + 1; m <= K; ++m) {
        const double prev = sell_manifold_chart(u[0], m - 1, beta);
        r[m - 1] = prev * prev;
    }
    return r;
}

double sell_extended_invariance_defect(const Vec& p, int n, int K, double horizon, double beta) {
    Vec u0 = sell_extended_chart(p, n, K, beta);
    u0.head(n) = p.head(n);
    ForwardOptions fo;
    fo.tol = 1e-13;
    fo.dt_out = 0.01;
    const Trajectory u = forward_solve(
        sell_operator(K).eigenvalues(), [n, beta](const Vec& v) { return sell_modified_rhs(v, n, beta); }, u0, horizon,
        fo);
    double worst = 0.0;
    for (int j = 0; j < u.grid.nodes(); ++j) {
        const Vec uj = u.at(j);
        const Vec m = sell_extended_chart(uj, n, K, beta);
        worst = std::max(worst, (uj.tail(K - n) - m.tail(K - n)).lpNorm<Eigen::Infinity>());
    }
    return worst;
}

nlohmann::json DividedDifferenceProbe::to_json() const {
    nlohmann::json orders = nlohmann::json::array();
    for (std::size_t k = 0; k < values.size(); ++k)
        orders.push_back({{"order", k + 1}, {"values", values[k]}, {"bounded", static_cast<bool>(bounded[k])}});
    return {{"n", n}, {"steps", steps}, {"orders", orders}, {"passes", passes}};
}

DividedDifferenceProbe sell_divided_differences(int n, double h_min, double h_max, int count, double beta) {
    if (n < 1 || n > 4) throw InputError("sell_divided_differences: n must lie in [1, 4]");
    if (!(h_min > 0.0 && h_max > h_min) || count < 3) throw InputError("sell_divided_differences: bad step range");
    const int top = static_cast<int>(pow2(n));
    if (!(top * h_max < beta)) throw DomainError("sell_divided_differences: stencil leaves the window");
    DividedDifferenceProbe probe;
    probe.n = n;
    for (int i = 0; i < count; ++i)
        probe.steps.push_back(std::exp(std::log(h_max) + (std::log(h_min) - std::log(h_max)) * i / (count - 1)));
    for (int k = 1; k <= top; ++k) {
        std::vector<double> row;
        for (double h : probe.steps) {
            double s = 0.0, binom = 1.0;
            for (int j = 0; j <= k; ++j) {
                const double sign = ((k - j) % 2) ? -1.0 : 1.0;
                s += sign * binom * sell_manifold_chart(j * h, n + 1, beta);
                binom = binom * (k - j) / (j + 1);
            }
            row.push_back(std::abs(s) / std::pow(h, k));
        }
        // Over the finer half of the sweep (the asymptotic regime): bounded orders are
        // non-increasing; the critical order increases and at least doubles overall.
        bool grows = row.back() >= 2.0 * row.front();
        bool bounded = true;
        for (int i = count / 2; i + 1 < count; ++i) {
            grows = grows && row[i + 1] >= row[i];
            bounded = bounded && row[i + 1] <= row[i];
        }
        probe.bounded.push_back(bounded);
        probe.values.push_back(std::move(row));
        if (k == top) {
            bool ok = grows;
            for (int j = 0; j + 1 < top; ++j) ok = ok && probe.bounded[j];
            probe.passes = ok;
        }
    }
    return probe;
}

// ---------------------------------------------------------------------------
// Reaction-diffusion

namespace {

double poly_eval(const std::vector<double>& c, double u) {
    double r = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * u + *it;
    return r;
}

double poly_deriv(const std::vector<double>& c, double u) {
    double r = 0.0;
    for (std::size_t i = c.size(); i-- > 1;) r = r * u + static_cast<double>(i) * c[i];
    return r;
}

Series poly_eval(const std::vector<double>& c, const Series& u) {
    Series r(u.order(), 0.0);
    for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * u + *it;
    return r;
}

void validate_rds(const RdsOptions& o) {
    if (!(o.a > 0.0)) throw InputError("rds: diffusion a must be positive");
    if (o.f_coeffs.empty() || o.f_coeffs[0] != 0.0) throw InputError("rds: reaction must satisfy f(0) = 0");
    if (o.K < 1) throw InputError("rds: K must be positive");
    if (o.colloc_factor < 2) throw InputError("rds: K too small for dealiasing (collocation factor must be >= 2)");
    if (o.cutoff && !(o.R > 0.0 && o.w > 0.0)) throw InputError("rds: cutoff needs R > 0 and w > 0");
    if (o.L < 0.0) throw InputError("rds: L must be nonnegative");
}

} // namespace

RdsNonlinearity::RdsNonlinearity(const RdsOptions& opts) : K_(opts.K), opts_(opts) {
    validate_rds(opts);
    const int M = opts.colloc_factor * opts.K;
    S_.resize(M, K_);
    const double h = std::numbers::pi / (M + 1);
    for (int j = 0; j < M; ++j)
        for (int k = 0; k < K_; ++k) S_(j, k) = std::sin((k + 1) * (j + 1) * h) / std::sqrt(std::numbers::pi);
    proj_ = (2.0 * h) * S_.transpose();
    L_ = opts.L > 0.0 ? opts.L : rds_certified_lipschitz(opts);
}

double RdsNonlinearity::reaction(double u) const {
    const double f = poly_eval(opts_.f_coeffs, u);
    if (!opts_.cutoff) return f;
    return f * (1.0 - smoothstep_inf((std::abs(u) - opts_.R) / opts_.w));
}

double RdsNonlinearity::reaction_derivative(double u) const {
    const double df = poly_deriv(opts_.f_coeffs, u);
    if (!opts_.cutoff) return df;
    const double y = (std::abs(u) - opts_.R) / opts_.w;
    const double g = 1.0 - smoothstep_inf(y);
    const double dg = -smoothstep_inf_derivative(y) * (u < 0.0 ? -1.0 : 1.0) / opts_.w;
    return df * g + poly_eval(opts_.f_coeffs, u) * dg;
}

Vec RdsNonlinearity::apply(const Vec& u) const {
    if (u.size() != K_) throw InputError("RdsNonlinearity: dimension mismatch");
    Vec phys = S_ * u;
    for (Eigen::Index j = 0; j < phys.size(); ++j) phys[j] = reaction(phys[j]);
    return -(proj_ * phys);
}

Mat RdsNonlinearity::jacobian(const Vec& u) const {
    if (u.size() != K_) throw InputError("RdsNonlinearity: dimension mismatch");
    const Vec phys = S_ * u;
    Mat DS = S_;
    for (Eigen::Index j = 0; j < phys.size(); ++j) DS.row(j) *= reaction_derivative(phys[j]);
    return -(proj_ * DS);
}

TaylorPair RdsNonlinearity::taylor(const Vec& u, const Mat& c, const Mat& y, int order) const {
    check_taylor_shapes(K_, u, c, y, order, "RdsNonlinearity");
    const int M = points();
    const Vec pu = S_ * u;
    const Mat pc = S_ * c.leftCols(order);
    const Mat py = S_ * y.leftCols(order + 1);
    Mat val(M, order + 1), tan(M, order + 1);
    for (int j = 0; j < M; ++j) {
        Series x(order, pu[j]);
        for (int k = 1; k <= order; ++k) x[k] = pc(j, k - 1);
        for (int k = 0; k <= order; ++k) x.tangent(k) = py(j, k);
        Series f = poly_eval(opts_.f_coeffs, x);
        if (opts_.cutoff) {
            const double r = std::abs(pu[j]);
            if (r >= opts_.R + opts_.w) {
                f = Series(order, 0.0);
            } else if (r > opts_.R) {
                f = f * (-1.0 * smoothstep_inf((1.0 / opts_.w) * (abs(x) + (-opts_.R))) + 1.0);
            }
        }
        for (int k = 0; k <= order; ++k) {
            val(j, k) = f[k];
            tan(j, k) = f.tangent(k);
        }
    }
    return {-(proj_ * val), -(proj_ * tan)};
}

double rds_certified_lipschitz(const RdsOptions& opts) {
    validate_rds(opts);
    if (!opts.cutoff) {
        for (std::size_t i = 2; i < opts.f_coeffs.size(); ++i)
            if (opts.f_coeffs[i] != 0.0)
                throw InputError("rds: nonlinear reaction without cutoff needs an explicit L");
        return opts.f_coeffs.size() > 1 ? std::abs(opts.f_coeffs[1]) : 0.0;
    }
    RdsOptions probe = opts;
    probe.L = 1.0; // placeholder so the constructor does not recurse
    const RdsNonlinearity f(probe);
    const double span = opts.R + opts.w;
    const int n = 20000;
    double best = 0.0;
    for (int i = 0; i <= n; ++i) best = std::max(best, std::abs(f.reaction_derivative(-span + 2.0 * span * i / n)));
    return 1.1 * best;
}

SemilinearProblem rds_build(const RdsOptions& opts) {
    auto F = std::make_shared<RdsNonlinearity>(opts);
    const double L = F->lipschitz();
    return SemilinearProblem(SpectralOperator::squares(opts.K, opts.a), F, L);
}

Vec rds_quadrature_projection(const RdsOptions& opts, const Vec& u, int panels) {
    RdsOptions probe = opts;
    probe.L = 1.0;
    const RdsNonlinearity f(probe);
    if (u.size() != opts.K) throw InputError("rds_quadrature_projection: dimension mismatch");
    static const double xg[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                 0.9061798459386640};
    static const double wg[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                                 0.2369268850561891};
    const double pi = std::numbers::pi, h = 2.0 * pi / panels, rs = 1.0 / std::sqrt(pi);
    Vec out = Vec::Zero(opts.K);
    for (int p = 0; p < panels; ++p) {
        const double mid = -pi + (p + 0.5) * h;
        for (int q = 0; q < 5; ++q) {
            const double x = mid + 0.5 * h * xg[q];
            double ux = 0.0;
            for (int k = 0; k < opts.K; ++k) ux += u[k] * std::sin((k + 1) * x) * rs;
            const double fx = f.reaction(ux) * 0.5 * h * wg[q];
            for (int k = 0; k < opts.K; ++k) out[k] -= fx * std::sin((k + 1) * x) * rs;
        }
    }
    return out;
}

} // namespace imjet
