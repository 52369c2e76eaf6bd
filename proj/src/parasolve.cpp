#include "imjet/parasolve.hpp"

#include "imjet/multiindex.hpp"
#include "imjet/jetcalc.hpp"
#include "imjet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace imjet {

namespace {

// sum_{k>=2} s_k z^{k-2} / k! with s_k = sign^k * (weight ? (k-1) : 1).
double phi_series(double z, double sign, bool weighted) {
    double term = 0.5, sum = 0.0; // z^0 / 2!
    for (int k = 2; k < 20; ++k) {
        sum += (weighted ? (k - 1) : 1) * term;
        term *= sign * z / (k + 1);
    }
    return sum;
}

// (1 - e^{-z}) / z
double phi1(double z) {
    if (z < 1e-4) return 1.0 - z / 2 + z * z / 6 - z * z * z / 24;
    return -std::expm1(-z) / z;
}

// (e^{-z} - 1 + z) / z^2
double phi2(double z) {
    if (z < 0.05) return phi_series(z, -1.0, false);
    return (std::expm1(-z) + z) / (z * z);
}

} // namespace

Mat Nonlinearity::jacobian(const Vec& u) const {
    const int K = dim();
    Mat J(K, K);
    const Mat c(K, 0);
    for (int i = 0; i < K; ++i) {
        Mat y = Mat::Zero(K, 1);
        y(i, 0) = 1.0;
        J.col(i) = taylor(u, c, y, 0).tangent.col(0);
    }
    return J;
}

SymMultiForm Nonlinearity::derivative_form(const Vec& u, int k) const {
    const int K = dim();
    if (k < 1) throw InputError("derivative_form: k must be >= 1");
    const auto dirs = simplex_lattice(K, k);
    Mat vals(K, static_cast<Eigen::Index>(dirs.size()));
    const Mat y = Mat::Zero(K, k + 1);
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        Mat c = Mat::Zero(K, k);
        c.col(0) = dirs[i];
        vals.col(static_cast<Eigen::Index>(i)) = factorial(k) * taylor(u, c, y, k).value.col(k);
    }
    return fit_homogeneous(k, dirs, vals);
}

TaylorPair ZeroNonlinearity::taylor(const Vec&, const Mat&, const Mat&, int order) const {
    return {Mat::Zero(K_, order + 1), Mat::Zero(K_, order + 1)};
}

AffineNonlinearity::AffineNonlinearity(Vec g, Mat B) : g_(std::move(g)), B_(std::move(B)) {
    if (B_.rows() != g_.size() || B_.cols() != g_.size()) throw InputError("AffineNonlinearity: B must be K x K");
}

std::shared_ptr<AffineNonlinearity> AffineNonlinearity::constant(Vec g) {
    const auto K = g.size();
    return std::make_shared<AffineNonlinearity>(std::move(g), Mat::Zero(K, K));
}

TaylorPair AffineNonlinearity::taylor(const Vec& u, const Mat& c, const Mat& y, int order) const {
    TaylorPair r{Mat::Zero(dim(), order + 1), Mat::Zero(dim(), order + 1)};
    r.value.col(0) = apply(u);
    for (int j = 1; j <= order; ++j) r.value.col(j) = B_ * c.col(j - 1);
    for (int j = 0; j <= order; ++j) r.tangent.col(j) = B_ * y.col(j);
    return r;
}

double AffineNonlinearity::lipschitz() const {
    if (B_.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Mat>(B_).singularValues()(0);
}

SemilinearProblem::SemilinearProblem(SpectralOperator op, NonlinearityPtr f, double lip)
    : A(std::move(op)), F(std::move(f)), L(lip) {
    if (!F) throw InputError("SemilinearProblem: null nonlinearity");
    if (F->dim() != A.size()) throw InputError("SemilinearProblem: nonlinearity dimension != truncation K");
    if (L < 0.0) throw InputError("SemilinearProblem: L must be nonnegative");
}

SemilinearProblem::SemilinearProblem(SpectralOperator op, NonlinearityPtr f)
    : SemilinearProblem(std::move(op), f, f ? f->lipschitz() : 0.0) {}

double green_gap(const SpectralOperator& A, int N, double theta) {
    const double lo = N >= 1 ? theta - A.lambda(N) : std::numeric_limits<double>::infinity();
    const double hi = N < A.size() ? A.lambda(N + 1) - theta : std::numeric_limits<double>::infinity();
    return std::min(lo, hi);
}

double horizon_for(double gap, const SolverOptions& opts) {
    if (opts.T > 0.0) return opts.T;
    if (!(gap > 0.0)) throw PreconditionError("horizon_for: gap must be positive");
    return std::log(100.0 / opts.horizon_tol) / gap;
}

TimeGrid make_grid(const SpectralOperator& A, double T, const SolverOptions& opts, double t_end) {
    const double max_dt = opts.dt > 0.0 ? opts.dt : opts.dt_factor / A.lambda(A.size());
    if (!(T > 0.0) || t_end < 0.0) throw InputError("make_grid: need T > 0 and t_end >= 0");
    // t = 0 is always a node: the step is fixed by [-T, 0] and [0, t_end] is covered by whole steps.
    const int m_minus = std::max(1, static_cast<int>(std::ceil(T / max_dt - 1e-9)));
    const double dt = T / m_minus;
    const int m_plus = t_end > 0.0 ? static_cast<int>(std::ceil(t_end / dt - 1e-9)) : 0;
    return TimeGrid{-m_minus * dt, dt, m_minus + m_plus};
}

GreenOperator::GreenOperator(const SpectralOperator& A, int N, double theta, TimeGrid grid)
    : N_(N), theta_(theta), grid_(grid), lambda_(A.eigenvalues()) {
    const int K = A.size();
    if (N < 0 || N > K) throw InputError("GreenOperator: N out of range");
    if (!(green_gap(A, N, theta) > 0.0))
        throw PreconditionError("GreenOperator: theta=" + std::to_string(theta) + " outside (lambda_N, lambda_{N+1})");
    step_.resize(K);
    wa_.resize(K);
    wb_.resize(K);
    const double dt = grid.dt;
    for (int n = 0; n < K; ++n) {
        const double z = lambda_[n] * dt;
        if (n < N) {
            step_[n] = std::exp(z);
            const bool small = z < 0.05;
            wa_[n] = dt * (small ? phi_series(z, 1.0, false) : (std::expm1(z) - z) / (z * z));
            wb_[n] = dt * (small ? phi_series(z, 1.0, true) : (z * std::exp(z) - std::expm1(z)) / (z * z));
        } else {
            step_[n] = std::exp(-z);
            const bool small = z < 0.05;
            wa_[n] = dt * (small ? phi_series(z, -1.0, true) : (-std::expm1(-z) - z * std::exp(-z)) / (z * z));
            wb_[n] = dt * (small ? phi_series(z, -1.0, false) : (z + std::expm1(-z)) / (z * z));
        }
    }
}

double GreenOperator::norm_formula() const {
    const int K = static_cast<int>(lambda_.size());
    const double lo = N_ >= 1 ? theta_ - lambda_[N_ - 1] : std::numeric_limits<double>::infinity();
    const double hi = N_ < K ? lambda_[N_] - theta_ : std::numeric_limits<double>::infinity();
    return 1.0 / std::min(lo, hi);
}

RowMat GreenOperator::apply(const RowMat& h) const {
    const int K = static_cast<int>(lambda_.size());
    const int M = grid_.intervals;
    if (h.rows() != grid_.nodes() || h.cols() != K) throw InputError("GreenOperator::apply: shape mismatch");
    RowMat v(h.rows(), K);
    for (int n = 0; n < K; ++n) {
        const double s = step_[n], a = wa_[n], b = wb_[n];
        if (n < N_) {
            v(M, n) = 0.0;
            for (int j = M - 1; j >= 0; --j) v(j, n) = s * v(j + 1, n) - (a * h(j, n) + b * h(j + 1, n));
        } else {
            v(0, n) = 0.0;
            for (int j = 0; j < M; ++j) v(j + 1, n) = s * v(j, n) + a * h(j, n) + b * h(j + 1, n);
        }
    }
    return v;
}

RowMat GreenOperator::apply_transpose(const RowMat& y) const {
    const int K = static_cast<int>(lambda_.size());
    const int M = grid_.intervals;
    if (y.rows() != grid_.nodes() || y.cols() != K) throw InputError("GreenOperator::apply_transpose: shape mismatch");
    RowMat r(y.rows(), K);
    for (int n = 0; n < K; ++n) {
        const double s = step_[n], a = wa_[n], b = wb_[n];
        if (n < N_) {
            // (T^T y)_i = -(a [i<M] q_i + b [i>=1] q_{i-1}),  q_i = y_i + s q_{i-1}
            double q_prev = 0.0;
            for (int i = 0; i <= M; ++i) {
                const double q = y(i, n) + s * q_prev;
                r(i, n) = -((i < M ? a * q : 0.0) + (i >= 1 ? b * q_prev : 0.0));
                q_prev = q;
            }
        } else {
            // (T^T y)_i = a q_{i+1} + b [i>=1] q_i,  q_j = y_j + s q_{j+1}
            double q_next = 0.0; // q_{i+1}
            for (int i = M; i >= 0; --i) {
                const double q = y(i, n) + s * q_next;
                r(i, n) = a * q_next + (i >= 1 ? b * q : 0.0);
                q_next = q;
            }
        }
    }
    return r;
}

Trajectory green_apply(const SpectralOperator& A, int N, double theta, const Trajectory& h) {
    GreenOperator T(A, N, theta, h.grid);
    return Trajectory(h.grid, T.apply(h.values), theta);
}

Trajectory homog_apply(const SpectralOperator& A, int N, const Vec& p, const TimeGrid& grid, double tol) {
    const int K = A.size();
    if (p.size() != K) throw InputError("homog_apply: p must have K entries");
    if (N < 0 || N > K) throw InputError("homog_apply: N out of range");
    const double high = p.tail(K - N).norm();
    if (high > tol * std::max(1.0, p.norm()))
        throw PreconditionError("homog_apply: p has high-mode content " + std::to_string(high));
    Trajectory out(grid, K);
    for (int j = 0; j < grid.nodes(); ++j)
        for (int n = 0; n < N; ++n) out.values(j, n) = p[n] * std::exp(-A.lambda(n + 1) * grid.t(j));
    return out;
}

Vec weighted_row_scale(const TimeGrid& g, double theta) {
    Vec w = trapezoid_weights(g);
    for (int j = 0; j < g.nodes(); ++j) w[j] = std::sqrt(w[j]) * std::exp(theta * g.t(j));
    return w;
}

NormEstimate operator_norm_estimate(const SpectralOperator& A, int N, double theta, const TimeGrid& grid,
                                    int max_iter, std::uint64_t seed) {
    GreenOperator T(A, N, theta, grid);
    const int K = A.size();
    const Vec d = weighted_row_scale(grid, theta);
    SplitMix64 rng(derive_seed(seed, "operator_norm_estimate"));
    RowMat x(grid.nodes(), K); // weighted coordinates
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    x /= x.norm();
    auto unweight = [&](RowMat m) {
        for (int j = 0; j < grid.nodes(); ++j) m.row(j) /= d[j];
        return m;
    };
    auto weight = [&](RowMat m) {
        for (int j = 0; j < grid.nodes(); ++j) m.row(j) *= d[j];
        return m;
    };
    NormEstimate est;
    est.formula = T.norm_formula();
    double prev = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        const RowMat tx = weight(T.apply(unweight(x)));
        const double sigma = tx.norm();
        // T~^T = D^{-1} T^T D applied to D T x (already weighted) requires D^2 scaling of T^T's input.
        RowMat y = T.apply_transpose(weight(tx));
        y = unweight(y);
        est.estimate = sigma;
        est.iterations = it;
        if (it > 5 && std::abs(sigma - prev) <= 1e-7 * sigma) {
            est.converged = true;
            break;
        }
        prev = sigma;
        const double ny = y.norm();
        if (ny == 0.0) break;
        x = y / ny;
    }
    return est;
}

// ---- forward integration ----

namespace {

struct EtdCoeffs {
    Vec E, p1, p2;
    EtdCoeffs(const Vec& lambda, double h) : E(lambda.size()), p1(lambda.size()), p2(lambda.size()) {
        for (Eigen::Index i = 0; i < lambda.size(); ++i) {
            const double z = lambda[i] * h;
            E[i] = std::exp(-z);
            p1[i] = h * phi1(z);
            p2[i] = h * phi2(z);
        }
    }
};

Vec etdrk2_step(const EtdCoeffs& c, const RhsFn& G, const Vec& u) {
    const Vec gu = G(u);
    const Vec a = c.E.cwiseProduct(u) + c.p1.cwiseProduct(gu);
    const Vec ga = G(a);
    return a + c.p2.cwiseProduct(ga - gu);
}

} // namespace

Trajectory forward_solve(const Vec& lambda, const RhsFn& G, const Vec& u0, double horizon, const ForwardOptions& opts) {
    if (!(horizon > 0.0)) throw InputError("forward_solve: horizon must be positive");
    if (u0.size() != lambda.size()) throw InputError("forward_solve: u0 dimension mismatch");
    double dt = opts.dt_out;
    if (!(dt > 0.0)) dt = std::min(0.25 / lambda.maxCoeff(), horizon / 64.0);
    const TimeGrid grid = TimeGrid::covering(0.0, horizon, dt);
    Trajectory out(grid, static_cast<int>(u0.size()));
    out.values.row(0) = u0.transpose();
    Vec u = u0;
    std::vector<EtdCoeffs> cache; // coefficients per halving depth
    auto coeffs = [&](int depth) -> const EtdCoeffs& {
        while (static_cast<int>(cache.size()) <= depth)
            cache.emplace_back(lambda, grid.dt / std::ldexp(1.0, static_cast<int>(cache.size())));
        return cache[static_cast<std::size_t>(depth)];
    };
    std::function<Vec(const Vec&, int)> advance = [&](const Vec& x, int depth) -> Vec {
        if (!opts.adaptive) return etdrk2_step(coeffs(depth), G, x);
        if (depth > opts.max_halvings)
            throw SolverError("forward_solve: step rejection cascade (more than " + std::to_string(opts.max_halvings) +
                              " halvings)");
        const Vec big = etdrk2_step(coeffs(depth), G, x);
        const Vec half = etdrk2_step(coeffs(depth + 1), G, x);
        const Vec two = etdrk2_step(coeffs(depth + 1), G, half);
        if (!big.allFinite() || !two.allFinite()) {
            if (depth == opts.max_halvings) throw SolverError("forward_solve: non-finite state");
        } else {
            const double err = (two - big).norm() / 3.0;
            if (err <= opts.tol * (1.0 + two.norm())) return two + (two - big) / 3.0;
        }
        return advance(advance(x, depth + 1), depth + 1);
    };
    for (int j = 0; j < grid.intervals; ++j) {
        u = advance(u, 0);
        out.values.row(j + 1) = u.transpose();
    }
    return out;
}

Trajectory forward_solve(const SemilinearProblem& prob, const Vec& u0, double horizon, const ForwardOptions& opts) {
    const auto F = prob.F;
    return forward_solve(prob.A.eigenvalues(), [F](const Vec& u) { return F->apply(u); }, u0, horizon, opts);
}

JacobianField::JacobianField(const Nonlinearity& F, const Trajectory& base) {
    jac_.reserve(static_cast<std::size_t>(base.grid.nodes()));
    for (int j = 0; j < base.grid.nodes(); ++j) jac_.push_back(F.jacobian(base.at(j)));
}

// ---- fixed-point driver ----

RowMat fixed_point(const std::function<RowMat(const RowMat&)>& G, RowMat x, const Vec& row_scale,
                   const SolverOptions& opts, FixedPointStats& stats, const std::string& what) {
    auto scaled = [&](const RowMat& m) {
        RowMat r = m;
        for (Eigen::Index j = 0; j < r.rows(); ++j) r.row(j) *= row_scale[j];
        return r;
    };
    auto flat = [](const RowMat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); };
    std::deque<Vec> dF, dG;
    Vec f_prev, g_prev;
    bool use_aa = false;
    int growth = 0;
    double prev_inc = -1.0;
    stats = FixedPointStats{};
    for (int it = 1; it <= opts.max_iter; ++it) {
        const RowMat gx = G(x);
        const RowMat diff = gx - x;
        const double inc = scaled(diff).norm();
        const double size = scaled(gx).norm();
        if (!std::isfinite(inc)) throw SolverError(what + ": non-finite iterate");
        stats.iterations = it;
        stats.final_increment = inc;
        stats.increments.push_back(inc);
        if (inc <= opts.tol * size + opts.tol_abs) return gx;
        if (prev_inc > 0.0 && !use_aa) {
            const double ratio = inc / prev_inc;
            if (prev_inc > 1e3 * opts.tol * size) stats.ratio = std::max(stats.ratio, ratio);
            if (ratio >= 1.0) {
                if (++growth >= 8) throw SolverError(what + ": divergence (contraction ratio >= 1 observed)");
            } else {
                growth = 0;
            }
            if (opts.anderson && it >= 4 && ratio > opts.anderson_threshold) {
                use_aa = true;
                stats.accelerated = true;
            }
        }
        prev_inc = inc;
        if (!use_aa) {
            x = gx;
            continue;
        }
        const Vec f = flat(scaled(diff));
        const Vec g = flat(gx);
        if (f_prev.size()) {
            dF.push_back(f - f_prev);
            dG.push_back(g - g_prev);
            if (static_cast<int>(dF.size()) > opts.anderson_depth) {
                dF.pop_front();
                dG.pop_front();
            }
        }
        f_prev = f;
        g_prev = g;
        Vec next = g;
        if (!dF.empty()) {
            Mat Fm(f.size(), static_cast<Eigen::Index>(dF.size())), Gm(g.size(), static_cast<Eigen::Index>(dG.size()));
            for (std::size_t i = 0; i < dF.size(); ++i) {
                Fm.col(static_cast<Eigen::Index>(i)) = dF[i];
                Gm.col(static_cast<Eigen::Index>(i)) = dG[i];
            }
            const Vec gamma = Fm.colPivHouseholderQr().solve(f);
            if (gamma.allFinite()) next = g - Gm * gamma;
        }
        x = Eigen::Map<const RowMat>(next.data(), x.rows(), x.cols());
    }
    throw SolverError(what + ": no convergence in " + std::to_string(opts.max_iter) + " iterations");
}

VariationalResult variational_solve(const SemilinearProblem& prob, const JacobianField& jac, int N, double theta,
                                    const TimeGrid& grid, const RowMat& h, const Vec& p, const SolverOptions& opts) {
    const int K = prob.K();
    if (N < 1 || N >= K) throw InputError("variational_solve: N out of range");
    if (!(prob.A.lambda(N) + prob.L < theta && theta < prob.A.lambda(N + 1) - prob.L))
        throw PreconditionError("variational_solve: theta=" + std::to_string(theta) + " outside (lambda_N + L, lambda_{N+1} - L)");
    if (jac.nodes() != grid.nodes()) throw InputError("variational_solve: Jacobian field does not match grid");
    if (h.size() && (h.rows() != grid.nodes() || h.cols() != K)) throw InputError("variational_solve: h shape mismatch");
    const GreenOperator T(prob.A, N, theta, grid);
    const RowMat Hp = homog_apply(prob.A, N, project_low(p, N), grid).values;
    auto G = [&](const RowMat& v) {
        RowMat rhs(grid.nodes(), K);
        for (int j = 0; j < grid.nodes(); ++j) rhs.row(j) = (jac.at(j) * v.row(j).transpose()).transpose();
        if (h.size()) rhs += h;
        return RowMat(T.apply(rhs) + Hp);
    };
    RowMat v0 = h.size() ? RowMat(T.apply(h) + Hp) : Hp;
    VariationalResult res;
    const RowMat v = fixed_point(G, std::move(v0), weighted_row_scale(grid, theta), opts, res.stats, "variational_solve");
    res.v = Trajectory(grid, v, theta);
    return res;
}

double variational_defect(const SemilinearProblem& prob, const JacobianField& jac, int N, double theta,
                          const Trajectory& v, const RowMat& h, const Vec& p) {
    const auto& grid = v.grid;
    const int K = prob.K();
    const GreenOperator T(prob.A, N, theta, grid);
    RowMat rhs(grid.nodes(), K);
    for (int j = 0; j < grid.nodes(); ++j) rhs.row(j) = (jac.at(j) * v.values.row(j).transpose()).transpose();
    if (h.size()) rhs += h;
    const RowMat r = v.values - T.apply(rhs) - homog_apply(prob.A, N, project_low(p, N), grid).values;
    const double nv = weighted_l2_norm(grid, v.values, theta);
    return weighted_l2_norm(grid, r, theta) / (nv > 0.0 ? nv : 1.0);
}

} // namespace imjet
