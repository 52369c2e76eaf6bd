#pragma once

#include "imjet/spectral.hpp"
#include "imjet/symform.hpp"
#include "imjet/trajectory.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace imjet {

/// Taylor coefficients 0..order (one column each) of F(u + c(s)) and of F'(u + c(s)) y(s).
struct TaylorPair {
    Mat value;
    Mat tangent;
};

/// Smooth map on K-vectors with value, Jacobian and truncated Taylor evaluators.
class Nonlinearity {
public:
    virtual ~Nonlinearity() = default;
    virtual int dim() const = 0;
    virtual std::string name() const = 0;
    virtual Vec apply(const Vec& u) const = 0;
    /// Dense K x K Jacobian; the default uses K first-order tangent evaluations.
    virtual Mat jacobian(const Vec& u) const;
    /// c: K x order with column j-1 holding c_j; y: K x (order+1) with column j holding y_j.
    virtual TaylorPair taylor(const Vec& u, const Mat& c, const Mat& y, int order) const = 0;
    /// Bound on |F'| used by the gap conditions.
    virtual double lipschitz() const = 0;

    /// k-th derivative F^(k)(u) as a symmetric form, fitted from directional Taylor coefficients.
    SymMultiForm derivative_form(const Vec& u, int k) const;
};

using NonlinearityPtr = std::shared_ptr<const Nonlinearity>;

/// F = 0.
class ZeroNonlinearity final : public Nonlinearity {
public:
    explicit ZeroNonlinearity(int K) : K_(K) {}
    int dim() const override { return K_; }
    std::string name() const override { return "zero"; }
    Vec apply(const Vec&) const override { return Vec::Zero(K_); }
    Mat jacobian(const Vec&) const override { return Mat::Zero(K_, K_); }
    TaylorPair taylor(const Vec& u, const Mat& c, const Mat& y, int order) const override;
    double lipschitz() const override { return 0.0; }

private:
    int K_;
};

/// F(u) = g + B u.
class AffineNonlinearity final : public Nonlinearity {
public:
    AffineNonlinearity(Vec g, Mat B);
    static std::shared_ptr<AffineNonlinearity> constant(Vec g);
    int dim() const override { return static_cast<int>(g_.size()); }
    std::string name() const override { return "affine"; }
    Vec apply(const Vec& u) const override { return g_ + B_ * u; }
    Mat jacobian(const Vec&) const override { return B_; }
    TaylorPair taylor(const Vec& u, const Mat& c, const Mat& y, int order) const override;
    double lipschitz() const override;

private:
    Vec g_;
    Mat B_;
};

struct SemilinearProblem {
    SpectralOperator A;
    NonlinearityPtr F;
    double L = 0.0;

    SemilinearProblem(SpectralOperator op, NonlinearityPtr f, double lip);
    SemilinearProblem(SpectralOperator op, NonlinearityPtr f); // L from F
    int K() const { return A.size(); }
};

struct SolverOptions {
    double tol = 1e-10;       // relative increment tolerance of fixed-point loops
    double tol_abs = 1e-300;  // absolute floor added to the tolerance
    double horizon_tol = 1e-8; // target for e^{-gap T} <= 0.01 horizon_tol
    double T = 0.0;           // fixed horizon; 0 selects the rule above
    double dt = 0.0;          // fixed step; 0 selects dt_factor / lambda_K
    double dt_factor = 0.25;
    int max_iter = 2000;
    int anderson_depth = 3;
    double anderson_threshold = 0.9;
    bool anderson = true;
};

/// min(theta - lambda_N, lambda_{N+1} - theta); lambda_0 = -inf, lambda_{K+1} = +inf.
double green_gap(const SpectralOperator& A, int N, double theta);
/// Horizon T with e^{-gap T} <= 0.01 horizon_tol unless fixed by opts.T.
double horizon_for(double gap, const SolverOptions& opts);
/// Grid on [-T, t_end] with step min(opts.dt or dt_factor/lambda_K).
TimeGrid make_grid(const SpectralOperator& A, double T, const SolverOptions& opts, double t_end = 0.0);

/// Solution operator of dv/dt + A v = h in the e^{theta t}-weighted space on a grid:
/// modes n <= N integrate backward from the last node with zero terminal value,
/// modes n > N integrate forward from the first node with zero initial value;
/// h is interpolated piecewise linearly and each step uses exact exponentials.
class GreenOperator {
public:
    GreenOperator(const SpectralOperator& A, int N, double theta, TimeGrid grid);

    int N() const { return N_; }
    double theta() const { return theta_; }
    const TimeGrid& grid() const { return grid_; }
    /// 1 / min(theta - lambda_N, lambda_{N+1} - theta).
    double norm_formula() const;

    RowMat apply(const RowMat& h) const;
    /// Plain (unweighted) matrix transpose of apply.
    RowMat apply_transpose(const RowMat& y) const;

private:
    int N_;
    double theta_;
    TimeGrid grid_;
    Vec lambda_;
    Vec step_; // E (forward) or G (backward) per mode
    Vec wa_, wb_;
};

/// Green operator with the theta window checked: theta must lie in (lambda_N, lambda_{N+1}).
Trajectory green_apply(const SpectralOperator& A, int N, double theta, const Trajectory& h);

/// H(p, t) = sum_{n <= N} p_n e^{-lambda_n t} e_n on the grid.
Trajectory homog_apply(const SpectralOperator& A, int N, const Vec& p, const TimeGrid& grid, double tol = 1e-12);

struct NormEstimate {
    double estimate = 0.0;
    double formula = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Power iteration on T*T in the discrete weighted L^2 space (trapezoidal weights e^{2 theta t}).
NormEstimate operator_norm_estimate(const SpectralOperator& A, int N, double theta, const TimeGrid& grid,
                                    int max_iter = 200, std::uint64_t seed = 1);

using RhsFn = std::function<Vec(const Vec&)>;

struct ForwardOptions {
    double dt_out = 0.0;   // output spacing; 0 selects 0.25 / lambda_max capped at horizon / 64
    double tol = 1e-11;    // step-doubling error tolerance (mixed absolute/relative)
    bool adaptive = true;  // false: one ETDRK2 step per output interval
    int max_halvings = 20;
};

/// du/dt + diag(lambda) u = G(u) from u(0) = u0 by ETDRK2 with step-doubling control.
Trajectory forward_solve(const Vec& lambda, const RhsFn& G, const Vec& u0, double horizon,
                         const ForwardOptions& opts = {});
Trajectory forward_solve(const SemilinearProblem& prob, const Vec& u0, double horizon,
                         const ForwardOptions& opts = {});

/// Jacobians F'(u(t_j)) along a base trajectory, computed once.
class JacobianField {
public:
    JacobianField(const Nonlinearity& F, const Trajectory& base);
    const Mat& at(int j) const { return jac_[static_cast<std::size_t>(j)]; }
    int nodes() const { return static_cast<int>(jac_.size()); }

private:
    std::vector<Mat> jac_;
};

struct FixedPointStats {
    int iterations = 0;
    double ratio = 0.0;            // max successive-increment ratio above the noise floor
    double final_increment = 0.0;
    bool accelerated = false;
    std::vector<double> increments;
};

struct VariationalResult {
    Trajectory v;
    FixedPointStats stats;
};

/// Solves dv/dt + A v - F'(u(t)) v = h, P_N v(0) = p in the e^{theta t}-weighted space
/// by v <- T(F'(u) v + h) + H p. theta must satisfy lambda_N + L < theta < lambda_{N+1} - L.
/// h may be empty (zero forcing).
VariationalResult variational_solve(const SemilinearProblem& prob, const JacobianField& jac, int N, double theta,
                                    const TimeGrid& grid, const RowMat& h, const Vec& p,
                                    const SolverOptions& opts = {});

/// Relative fixed-point defect |v - T(F'(u) v + h) - H p| / |v| in the weighted L^2 norm.
double variational_defect(const SemilinearProblem& prob, const JacobianField& jac, int N, double theta,
                          const Trajectory& v, const RowMat& h, const Vec& p);

/// sqrt(trapezoid weight) * e^{theta t_j}: row scaling that turns the weighted L^2
/// norm into the Frobenius norm.
Vec weighted_row_scale(const TimeGrid& g, double theta);

/// Fixed-point driver x <- G(x) measured in the row-scaled Frobenius norm, with
/// Anderson acceleration switched on when the observed ratio exceeds the threshold.
RowMat fixed_point(const std::function<RowMat(const RowMat&)>& G, RowMat x0, const Vec& row_scale,
                   const SolverOptions& opts, FixedPointStats& stats, const std::string& what);

} // namespace imjet
