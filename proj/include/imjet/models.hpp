#pragma once

#include "imjet/parasolve.hpp"

#include <json.hpp>

#include <vector>

namespace imjet {

// ---------------------------------------------------------------------------
// Sell's resonant cascade: du_n/dt + lambda_n u_n = u_{n-1}^2, lambda_n = 2^(n-1).

struct SellOptions {
    int K = 6;
    double beta = 0.2;  // local base radius for the closed forms
    int sign = +1;      // sign branch of the base coordinate
    bool cutoff = true; // multiply by chi(|u_1|) so the problem is globally Lipschitz
    bool shifted = false; // lambda_n = 2^n - 1 (non-resonant contrast ladder)
    double L = 0.1;     // nominal Lipschitz constant used by the gap conditions
};

/// chi(r) = S((w - ln r) / (2w)), w = ln 2: 1 for r <= 1/2, 0 for r >= 2.
double sell_cutoff(double r);
double sell_cutoff_derivative(double r);

class SellNonlinearity final : public Nonlinearity {
public:
    SellNonlinearity(int K, bool cutoff, double L);
    int dim() const override { return K_; }
    std::string name() const override { return cutoff_ ? "sell" : "sell-nocutoff"; }
    Vec apply(const Vec& u) const override;
    Mat jacobian(const Vec& u) const override;
    TaylorPair taylor(const Vec& u, const Mat& c, const Mat& y, int order) const override;
    double lipschitz() const override { return L_; }

private:
    int K_;
    bool cutoff_;
    double L_;
};

SpectralOperator sell_operator(int K, bool shifted = false);
SemilinearProblem sell_problem(const SellOptions& opts = {});

/// F_1 = 0, F_n = u_{n-1}^2 (no cutoff).
Vec sell_rhs(const Vec& u);

/// C_0..C_{n_max} with u_{n+1}(t) = C_n t^(2^n - 1) e^(-2^n t) for u_1 = e^(-t), obtained
/// by exact polynomial integration of the cascade. n_max <= 8.
std::vector<double> sell_constants(int n_max);

/// Component n (1-based) of the particular solution at time t.
double sell_explicit(double t, int n);
/// du_n/dt + lambda_n u_n - u_{n-1}^2 along the particular solution (exact derivative).
double sell_explicit_defect(double t, int n);

/// M_n(p) = C_{n-1} |p|^(2^(n-1)) ln(1/|p|)^(2^(n-1) - 1) for n >= 2; M_1(p) = p.
/// Domain 0 < |p| < beta; returns 0 at p = 0.
double sell_manifold_chart(double p, int n, double beta = 0.2);

/// Max over t of |u_n(t) - M_n(u_1(t))|, n = 2..K, along the forward flow of the
/// uncut system started at (p, M_2(p), ..., M_K(p)).
double sell_chart_invariance_defect(double p, int K, double horizon, double beta = 0.2);

struct QuadraticFit {
    double c = 0.0;
    double residual = 0.0; // max_i |x_i - c y_i| / |x_i|
    double grid_min_residual = 0.0; // min over a sweep of c around the optimum
};
/// Best c in x ~ c y for the relative sup residual (exact minimax solution).
QuadraticFit fit_quadratic_coefficient(const std::vector<double>& x, const std::vector<double>& y);

struct ObstructionCertificate {
    int n = 1;
    long long symbolic_coefficient = 0; // -2 lambda_n + lambda_{n+1}
    long long forcing = 1;
    QuadraticFit fit;
    int samples = 0;
    bool passes = false;
    nlohmann::json to_json() const;
};

/// Matching the e^{-2 lambda_n t} terms of a quadratic graph u_{n+1} = c u_n^2 + ... gives
/// (-2 lambda_n + lambda_{n+1}) c = 1 with vanishing left coefficient; the numerical
/// side fits u_{n+1} ~ c u_n^2 over on-manifold closed-form data for |p| in [1e-8, beta].
ObstructionCertificate sell_c2_obstruction(int n, int samples = 200, double beta = 0.2);

/// Same fit on the shifted ladder without cutoff using Perron charts of the level-1 manifold.
QuadraticFit sell_shifted_contrast(int K = 4, double T = 25.0, int samples = 20);

/// Extended chart over H_n: zeros in modes 1..n, M_m(p_1) in modes m = n+1..K.
Vec sell_extended_chart(const Vec& p, int n, int K, double beta = 0.2);
/// (0, u_1^2, ..., u_{n-1}^2, M_n(u_1)^2, M_{n+1}(u_1)^2, ...) with M_1(u_1) = u_1.
Vec sell_modified_rhs(const Vec& u, int n, double beta = 0.2);
/// Max graph defect of the extended chart along the modified flow on [0, horizon].
double sell_extended_invariance_defect(const Vec& p, int n, int K, double horizon, double beta = 0.2);

struct DividedDifferenceProbe {
    int n = 1;
    std::vector<double> steps;               // h values, decreasing
    std::vector<std::vector<double>> values; // values[k-1][i] = |Delta_h^k M_{n+1}(0)| / h^k
    std::vector<bool> bounded;               // per order k
    bool passes = false; // bounded through 2^n - 1, growing at 2^n
    nlohmann::json to_json() const;
};
/// Forward differences of M_{n+1} from p = 0 with steps h in [h_min, h_max].
DividedDifferenceProbe sell_divided_differences(int n, double h_min = 1e-8, double h_max = 1e-2, int count = 13,
                                                double beta = 0.2);

// ---------------------------------------------------------------------------
// 1D reaction-diffusion: du/dt = a u_xx - f(u) on (-pi, pi), Dirichlet, odd sine modes.

struct RdsOptions {
    double a = 1.0;
    std::vector<double> f_coeffs{0.0, -1.0, 0.0, 1.0}; // f(u) = sum c_i u^i; default u^3 - u
    bool cutoff = true;
    double R = 2.0; // cutoff starts at |u| = R
    double w = 1.0; // and is complete at |u| = R + w
    int K = 8;
    int colloc_factor = 4; // collocation points per mode
    double L = 0.0;        // 0 selects the certified bound
};

class RdsNonlinearity final : public Nonlinearity {
public:
    explicit RdsNonlinearity(const RdsOptions& opts);
    int dim() const override { return K_; }
    std::string name() const override { return "rds"; }
    Vec apply(const Vec& u) const override;
    Mat jacobian(const Vec& u) const override;
    TaylorPair taylor(const Vec& u, const Mat& c, const Mat& y, int order) const override;
    double lipschitz() const override { return L_; }

    /// Modified reaction f(u) (1 - S((|u| - R) / w)) and its derivative.
    double reaction(double u) const;
    double reaction_derivative(double u) const;
    int points() const { return static_cast<int>(S_.rows()); }
    /// Physical values at the collocation nodes x_j = j pi / (M + 1).
    Vec to_physical(const Vec& u) const { return S_ * u; }

private:
    int K_;
    RdsOptions opts_;
    Mat S_;    // M x K, sin(k x_j) / sqrt(pi)
    Mat proj_; // K x M, 2 pi / (M + 1) S^T
    double L_;
};

/// 1.1 max |(f (1 - S))'| over a fine grid of [-(R + w), R + w]; |c_1| for linear f
/// without cutoff. Other cases without cutoff throw.
double rds_certified_lipschitz(const RdsOptions& opts);
SemilinearProblem rds_build(const RdsOptions& opts);
/// -int_{-pi}^{pi} f(u(x)) sin(kx) / sqrt(pi) dx by composite Gauss-Legendre quadrature.
Vec rds_quadrature_projection(const RdsOptions& opts, const Vec& u, int panels = 400);

} // namespace imjet
