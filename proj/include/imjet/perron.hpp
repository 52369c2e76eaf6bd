#pragma once

#include "imjet/parasolve.hpp"

#include <json.hpp>

#include <functional>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <vector>

namespace imjet {

struct PerronResult {
    Trajectory V;
    FixedPointStats stats;
};

/// Fixed point u = T F(u) + H(P_N p) on the grid, started from H(P_N p). The
/// window lambda_N + L < theta < lambda_{N+1} - L is required.
PerronResult backward_fixed_point(const SemilinearProblem& prob, int N, double theta, const Vec& p,
                                  const TimeGrid& grid, const SolverOptions& opts = {});

/// Graph map p -> Q_N V(p, 0) over H_N with memoized trajectories.
/// Base points may be given as N-vectors or K-vectors (only P_N p is used).
class ManifoldChart {
public:
    ManifoldChart(SemilinearProblem prob, int N, double theta, TimeGrid grid, SolverOptions opts = {});
    /// Grid on [-T, 0] with T from the gap rule (or opts.T).
    ManifoldChart(SemilinearProblem prob, int N, double theta, SolverOptions opts = {});

    const SemilinearProblem& problem() const { return prob_; }
    int N() const { return N_; }
    int K() const { return prob_.K(); }
    double theta() const { return theta_; }
    const TimeGrid& grid() const { return grid_; }
    const SolverOptions& options() const { return opts_; }

    /// Perron trajectory V(p, .) (cached).
    std::shared_ptr<const PerronResult> trajectory(const Vec& p) const;
    /// Q_N V(p, 0) as a (K - N)-vector.
    Vec operator()(const Vec& p) const;
    /// P_N p + M(p) as a K-vector.
    Vec full_point(const Vec& p) const;
    /// Variational trajectory V'(p) xi (h = 0, P_N data xi).
    VariationalResult derivative_trajectory(const Vec& p, const Vec& xi) const;
    /// Q_N V'(p, 0) xi as a (K - N)-vector.
    Vec derivative(const Vec& p, const Vec& xi) const;
    /// Jacobian of the chart, (K - N) x N.
    Mat jacobian(const Vec& p) const;
    std::size_t cache_size() const;
    /// Stable file stem for the trajectory of p (chart hash + base coordinates).
    std::string cache_name(const Vec& p) const;
    /// Inserts a trajectory computed elsewhere (e.g. read from disk); the grid must match.
    void preload(const Vec& p, Trajectory V) const;
    /// Hash of (N, theta, grid, tolerances, problem name); part of every cache key.
    std::uint64_t config_hash() const { return hash_; }

    Vec embed(const Vec& p) const; // P_N p as a K-vector
    /// F'(V(p, t_j)) along the cached trajectory.
    std::shared_ptr<const JacobianField> jacobians(const Vec& p) const;

private:
    SemilinearProblem prob_;
    int N_;
    double theta_;
    TimeGrid grid_;
    SolverOptions opts_;
    std::uint64_t hash_;
    mutable std::shared_mutex mu_;
    mutable std::map<std::string, std::shared_ptr<const PerronResult>> cache_;
    mutable std::map<std::string, std::shared_ptr<const JacobianField>> jac_cache_;
};

/// M'(p) xi (the chart derivative) as a (K - N)-vector.
Vec first_derivative(const ManifoldChart& chart, const Vec& p, const Vec& xi);

/// max |M(p) - M(q)| / |p - q| over the pairs (at least 50).
double lipschitz_probe(const std::function<Vec(const Vec&)>& chart, const std::vector<std::pair<Vec, Vec>>& pairs);

/// One-sided exponential fit log y = log C - rate t over samples with y above the floor.
struct RateFit {
    double rate = 0.0;
    double C = 0.0;
    int samples = 0;
    bool ok = false;
};
RateFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& y, double floor = 1e-13);

struct TrackingOptions {
    double T_plus = 0.0;  // 0 selects 1 + 15 / theta
    double fit_start = 1.0;
    std::function<double(double)> cutoff;       // phi; default quintic smoothstep on [0,1]
    std::function<double(double)> cutoff_deriv; // phi'
};

struct TrackingResult {
    Trajectory u;    // forward solution on [0, T_plus]
    Trajectory ubar; // tracked trajectory on [-T, T_plus]
    double theta = 0.0;
    RateFit fit;
    double window_lo = 0.0, window_hi = 0.0;
    FixedPointStats stats;
    nlohmann::json to_json() const;
};

/// Exponential tracking: v = T(F(phi u + v) - phi F(u) - phi' u) on [-T, T_plus],
/// ubar = phi u + v; the distance |u - ubar| on [fit_start, T_plus] is fitted by an exponential.
TrackingResult tracking_solve(const SemilinearProblem& prob, int N, double theta, const Vec& u0,
                              const SolverOptions& opts = {}, const TrackingOptions& topts = {});

/// Chart table: rows (p..., chart...).
void write_chart_csv(const ManifoldChart& chart, const std::vector<Vec>& points, const std::string& path);

} // namespace imjet
