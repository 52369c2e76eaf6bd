#pragma once

#include "imjet/jet.hpp"
#include "imjet/perron.hpp"

#include <json.hpp>

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace imjet {

/// Order-m forcing of the jet recursion at one node:
///   Phi_m = m! [s^m] ( F(u + c(s)) + F'(u + c(s)) (w(s) - c(s)) ),
/// c(s) = sum_{i} s^i v[i-1] / i! (lower-level jet), w(s) = sum_{i<m} s^i w[i-1] / i!.
/// Only degree-m terms are kept, so the unknown W^(m) enters solely through F'(u) W^(m).
Vec truncated_forcing(const Nonlinearity& F, const Vec& u, const std::vector<Vec>& v, const std::vector<Vec>& w, int m);

/// Directional solutions W_k^(m) for one direction xi, levels k = 1..level.
struct DirectionalJets {
    /// W[k-1][m-1] = W_k^(m)_xi on the engine grid.
    std::vector<std::vector<Trajectory>> W;
    /// Weighted norm |W_k^(m)_xi|_{theta_k + (m-1) theta_{k-1}} / |xi|^m.
    std::vector<std::vector<double>> growth;
    int iterations = 0; // total fixed-point iterations
};

/// Jet of the top-level chart with fit diagnostics.
struct JetReport {
    Jet jet;
    double fit_residual = 0.0; // relative lattice-fit residual (0 when square)
    double growth = 0.0;       // max growth constant over directions, levels and degrees
    int directions = 0;
    int solves = 0;
};

/// Jets of the chart over H_{N_level} along the level-1 manifold. The level-1 Perron
/// trajectory V(p) is the base for every level; level k uses the exponent
/// theta_k + (m-1) theta_{k-1} for its degree-m component.
class JetEngine {
public:
    JetEngine(SemilinearProblem prob, GapLadder ladder, SolverOptions opts = {});

    const SemilinearProblem& problem() const { return prob_; }
    const GapLadder& ladder() const { return ladder_; }
    const TimeGrid& grid() const { return grid_; }
    const SolverOptions& options() const { return opts_; }
    const ManifoldChart& base_chart() const { return *base_; }
    int N(int level) const { return ladder_.level(level).N; }

    /// P_{N_level} V(p, 0) as an N_level-vector (p: level-1 base coordinate).
    Vec base_point(const Vec& p, int level) const;
    /// Q_{N_level} V(p, 0).
    Vec chart_value(const Vec& p, int level) const;

    /// Chain of directional solves: all degrees on levels below, degrees 1..order on top.
    DirectionalJets directional(const Vec& p, const Vec& xi, int level, int order) const;
    /// W_level^(2)_xi.
    Trajectory second_jet(const Vec& p, const Vec& xi, int level = 2) const;
    /// Degree-k component Q W^(k)(p, 0) as a symmetric form on H_{N_level}.
    SymMultiForm higher_jet(const Vec& p, int level, int k) const;
    /// Order-`order` jet of the level chart at P_{N_level} V(p, 0), order <= level (cached).
    std::shared_ptr<const JetReport> jet(const Vec& p, int level, int order) const;

private:
    SemilinearProblem prob_;
    GapLadder ladder_;
    SolverOptions opts_;
    TimeGrid grid_;
    std::unique_ptr<ManifoldChart> base_;
    mutable std::mutex mu_;
    mutable std::map<std::string, std::shared_ptr<const JetReport>> cache_;
};

struct CompatPair {
    Vec p, p1;
    double delta_norm = 0.0;
    double xi_norm = 0.0;
    double residual = 0.0;
};

struct CompatReport {
    int level = 0;
    int order = 0;
    double alpha = 0.0;
    double slope = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::vector<CompatPair> pairs;
    nlohmann::json to_json() const;
};

struct CompatOptions {
    double alpha = 0.05;          // Hoelder exponent in the threshold order + alpha - slack
    double slack = 0.15;
    double xi_scale = 1.0;        // |xi| = xi_scale |delta|
    std::uint64_t seed = 1;
};

/// |J_q(xi + delta) - J_{q1}(xi)| for jets at q = P V(p, 0), q1 = P V(p1, 0), delta = q1 - q,
/// fitted against |xi| + |delta| on a log-log scale. Needs at least 10 pairs whose |delta|
/// span 1.5 decades.
CompatReport manifold_compat_check(const JetEngine& engine, const std::vector<std::pair<Vec, Vec>>& base_pairs,
                                   int level, int order, const CompatOptions& opts = {});

/// |M(q1) - J_q(q1 - q)| against |q1 - q| for base pairs (the prediction test).
struct PredictionReport {
    std::vector<double> deltas, residuals;
    double slope = 0.0;
    nlohmann::json to_json() const;
};
PredictionReport jet_prediction(const JetEngine& engine, const std::vector<std::pair<Vec, Vec>>& base_pairs, int level,
                                int order);

} // namespace imjet
