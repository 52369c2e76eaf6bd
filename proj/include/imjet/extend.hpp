#pragma once

#include "imjet/jets_manifold.hpp"

#include <json.hpp>

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace imjet {

/// Jet of the top-level chart at a base point q = P_{N_n} V(p, 0).
struct JetSample {
    Vec p;       // level-1 base coordinate
    Vec q;       // base point in H_{N_n}
    Mat tangent; // dq/dp, N_n x N_1
    Jet jet;     // values in Q_{N_n}
};

class SampleStore {
public:
    SampleStore() = default;
    SampleStore(int level, std::vector<JetSample> samples);
    /// Jets of order `order` at the given level-1 base coordinates.
    static SampleStore build(const JetEngine& engine, const std::vector<Vec>& base_points, int level, int order);

    int level() const { return level_; }
    int dim_base() const { return samples_.empty() ? 0 : static_cast<int>(samples_.front().q.size()); }
    int dim_out() const { return samples_.empty() ? 0 : samples_.front().jet.dim_out(); }
    int order() const { return samples_.empty() ? 0 : samples_.front().jet.order(); }
    const std::vector<JetSample>& samples() const { return samples_; }
    /// Largest nearest-neighbour distance between base points.
    double spacing() const { return spacing_; }
    /// Index of the sample closest to q.
    std::size_t nearest(const Vec& q) const;

    nlohmann::json to_json() const;
    static SampleStore from_json(const nlohmann::json& j);

private:
    int level_ = 0;
    std::vector<JetSample> samples_;
    double spacing_ = 0.0;
};

/// Distance from q to the sampled base manifold: nearest sample refined by one
/// Gauss-Newton step on its tangent plane.
double base_distance(const SampleStore& store, const Vec& q);

/// rho = S5(d / nu - 1): 0 for d <= nu, 1 for d >= 2 nu.
double cutoff_rho(const SampleStore& store, double nu, const Vec& q);

/// Convolution with the normalized tensor kernel prod (1 - s_a^2)^3 over [-mu, mu]^d
/// by 5-point Gauss-Legendre quadrature per axis.
Vec mollify(const std::function<Vec(const Vec&)>& chart, double mu, const Vec& q);

struct BlendValue {
    Vec value;
    Mat derivative; // dim_out x dim_base
};

struct BlendOptions {
    double radius = 0.0; // bump radius; 0 selects 2 (spacing + nu)
    double nu = 0.0;
};

/// Normalized blend of jets sum_i psi_i J_i(q - q_i) / sum_i psi_i with
/// psi_i = b(|q - q_i| / r) |q - q_i|^(-2(n+1)), b a C-infinity bump. At a sample point the
/// blend equals the jet there to order 2n+1, so values and first derivatives anchor exactly.
/// Throws DomainError when no sample lies within r.
BlendValue whitney_blend(const SampleStore& store, const Vec& q, const BlendOptions& opts = {});

struct ExtensionConfig {
    double nu = 0.05;
    double mu = 0.0;           // 0 selects nu^2
    double radius_factor = 2.0; // blend radius = radius_factor (spacing + nu)
    double fd_step = 1e-4;     // derivative fallback outside the plateau
};

/// M~ = (1 - rho) M^ + rho S_mu M over H_{N_n}.
class ExtendedManifold {
public:
    ExtendedManifold(SampleStore store, std::shared_ptr<const ManifoldChart> top, ExtensionConfig cfg);

    const SampleStore& store() const { return store_; }
    const ExtensionConfig& config() const { return cfg_; }
    double mu() const { return cfg_.mu > 0.0 ? cfg_.mu : cfg_.nu * cfg_.nu; }
    double blend_radius() const { return cfg_.radius_factor * (store_.spacing() + cfg_.nu); }
    int dim_base() const { return store_.dim_base(); }
    int dim_out() const { return store_.dim_out(); }

    double rho(const Vec& q) const { return cutoff_rho(store_, cfg_.nu, q); }
    BlendValue blend(const Vec& q) const;
    Vec mollified(const Vec& q) const;
    Vec operator()(const Vec& q) const;
    /// Analytic where rho vanishes identically near q; central differences otherwise.
    Mat derivative(const Vec& q, bool* analytic = nullptr) const;
    /// Top chart M_{N_n} (cached Perron solves).
    Vec top_chart(const Vec& q) const;

private:
    SampleStore store_;
    std::shared_ptr<const ManifoldChart> top_;
    ExtensionConfig cfg_;
};

/// Graph over H_N with value and derivative; used by the inertial-form right-hand sides.
struct GraphMap {
    int N = 0;
    std::function<Vec(const Vec&)> value;      // N-vector -> (K - N)-vector
    std::function<Mat(const Vec&)> derivative; // (K - N) x N
};
GraphMap graph_of(const ExtendedManifold& m);

/// P_N F(u + M~(u)) for u in H_N (as an N-vector): the nonlinear term of the extended inertial form.
Vec extended_if_rhs(const SemilinearProblem& prob, const GraphMap& graph, const Vec& u_base);
/// Forward solution of du/dt + A_N u = P_N F(u + M~(u)).
Trajectory extended_if_solve(const SemilinearProblem& prob, const GraphMap& graph, const Vec& u0, double horizon,
                             const ForwardOptions& fo = {});

/// F~(u): P-part P_N F(u_P + M~(u_P)); Q-part M~'(u_P)[-A u_P + P_N F(u_P + M~(u_P))] + A M~(u_P).
/// With this Q-part the defect d = Q u - M~(P u) obeys dd/dt = -A d, so the graph is invariant.
Vec modified_nonlinearity(const SemilinearProblem& prob, const GraphMap& graph, const Vec& u);

/// Max over output times of |Q u(t) - M~(P u(t))| along the modified flow from u_P0 + M~(u_P0).
double modified_invariance_defect(const SemilinearProblem& prob, const GraphMap& graph, const Vec& u_base0,
                                  double horizon, const ForwardOptions& fo = {});

/// samples.json, config.json and manifest.json under dir.
void write_extension_bundle(const ExtendedManifold& m, const std::string& dir, const nlohmann::json& manifest_extra = {});
SampleStore read_extension_samples(const std::string& dir);

} // namespace imjet
