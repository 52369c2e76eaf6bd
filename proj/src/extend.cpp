#include "imjet/extend.hpp"

#include "imjet/series.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

namespace imjet {

namespace {

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Vec from_std(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

constexpr double kGaussX[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
constexpr double kGaussW[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                               0.2369268850561891};

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace

SampleStore::SampleStore(int level, std::vector<JetSample> samples) : level_(level), samples_(std::move(samples)) {
    if (samples_.empty()) throw InputError("SampleStore: no samples");
    const auto d = samples_.front().q.size();
    for (const auto& s : samples_)
        if (s.q.size() != d || s.jet.dim_in() != d || s.tangent.rows() != d ||
            s.jet.dim_out() != samples_.front().jet.dim_out() || s.jet.order() != samples_.front().jet.order())
            throw InputError("SampleStore: inconsistent sample shapes");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < samples_.size(); ++j)
            if (j != i) best = std::min(best, (samples_[i].q - samples_[j].q).norm());
        if (samples_.size() > 1) spacing_ = std::max(spacing_, best);
    }
}

SampleStore SampleStore::build(const JetEngine& engine, const std::vector<Vec>& base_points, int level, int order) {
    std::vector<JetSample> out;
    const int N1 = engine.N(1);
    for (const auto& p : base_points) {
        JetSample s;
        s.p = engine.base_chart().embed(p).head(N1);
        s.q = engine.base_point(s.p, level);
        s.jet = engine.jet(s.p, level, order)->jet;
        s.tangent.resize(s.q.size(), N1);
        for (int a = 0; a < N1; ++a)
            s.tangent.col(a) =
                engine.base_chart().derivative_trajectory(s.p, Vec::Unit(N1, a)).v.at_zero().head(s.q.size());
        out.push_back(std::move(s));
    }
    return SampleStore(level, std::move(out));
}

std::size_t SampleStore::nearest(const Vec& q) const {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        const double d = (samples_[i].q - q).squaredNorm();
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    return best;
}

nlohmann::json SampleStore::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : samples_) {
        nlohmann::json tan = nlohmann::json::array();
        for (Eigen::Index c = 0; c < s.tangent.cols(); ++c) tan.push_back(to_std(s.tangent.col(c)));
        arr.push_back({{"p", to_std(s.p)}, {"q", to_std(s.q)}, {"tangent_columns", tan}, {"jet", imjet::to_json(s.jet)}});
    }
    return {{"level", level_}, {"spacing", spacing_}, {"samples", arr}};
}

SampleStore SampleStore::from_json(const nlohmann::json& j) {
    try {
        std::vector<JetSample> out;
        for (const auto& s : j.at("samples")) {
            JetSample x;
            x.p = from_std(s.at("p").get<std::vector<double>>());
            x.q = from_std(s.at("q").get<std::vector<double>>());
            const auto& tan = s.at("tangent_columns");
            x.tangent.resize(x.q.size(), static_cast<Eigen::Index>(tan.size()));
            for (std::size_t c = 0; c < tan.size(); ++c)
                x.tangent.col(static_cast<Eigen::Index>(c)) = from_std(tan[c].get<std::vector<double>>());
            x.jet = jet_from_json(s.at("jet"));
            out.push_back(std::move(x));
        }
        return SampleStore(j.at("level").get<int>(), std::move(out));
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("SampleStore::from_json: ") + e.what());
    }
}

double base_distance(const SampleStore& store, const Vec& q) {
    const auto& s = store.samples()[store.nearest(q)];
    const Vec r = q - s.q;
    if (s.tangent.cols() == 0) return r.norm();
    const Vec step = s.tangent.colPivHouseholderQr().solve(r);
    return (r - s.tangent * step).norm();
}

double cutoff_rho(const SampleStore& store, double nu, const Vec& q) {
    if (!(nu > 0.0)) throw InputError("cutoff_rho: nu must be positive");
    return smoothstep5(base_distance(store, q) / nu - 1.0);
}

Vec mollify(const std::function<Vec(const Vec&)>& chart, double mu, const Vec& q) {
    if (!(mu > 0.0)) throw InputError("mollify: mu must be positive");
    const int d = static_cast<int>(q.size());
    if (d < 1 || d > 6) throw CapabilityError("mollify: base dimension must lie in [1, 6]");
    double w1[5];
    for (int i = 0; i < 5; ++i) w1[i] = kGaussW[i] * std::pow(1.0 - kGaussX[i] * kGaussX[i], 3);
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    Vec acc;
    double wsum = 0.0;
    while (true) {
        Vec y = q;
        double w = 1.0;
        for (int a = 0; a < d; ++a) {
            y[a] += mu * kGaussX[idx[static_cast<std::size_t>(a)]];
            w *= w1[idx[static_cast<std::size_t>(a)]];
        }
        const Vec v = chart(y);
        if (acc.size() == 0) acc = Vec::Zero(v.size());
        acc += w * v;
        wsum += w;
        int a = 0;
        while (a < d && ++idx[static_cast<std::size_t>(a)] == 5) idx[static_cast<std::size_t>(a++)] = 0;
        if (a == d) break;
    }
    return acc / wsum;
}

BlendValue whitney_blend(const SampleStore& store, const Vec& q, const BlendOptions& opts) {
    if (q.size() != store.dim_base()) throw InputError("whitney_blend: query dimension mismatch");
    const double r = opts.radius > 0.0 ? opts.radius : 2.0 * (store.spacing() + opts.nu);
    if (!(r > 0.0)) throw InputError("whitney_blend: blend radius must be positive");
    const int n = store.order();
    const auto& S = store.samples();
    std::vector<std::size_t> idx;
    std::vector<double> logpsi;
    std::vector<Vec> grad;
    for (std::size_t i = 0; i < S.size(); ++i) {
        const Vec x = q - S[i].q;
        const double rho = x.norm();
        if (rho < 1e-12 * r) return {S[i].jet.eval(x), S[i].jet.derivative(x)};
        const double s = rho / r;
        if (s >= 1.0) continue;
        const double om = 1.0 - s * s;
        idx.push_back(i);
        logpsi.push_back(1.0 - 1.0 / om - 2.0 * (n + 1) * std::log(rho));
        const double dlog = (-2.0 * s / (om * om)) / r - 2.0 * (n + 1) / rho;
        grad.push_back(dlog * x / rho);
    }
    if (idx.empty()) throw DomainError("whitney_blend: query outside the sampled coverage");
    const double top = *std::max_element(logpsi.begin(), logpsi.end());
    std::vector<double> w(idx.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) sum += (w[k] = std::exp(logpsi[k] - top));
    Vec gbar = Vec::Zero(q.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        w[k] /= sum;
        gbar += w[k] * grad[k];
    }
    BlendValue out{Vec::Zero(store.dim_out()), Mat::Zero(store.dim_out(), q.size())};
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto& s = S[idx[k]];
        const Vec x = q - s.q;
        const Vec v = s.jet.eval(x);
        out.value += w[k] * v;
        out.derivative += w[k] * (s.jet.derivative(x) + v * (grad[k] - gbar).transpose());
    }
    return out;
}

ExtendedManifold::ExtendedManifold(SampleStore store, std::shared_ptr<const ManifoldChart> top, ExtensionConfig cfg)
    : store_(std::move(store)), top_(std::move(top)), cfg_(cfg) {
    if (!(cfg_.nu > 0.0)) throw InputError("ExtendedManifold: nu must be positive");
    if (!(cfg_.radius_factor > 0.0) || !(cfg_.fd_step > 0.0)) throw InputError("ExtendedManifold: bad configuration");
    if (store_.spacing() > 0.5 * cfg_.nu * (1.0 + 1e-9))
        throw PreconditionError("ExtendedManifold: sample spacing " + std::to_string(store_.spacing()) +
                                " exceeds nu / 2");
    if (top_ && (top_->N() != store_.dim_base() || top_->K() - top_->N() != store_.dim_out()))
        throw InputError("ExtendedManifold: top chart does not match the samples");
}

BlendValue ExtendedManifold::blend(const Vec& q) const {
    return whitney_blend(store_, q, BlendOptions{blend_radius(), cfg_.nu});
}

Vec ExtendedManifold::top_chart(const Vec& q) const {
    if (!top_) throw PreconditionError("ExtendedManifold: no top chart attached");
    return (*top_)(q);
}

Vec ExtendedManifold::mollified(const Vec& q) const {
    return mollify([this](const Vec& y) { return top_chart(y); }, mu(), q);
}

Vec ExtendedManifold::operator()(const Vec& q) const {
    const double r = rho(q);
    if (r == 0.0) return blend(q).value;
    if (r == 1.0) return mollified(q);
    return (1.0 - r) * blend(q).value + r * mollified(q);
}

Mat ExtendedManifold::derivative(const Vec& q, bool* analytic) const {
    if (base_distance(store_, q) < cfg_.nu * (1.0 - 1e-6)) {
        if (analytic) *analytic = true;
        return blend(q).derivative;
    }
    if (analytic) *analytic = false;
    Mat D(dim_out(), q.size());
    for (Eigen::Index a = 0; a < q.size(); ++a) {
        Vec e = Vec::Zero(q.size());
        e[a] = cfg_.fd_step;
        D.col(a) = ((*this)(q + e) - (*this)(q - e)) / (2.0 * cfg_.fd_step);
    }
    return D;
}

GraphMap graph_of(const ExtendedManifold& m) {
    return GraphMap{m.dim_base(), [&m](const Vec& q) { return m(q); }, [&m](const Vec& q) { return m.derivative(q); }};
}

Vec extended_if_rhs(const SemilinearProblem& prob, const GraphMap& graph, const Vec& u_base) {
    const int K = prob.K(), N = graph.N;
    if (u_base.size() != N) throw InputError("extended_if_rhs: base vector must have N entries");
    Vec full(K);
    full.head(N) = u_base;
    full.tail(K - N) = graph.value(u_base);
    return prob.F->apply(full).head(N);
}

Trajectory extended_if_solve(const SemilinearProblem& prob, const GraphMap& graph, const Vec& u0, double horizon,
                             const ForwardOptions& fo) {
    const Vec lam = prob.A.eigenvalues().head(graph.N);
    return forward_solve(lam, [&](const Vec& u) { return extended_if_rhs(prob, graph, u); }, u0, horizon, fo);
}

Vec modified_nonlinearity(const SemilinearProblem& prob, const GraphMap& graph, const Vec& u) {
    const int K = prob.K(), N = graph.N;
    if (u.size() != K) throw InputError("modified_nonlinearity: u must have K entries");
    const Vec uP = u.head(N);
    const Vec m = graph.value(uP);
    Vec full(K);
    full.head(N) = uP;
    full.tail(K - N) = m;
    const Vec PF = prob.F->apply(full).head(N);
    const Vec& lam = prob.A.eigenvalues();
    const Vec vel = PF - lam.head(N).cwiseProduct(uP);
    Vec out(K);
    out.head(N) = PF;
    out.tail(K - N) = graph.derivative(uP) * vel + lam.tail(K - N).cwiseProduct(m);
    return out;
}

double modified_invariance_defect(const SemilinearProblem& prob, const GraphMap& graph, const Vec& u_base0,
                                  double horizon, const ForwardOptions& fo) {
    const int K = prob.K(), N = graph.N;
    Vec u0(K);
    u0.head(N) = u_base0;
    u0.tail(K - N) = graph.value(u_base0);
    const Trajectory u = forward_solve(
        prob.A.eigenvalues(), [&](const Vec& x) { return modified_nonlinearity(prob, graph, x); }, u0, horizon, fo);
    double worst = 0.0;
    for (int j = 0; j < u.grid.nodes(); ++j) {
        const Vec x = u.at(j);
        worst = std::max(worst, (x.tail(K - N) - graph.value(x.head(N))).norm());
    }
    return worst;
}

void write_extension_bundle(const ExtendedManifold& m, const std::string& dir, const nlohmann::json& manifest_extra) {
    std::filesystem::create_directories(dir);
    const nlohmann::json samples = m.store().to_json();
    const nlohmann::json config = {{"nu", m.config().nu},
                                   {"mu", m.mu()},
                                   {"radius_factor", m.config().radius_factor},
                                   {"blend_radius", m.blend_radius()},
                                   {"fd_step", m.config().fd_step},
                                   {"kernel", "prod (1 - s^2)^3, 5-point Gauss-Legendre per axis"},
                                   {"cutoff", "quintic smoothstep of d / nu - 1"}};
    nlohmann::json manifest = manifest_extra;
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(config.dump() + samples.dump())));
    manifest["bundle_hash"] = hex;
    manifest["version"] = IMJET_VERSION;
    manifest["files"] = {"samples.json", "config.json"};
    auto put = [&](const std::string& name, const nlohmann::json& j) {
        std::ofstream os(std::filesystem::path(dir) / name);
        if (!os) throw InputError("write_extension_bundle: cannot write " + name);
        os << j.dump(2) << '\n';
    };
    put("samples.json", samples);
    put("config.json", config);
    put("manifest.json", manifest);
}

SampleStore read_extension_samples(const std::string& dir) {
    std::ifstream is(std::filesystem::path(dir) / "samples.json");
    if (!is) throw InputError("read_extension_samples: cannot open samples.json in " + dir);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("read_extension_samples: ") + e.what());
    }
    return SampleStore::from_json(j);
}

} // namespace imjet
