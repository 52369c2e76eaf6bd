#include "imjet/spectral.hpp"

#include <cmath>

namespace imjet {

SpectralOperator::SpectralOperator(std::vector<double> eigenvalues, std::string label)
    : lambda_(Eigen::Map<Vec>(eigenvalues.data(), static_cast<Eigen::Index>(eigenvalues.size()))),
      label_(std::move(label)) {
    if (lambda_.size() < 2) throw InputError("SpectralOperator: need at least two modes");
    for (Eigen::Index i = 0; i < lambda_.size(); ++i) {
        if (!(lambda_[i] > 0.0)) throw InputError("SpectralOperator: eigenvalues must be positive");
        if (i > 0 && lambda_[i] < lambda_[i - 1]) throw InputError("SpectralOperator: eigenvalues must be nondecreasing");
    }
}

SpectralOperator SpectralOperator::squares(int K, double a) {
    if (!(a > 0.0)) throw InputError("SpectralOperator::squares: a must be positive");
    std::vector<double> l(K);
    for (int k = 1; k <= K; ++k) l[k - 1] = a * k * k;
    return SpectralOperator(std::move(l), "a*k^2");
}

SpectralOperator SpectralOperator::powers_of_two(int K) {
    std::vector<double> l(K);
    for (int k = 1; k <= K; ++k) l[k - 1] = std::ldexp(1.0, k - 1);
    return SpectralOperator(std::move(l), "2^(k-1)");
}

double SpectralOperator::lambda(int k) const {
    if (k < 1 || k > size()) throw InputError("SpectralOperator: mode index " + std::to_string(k) + " out of range");
    return lambda_[k - 1];
}

Vec project_low(const Vec& u, int N) {
    if (N < 0 || N > u.size()) throw InputError("project_low: N out of range");
    Vec r = Vec::Zero(u.size());
    r.head(N) = u.head(N);
    return r;
}

Vec project_high(const Vec& u, int N) {
    if (N < 0 || N > u.size()) throw InputError("project_high: N out of range");
    Vec r = Vec::Zero(u.size());
    r.tail(u.size() - N) = u.tail(u.size() - N);
    return r;
}

std::optional<int> first_gap_index(const SpectralOperator& A, double L) {
    if (L < 0.0) throw InputError("first_gap_index: L must be nonnegative");
    for (int N = 1; N < A.size(); ++N)
        if (A.lambda(N + 1) - A.lambda(N) > 2.0 * L) return N;
    return std::nullopt;
}

bool check_holder_gap(const SpectralOperator& A, int N, double L, int n, double eps) {
    if (N < 1 || N >= A.size()) throw InputError("check_holder_gap: N out of range");
    return A.lambda(N + 1) - (n + eps) * A.lambda(N) > (n + 1 + eps) * L;
}

double GapLadder::jet_exponent(int k, int m) const {
    if (k < 1 || k > depth()) throw InputError("GapLadder::jet_exponent: level out of range");
    if (m < 1) throw InputError("GapLadder::jet_exponent: degree must be >= 1");
    if (m == 1) return level(k).theta;
    if (k == 1) throw CapabilityError("GapLadder::jet_exponent: level 1 carries only first-order jets");
    return level(k).theta + (m - 1) * level(k - 1).theta;
}

nlohmann::json GapLadder::to_json() const {
    nlohmann::json lv = nlohmann::json::array();
    for (const auto& l : levels)
        lv.push_back({{"N", l.N}, {"gap", l.gap}, {"theta_window", {l.window_lo, l.window_hi}}, {"theta", l.theta}});
    return {{"L", L}, {"epsilon", epsilon}, {"levels", lv}, {"feasible", true}};
}

namespace {

int next_level_dim(const SpectralOperator& A, double L, int k, int Nk, int N1) {
    // Level k+1 from level k (1-based k).
    for (int N = Nk + 1; N < A.size(); ++N) {
        const bool ok = (k == 1) ? A.lambda(N + 1) - A.lambda(N) - A.lambda(N1) > 3.0 * L
                                 : A.lambda(N) + L + k * (A.lambda(Nk + 1) - L) < A.lambda(N + 1) - L;
        if (ok) return N;
    }
    return -1;
}

} // namespace

GapLadder gap_ladder(const SpectralOperator& A, double L, int n, const LadderOptions& opts) {
    if (n < 1) throw InputError("gap_ladder: n must be >= 1");
    if (L < 0.0) throw InputError("gap_ladder: L must be nonnegative");
    std::vector<int> dims;
    const auto n1 = first_gap_index(A, L);
    if (!n1) throw InfeasibleLadder("gap_ladder: level 1 has no spectral gap within truncation K=" +
                                    std::to_string(A.size()));
    dims.push_back(*n1);
    for (int k = 1; k < n; ++k) {
        const int N = next_level_dim(A, L, k, dims.back(), dims.front());
        if (N < 0)
            throw InfeasibleLadder("gap_ladder: level " + std::to_string(k + 1) +
                                   " has no admissible N within truncation K=" + std::to_string(A.size()));
        dims.push_back(N);
    }
    if (A.size() < opts.margin_factor * dims.back())
        throw InfeasibleLadder("gap_ladder: truncation K=" + std::to_string(A.size()) + " below " +
                               std::to_string(opts.margin_factor) + " * N_" + std::to_string(n) + " = " +
                               std::to_string(opts.margin_factor * dims.back()));

    for (double eps = opts.epsilon; eps >= 1e-6; eps *= 0.5) {
        GapLadder lad;
        lad.L = L;
        lad.epsilon = eps;
        for (int N : dims) {
            LadderLevel l;
            l.N = N;
            l.gap = A.lambda(N + 1) - A.lambda(N);
            l.window_lo = A.lambda(N) + L;
            l.window_hi = A.lambda(N + 1) - L;
            lad.levels.push_back(l);
        }
        auto& lv = lad.levels;
        lv[0].theta = 0.5 * (lv[0].window_lo + lv[0].window_hi);
        bool ok = lv[0].window_hi - lv[0].window_lo > 2 * opts.min_slack;
        for (int k = 1; ok && k < n; ++k) {
            auto& prev = lv[k - 1];
            auto& cur = lv[k];
            auto upper = [&](double th_prev) { return cur.window_hi - k * th_prev - eps; };
            // Room for theta_{k+1}: (window_lo, upper).
            const double need = 4 * opts.min_slack;
            if (upper(prev.theta) - cur.window_lo <= need) {
                const double lo_prev = prev.window_lo + opts.min_slack;
                if (upper(lo_prev) - cur.window_lo <= need) {
                    ok = false;
                    break;
                }
                double a = 0.0, b = 1.0; // shrink factor: theta = lo + s (theta - lo)
                const double base = prev.theta;
                for (int it = 0; it < 60; ++it) {
                    const double s = 0.5 * (a + b);
                    const double th = lo_prev + s * (base - lo_prev);
                    if (upper(th) - cur.window_lo > need) a = s;
                    else b = s;
                }
                // Keep room comparable to the midpoint rule: aim for half the feasible range.
                prev.theta = lo_prev + 0.5 * a * (base - lo_prev);
            }
            cur.theta = 0.5 * (cur.window_lo + upper(prev.theta));
        }
        if (ok) return lad;
    }
    throw InfeasibleLadder("gap_ladder: no theta chain with positive slack (epsilon exhausted)");
}

} // namespace imjet
