#pragma once

#include "imjet/common.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace imjet {

/// Diagonal positive operator with nondecreasing eigenvalues lambda_1..lambda_K
/// (modes are coordinate axes; indices below are 1-based as in lambda_N).
class SpectralOperator {
public:
    explicit SpectralOperator(std::vector<double> eigenvalues, std::string label = "list");

    /// lambda_k = a k^2.
    static SpectralOperator squares(int K, double a = 1.0);
    /// lambda_k = 2^(k-1).
    static SpectralOperator powers_of_two(int K);

    int size() const { return static_cast<int>(lambda_.size()); }
    double lambda(int k) const;
    const Vec& eigenvalues() const { return lambda_; }
    const std::string& label() const { return label_; }

private:
    Vec lambda_;
    std::string label_;
};

/// P_N u: keep modes 1..N.
Vec project_low(const Vec& u, int N);
/// Q_N u: keep modes N+1..K.
Vec project_high(const Vec& u, int N);

/// Smallest N with lambda_{N+1} - lambda_N > 2L, if any within the truncation.
std::optional<int> first_gap_index(const SpectralOperator& A, double L);

/// lambda_{N+1} - (n + eps) lambda_N > (n + 1 + eps) L.
bool check_holder_gap(const SpectralOperator& A, int N, double L, int n, double eps);

struct LadderLevel {
    int N = 0;
    double gap = 0.0;       // lambda_{N+1} - lambda_N
    double window_lo = 0.0; // lambda_N + L
    double window_hi = 0.0; // lambda_{N+1} - L
    double theta = 0.0;
};

struct LadderOptions {
    double epsilon = 0.05;
    /// K must be at least margin_factor * N_n.
    double margin_factor = 2.0;
    /// Strict inequalities must hold with at least this slack.
    double min_slack = 1e-9;
};

struct GapLadder {
    double L = 0.0;
    double epsilon = 0.0;
    std::vector<LadderLevel> levels;

    int depth() const { return static_cast<int>(levels.size()); }
    const LadderLevel& level(int k) const { return levels.at(k - 1); } // 1-based
    /// Weight exponent of the degree-m jet component at level k: theta_k + (m-1) theta_{k-1}.
    double jet_exponent(int k, int m) const;
    nlohmann::json to_json() const;
};

/// Levels N_1 < ... < N_n: N_1 from the first gap, N_2 from
/// lambda_{N+1} - lambda_N - lambda_{N_1} > 3L, and N_{k+1} (k >= 2) from
/// lambda_N + L + k (lambda_{N_k+1} - L) < lambda_{N+1} - L, each minimal.
/// Thetas start at window midpoints; a lower level is shrunk toward its window's
/// lower end when the next level needs room; epsilon is halved until every
/// inequality holds with the required slack. Throws InfeasibleLadder naming the
/// first failing level.
GapLadder gap_ladder(const SpectralOperator& A, double L, int n, const LadderOptions& opts = {});

} // namespace imjet
