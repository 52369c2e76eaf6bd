#pragma once

#include "imjet/jet.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace imjet {

using VecFn = std::function<Vec(const Vec&)>;
using MixedFn = std::function<Vec(const Vec&, const Vec&)>;

/// J(xi) = sum_k P_k(xi)/k!.
Vec eval_polynomial(const Jet& jet, const Vec& xi);

/// Multilinear value M_P(xi_1..xi_k) of a degree-k homogeneous polynomial,
/// via the 2^k-term signed polarization sum with base point 0.
Vec polarize(const VecFn& homogeneous, int degree, std::span<const Vec> args);
Vec polarize(const SymMultiForm& form, std::span<const Vec> args);

/// Highest order accepted by extract_components unless overridden.
inline constexpr int kDefaultMaxExtractOrder = 6;

/// Weights a_kj with P_k(xi) = sum_j a_kj P((j/n) xi) for a polynomial P of degree <= n.
Mat component_weights(int n);

/// Homogeneous components P_0..P_n of a polynomial evaluator of degree <= n.
Jet extract_components(const VecFn& poly, int n, int dim_in, int dim_out,
                       int max_order = kDefaultMaxExtractOrder);

/// Least-squares symmetric form of degree k from diagonal values P(dirs[i]) = values.col(i).
SymMultiForm fit_homogeneous(int degree, std::span<const Vec> dirs, const Mat& values);

/// (xi, eta) -> P({xi}^j, {eta}^(n-j)).
MixedFn binomial_expand(const SymMultiForm& form, int j);

/// outer(inner(xi)) with all monomials of degree > order dropped.
Jet compose_truncate(const Jet& outer, const Jet& inner, int order);

/// form[inners[0](xi), ..., inners[k-1](xi)] with all monomials of degree > order dropped.
Jet compose_truncate(const SymMultiForm& form, std::span<const Jet> inners, int order);

/// || J_p(xi + delta) - J_p1(xi) ||.
double compat_residual(const Jet& jet_at_p1, const Jet& jet_at_p, const Vec& delta, const Vec& xi);

/// Degree-l defect D_l(xi) = P_l(p1)[xi^l] - sum_{k<=n-l} P_{l+k}(p)[xi^l, delta^k]/k!.
Vec compat_component_defect(const Jet& jet_at_p1, const Jet& jet_at_p, const Vec& delta, int l, const Vec& xi);

/// max over samples of |D_l(xi)| / |xi|^l.
double compat_residual_components(const Jet& jet_at_p1, const Jet& jet_at_p, const Vec& delta, int l,
                                  std::span<const Vec> xi_samples);

struct ConverseTaylorResult {
    double slope = 0.0;
    bool exact = false; // every residual below the noise floor; slope is +inf
    std::vector<double> radii;
    std::vector<double> residuals;
};

inline constexpr double kResidualFloor = 1e-14;

/// Log-log slope of max_dir |F(u + r e) - J_u(r e)| against r.
ConverseTaylorResult converse_taylor_check(const VecFn& f, const Vec& u, const Jet& jet_at_u,
                                           std::span<const double> radii, std::span<const Vec> directions);

/// Least-squares slope of log(y) against log(x), ignoring pairs with y <= floor.
double loglog_slope(std::span<const double> x, std::span<const double> y, double floor = 0.0);

/// Sup of |P(xi)| over sampled unit directions (deterministic for a given seed).
double form_norm(const SymMultiForm& form, int samples = 256, std::uint64_t seed = 0x5eed);

} // namespace imjet
