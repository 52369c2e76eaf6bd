#include "imjet/jetcalc.hpp"

#include "imjet/multiindex.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace imjet {

Vec eval_polynomial(const Jet& jet, const Vec& xi) { return jet.eval(xi); }

Vec polarize(const VecFn& homogeneous, int degree, std::span<const Vec> args) {
    if (static_cast<int>(args.size()) != degree) throw InputError("polarize: argument count != degree");
    if (degree == 0) throw InputError("polarize: degree must be positive");
    const int dim = static_cast<int>(args[0].size());
    Vec acc;
    const unsigned long terms = 1ul << degree;
    for (unsigned long mask = 0; mask < terms; ++mask) {
        Vec x = Vec::Zero(dim);
        int sign = 1;
        for (int j = 0; j < degree; ++j) {
            if (mask & (1ul << j)) {
                x -= args[j];
                sign = -sign;
            } else {
                x += args[j];
            }
        }
        Vec v = homogeneous(x);
        if (acc.size() == 0) acc = Vec::Zero(v.size());
        acc += sign * v;
    }
    return acc / (static_cast<double>(terms) * factorial(degree));
}

Vec polarize(const SymMultiForm& form, std::span<const Vec> args) {
    if (static_cast<int>(args.size()) != form.degree()) throw InputError("polarize: argument count != degree");
    return polarize([&](const Vec& x) { return form.eval(x); }, form.degree(), args);
}

Mat component_weights(int n) {
    if (n < 1) throw InputError("component_weights: n must be >= 1");
    Mat v(n + 1, n + 1);
    for (int j = 0; j <= n; ++j)
        for (int k = 0; k <= n; ++k) v(j, k) = std::pow(static_cast<double>(j) / n, k);
    Mat inv = v.fullPivLu().inverse();
    for (int k = 0; k <= n; ++k) inv.row(k) *= factorial(k);
    return inv;
}

SymMultiForm fit_homogeneous(int degree, std::span<const Vec> dirs, const Mat& values) {
    if (dirs.empty()) throw InputError("fit_homogeneous: no directions");
    const int d = static_cast<int>(dirs[0].size());
    const auto tuples = multisets(d, degree);
    const auto nm = static_cast<Eigen::Index>(tuples.size());
    const auto np = static_cast<Eigen::Index>(dirs.size());
    if (values.cols() != np) throw InputError("fit_homogeneous: values/directions mismatch");
    if (np < nm) throw InputError("fit_homogeneous: fewer directions than monomials");
    Mat b(np, nm);
    for (Eigen::Index i = 0; i < np; ++i)
        for (Eigen::Index a = 0; a < nm; ++a) {
            double m = permutation_count(tuples[a], d);
            for (int idx : tuples[a]) m *= dirs[i][idx];
            b(i, a) = m;
        }
    Mat t = b.colPivHouseholderQr().solve(values.transpose());
    return SymMultiForm(degree, d, static_cast<int>(values.rows()), t.transpose());
}

Jet extract_components(const VecFn& poly, int n, int dim_in, int dim_out, int max_order) {
    if (n < 0) throw InputError("extract_components: negative order");
    if (n > max_order)
        throw CapabilityError("extract_components: order " + std::to_string(n) + " exceeds supported maximum " +
                              std::to_string(max_order));
    std::vector<SymMultiForm> comps;
    const Vec p0 = poly(Vec::Zero(dim_in));
    if (p0.size() != dim_out) throw InputError("extract_components: evaluator output dimension mismatch");
    comps.emplace_back(0, dim_in, dim_out, Mat(p0));
    if (n == 0) return Jet(std::move(comps));
    const Mat a = component_weights(n);
    for (int k = 1; k <= n; ++k) {
        const auto dirs = simplex_lattice(dim_in, k);
        Mat vals = Mat::Zero(dim_out, static_cast<Eigen::Index>(dirs.size()));
        for (std::size_t i = 0; i < dirs.size(); ++i) {
            Vec acc = a(k, 0) * p0;
            for (int j = 1; j <= n; ++j) acc += a(k, j) * poly((static_cast<double>(j) / n) * dirs[i]);
            vals.col(static_cast<Eigen::Index>(i)) = acc;
        }
        comps.push_back(fit_homogeneous(k, dirs, vals));
    }
    return Jet(std::move(comps));
}

MixedFn binomial_expand(const SymMultiForm& form, int j) {
    const int n = form.degree();
    if (j < 0 || j > n) throw InputError("binomial_expand: j out of range");
    return [form, j, n](const Vec& xi, const Vec& eta) {
        std::vector<Vec> args;
        for (int i = 0; i < j; ++i) args.push_back(xi);
        for (int i = j; i < n; ++i) args.push_back(eta);
        return form.eval_multi(args);
    };
}

namespace {

// Truncated dense polynomial in d variables: coefficient per monomial, grouped by degree.
struct ScalarPoly {
    int d = 0;
    int n = 0;
    std::vector<std::vector<double>> c; // c[k][rank]

    ScalarPoly(int dim, int order) : d(dim), n(order), c(order + 1) {
        for (int k = 0; k <= n; ++k) c[k].assign(num_multisets(d, k), 0.0);
    }
};

struct MonomialTables {
    int d, n;
    std::vector<std::vector<std::vector<int>>> tuples; // per degree
    MonomialTables(int dim, int order) : d(dim), n(order) {
        for (int k = 0; k <= n; ++k) tuples.push_back(multisets(d, k));
    }
};

ScalarPoly multiply(const ScalarPoly& a, const ScalarPoly& b, const MonomialTables& tab) {
    ScalarPoly r(a.d, a.n);
    std::vector<int> merged;
    for (int ka = 0; ka <= a.n; ++ka)
        for (std::size_t ia = 0; ia < a.c[ka].size(); ++ia) {
            const double ca = a.c[ka][ia];
            if (ca == 0.0) continue;
            for (int kb = 0; ka + kb <= a.n; ++kb)
                for (std::size_t ib = 0; ib < b.c[kb].size(); ++ib) {
                    const double cb = b.c[kb][ib];
                    if (cb == 0.0) continue;
                    merged.resize(ka + kb);
                    std::merge(tab.tuples[ka][ia].begin(), tab.tuples[ka][ia].end(), tab.tuples[kb][ib].begin(),
                               tab.tuples[kb][ib].end(), merged.begin());
                    r.c[ka + kb][multiset_rank(merged, a.d)] += ca * cb;
                }
        }
    return r;
}

// Scalar polynomials (one per output coordinate) of a jet, truncated at `order`.
std::vector<ScalarPoly> to_scalar_polys(const Jet& jet, int order) {
    std::vector<ScalarPoly> out(jet.dim_out(), ScalarPoly(jet.dim_in(), order));
    for (int k = 0; k <= std::min(order, jet.order()); ++k) {
        const Mat mc = jet.component(k).monomial_coeffs() / factorial(k);
        for (int o = 0; o < jet.dim_out(); ++o)
            for (Eigen::Index m = 0; m < mc.cols(); ++m) out[o].c[k][m] = mc(o, m);
    }
    return out;
}

Jet assemble(int d, int order, const std::vector<ScalarPoly>& polys) {
    const int m = static_cast<int>(polys.size());
    std::vector<SymMultiForm> comps;
    for (int k = 0; k <= order; ++k) {
        Mat mc(m, static_cast<Eigen::Index>(num_multisets(d, k)));
        for (int o = 0; o < m; ++o)
            for (Eigen::Index i = 0; i < mc.cols(); ++i) mc(o, i) = polys[o].c[k][i] * factorial(k);
        comps.push_back(SymMultiForm::from_monomial_coeffs(k, d, mc));
    }
    return Jet(std::move(comps));
}

void axpy(ScalarPoly& y, double a, const ScalarPoly& x) {
    for (int k = 0; k <= y.n; ++k)
        for (std::size_t i = 0; i < y.c[k].size(); ++i) y.c[k][i] += a * x.c[k][i];
}

ScalarPoly constant_one(int d, int n) {
    ScalarPoly p(d, n);
    p.c[0][0] = 1.0;
    return p;
}

} // namespace

Jet compose_truncate(const Jet& outer, const Jet& inner, int order) {
    if (outer.dim_in() != inner.dim_out()) throw InputError("compose_truncate: outer input != inner output dimension");
    if (order < 0) throw InputError("compose_truncate: negative order");
    const int d = inner.dim_in();
    const MonomialTables tab(d, order);
    const auto y = to_scalar_polys(inner, order);
    std::vector<ScalarPoly> out(outer.dim_out(), ScalarPoly(d, order));
    for (int k = 0; k <= outer.order(); ++k) {
        const SymMultiForm& f = outer.component(k);
        const auto tuples = multisets(outer.dim_in(), k);
        for (std::size_t t = 0; t < tuples.size(); ++t) {
            ScalarPoly prod = constant_one(d, order);
            for (int i : tuples[t]) prod = multiply(prod, y[i], tab);
            const double w = permutation_count(tuples[t], outer.dim_in()) / factorial(k);
            for (int o = 0; o < outer.dim_out(); ++o) {
                const double c = f.coeffs()(o, static_cast<Eigen::Index>(t));
                if (c != 0.0) axpy(out[o], w * c, prod);
            }
        }
    }
    return assemble(d, order, out);
}

Jet compose_truncate(const SymMultiForm& form, std::span<const Jet> inners, int order) {
    const int k = form.degree();
    if (static_cast<int>(inners.size()) != k) throw InputError("compose_truncate: need one inner jet per slot");
    if (k == 0) throw InputError("compose_truncate: degree-0 form has no slots");
    const int d = inners[0].dim_in();
    for (const auto& j : inners)
        if (j.dim_out() != form.dim_in() || j.dim_in() != d) throw InputError("compose_truncate: dimension mismatch");
    const MonomialTables tab(d, order);
    std::vector<std::vector<ScalarPoly>> ys;
    for (const auto& j : inners) ys.push_back(to_scalar_polys(j, order));
    std::vector<ScalarPoly> out(form.dim_out(), ScalarPoly(d, order));
    const int m = form.dim_in();
    std::vector<int> idx(k, 0), sorted(k);
    while (true) {
        sorted = idx;
        std::sort(sorted.begin(), sorted.end());
        const auto col = static_cast<Eigen::Index>(multiset_rank(sorted, m));
        ScalarPoly prod = constant_one(d, order);
        for (int r = 0; r < k; ++r) prod = multiply(prod, ys[r][idx[r]], tab);
        for (int o = 0; o < form.dim_out(); ++o) {
            const double c = form.coeffs()(o, col);
            if (c != 0.0) axpy(out[o], c, prod);
        }
        int r = k - 1;
        while (r >= 0 && idx[r] == m - 1) idx[r--] = 0;
        if (r < 0) break;
        ++idx[r];
    }
    return assemble(d, order, out);
}

double compat_residual(const Jet& jet_at_p1, const Jet& jet_at_p, const Vec& delta, const Vec& xi) {
    if (jet_at_p1.order() != jet_at_p.order() || jet_at_p1.dim_in() != jet_at_p.dim_in() ||
        jet_at_p1.dim_out() != jet_at_p.dim_out())
        throw InputError("compat_residual: jets differ in order or dimensions");
    if (delta.size() != jet_at_p.dim_in() || xi.size() != jet_at_p.dim_in())
        throw InputError("compat_residual: dimension mismatch");
    return (jet_at_p.eval(xi + delta) - jet_at_p1.eval(xi)).norm();
}

Vec compat_component_defect(const Jet& jet_at_p1, const Jet& jet_at_p, const Vec& delta, int l, const Vec& xi) {
    const int n = jet_at_p.order();
    if (l < 0 || l > n) throw InputError("compat_residual_components: l out of range");
    if (jet_at_p1.order() != n) throw InputError("compat_residual_components: order mismatch");
    const std::vector<Vec> args(l, xi);
    Vec d = jet_at_p1.component(l).eval_multi(args);
    for (int k = 0; k <= n - l; ++k) {
        std::vector<Vec> a(l, xi);
        for (int i = 0; i < k; ++i) a.push_back(delta);
        d -= jet_at_p.component(l + k).eval_multi(a) / factorial(k);
    }
    return d;
}

double compat_residual_components(const Jet& jet_at_p1, const Jet& jet_at_p, const Vec& delta, int l,
                                  std::span<const Vec> xi_samples) {
    if (xi_samples.empty()) throw InputError("compat_residual_components: no samples");
    double best = 0.0;
    for (const auto& xi : xi_samples) {
        const double s = std::pow(xi.norm(), l);
        if (s == 0.0) continue;
        best = std::max(best, compat_component_defect(jet_at_p1, jet_at_p, delta, l, xi).norm() / s);
    }
    return best;
}

double loglog_slope(std::span<const double> x, std::span<const double> y, double floor) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(y[i] > floor) || !(x[i] > 0)) continue;
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++m;
    }
    if (m < 2) return std::numeric_limits<double>::quiet_NaN();
    const double den = m * sxx - sx * sx;
    if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (m * sxy - sx * sy) / den;
}

ConverseTaylorResult converse_taylor_check(const VecFn& f, const Vec& u, const Jet& jet_at_u,
                                           std::span<const double> radii, std::span<const Vec> directions) {
    if (radii.size() < 8) throw InputError("converse_taylor_check: need at least 8 radii");
    const auto [mn, mx] = std::minmax_element(radii.begin(), radii.end());
    if (!(*mn > 0) || *mx / *mn < 100.0 * (1 - 1e-12))
        throw InputError("converse_taylor_check: radii must be positive and span at least 2 decades");
    if (directions.empty()) throw InputError("converse_taylor_check: no directions");
    ConverseTaylorResult res;
    for (double r : radii) {
        double worst = 0.0;
        for (const auto& e : directions) {
            const Vec xi = r * e.normalized();
            worst = std::max(worst, (f(u + xi) - jet_at_u.eval(xi)).norm());
        }
        res.radii.push_back(r);
        res.residuals.push_back(worst);
    }
    const bool all_small =
        std::all_of(res.residuals.begin(), res.residuals.end(), [](double v) { return v < kResidualFloor; });
    if (all_small) {
        res.exact = true;
        res.slope = std::numeric_limits<double>::infinity();
    } else {
        res.slope = loglog_slope(res.radii, res.residuals, kResidualFloor);
    }
    return res;
}

double form_norm(const SymMultiForm& form, int samples, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    double best = 0.0;
    for (int s = 0; s < samples; ++s) {
        Vec x(form.dim_in());
        for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = nd(gen);
        const double nx = x.norm();
        if (nx == 0.0) continue;
        best = std::max(best, form.eval(x / nx).norm());
    }
    return best;
}

} // namespace imjet
