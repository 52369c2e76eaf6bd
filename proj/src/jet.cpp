#include "imjet/jet.hpp"

#include "imjet/multiindex.hpp"

namespace imjet {

Jet::Jet(int order, int dim_in, int dim_out) : dim_in_(dim_in), dim_out_(dim_out) {
    if (order < 0) throw InputError("Jet: negative order");
    for (int k = 0; k <= order; ++k) components_.emplace_back(k, dim_in, dim_out);
}

Jet::Jet(std::vector<SymMultiForm> components) : components_(std::move(components)) {
    if (components_.empty()) throw InputError("Jet: needs at least the degree-0 component");
    dim_in_ = components_[0].dim_in();
    dim_out_ = components_[0].dim_out();
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const auto& c = components_[k];
        if (c.degree() != static_cast<int>(k) || c.dim_in() != dim_in_ || c.dim_out() != dim_out_)
            throw InputError("Jet: component degrees must be 0..n with equal dimensions");
    }
}

Vec Jet::eval(const Vec& xi) const {
    if (xi.size() != dim_in_) throw InputError("Jet::eval: dimension mismatch");
    Vec out = components_[0].coeffs().col(0);
    for (int k = 1; k <= order(); ++k) out += components_[k].eval(xi) / factorial(k);
    return out;
}

Mat Jet::derivative(const Vec& xi) const {
    if (xi.size() != dim_in_) throw InputError("Jet::derivative: dimension mismatch");
    Mat d = Mat::Zero(dim_out_, dim_in_);
    for (int k = 1; k <= order(); ++k) {
        std::vector<Vec> args(k, xi);
        for (int i = 0; i < dim_in_; ++i) {
            args[k - 1] = Vec::Unit(dim_in_, i);
            d.col(i) += components_[k].eval_multi(args) / factorial(k - 1);
        }
    }
    return d;
}

Jet Jet::truncate(int m) const {
    if (m < 0 || m > order()) throw InputError("Jet::truncate: order out of range");
    return Jet(std::vector<SymMultiForm>(components_.begin(), components_.begin() + m + 1));
}

Jet Jet::truncated_jet() const {
    Jet j = *this;
    j.components_[0].coeffs().setZero();
    return j;
}

nlohmann::json to_json(const SymMultiForm& f) {
    nlohmann::json flat = nlohmann::json::array();
    const Mat& c = f.coeffs();
    for (Eigen::Index o = 0; o < c.rows(); ++o)
        for (Eigen::Index m = 0; m < c.cols(); ++m) flat.push_back(c(o, m));
    return {{"degree", f.degree()}, {"coeffs", flat}};
}

nlohmann::json to_json(const Jet& j) {
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : j.components()) comps.push_back(to_json(c));
    return {{"order", j.order()},
            {"dim_in", j.dim_in()},
            {"dim_out", j.dim_out()},
            {"normalization", Jet::kNormalization},
            {"components", comps}};
}

SymMultiForm form_from_json(const nlohmann::json& j, int dim_in, int dim_out) {
    const int degree = j.at("degree").get<int>();
    SymMultiForm f(degree, dim_in, dim_out);
    const auto& flat = j.at("coeffs");
    const auto cols = f.coeffs().cols();
    if (static_cast<Eigen::Index>(flat.size()) != dim_out * cols)
        throw InputError("form_from_json: coefficient count mismatch");
    for (Eigen::Index o = 0; o < dim_out; ++o)
        for (Eigen::Index m = 0; m < cols; ++m) f.coeffs()(o, m) = flat[o * cols + m].get<double>();
    return f;
}

Jet jet_from_json(const nlohmann::json& j) {
    const int dim_in = j.at("dim_in").get<int>();
    const int dim_out = j.at("dim_out").get<int>();
    const int order = j.at("order").get<int>();
    const auto& comps = j.at("components");
    if (static_cast<int>(comps.size()) != order + 1) throw InputError("jet_from_json: component count != order+1");
    std::vector<SymMultiForm> forms;
    for (const auto& c : comps) forms.push_back(form_from_json(c, dim_in, dim_out));
    return Jet(std::move(forms));
}

} // namespace imjet
