#include "imjet/symform.hpp"

#include "imjet/multiindex.hpp"

#include <algorithm>

namespace imjet {

SymMultiForm::SymMultiForm(int degree, int dim_in, int dim_out)
    : degree_(degree), dim_in_(dim_in), dim_out_(dim_out),
      coeffs_(Mat::Zero(dim_out, static_cast<Eigen::Index>(num_multisets(dim_in, degree)))) {
    if (degree < 0 || dim_in < 0 || dim_out < 0) throw InputError("SymMultiForm: negative size");
}

SymMultiForm::SymMultiForm(int degree, int dim_in, int dim_out, Mat coeffs)
    : SymMultiForm(degree, dim_in, dim_out) {
    if (coeffs.rows() != coeffs_.rows() || coeffs.cols() != coeffs_.cols())
        throw InputError("SymMultiForm: coefficient shape does not match (dim_out, #multisets)");
    coeffs_ = std::move(coeffs);
}

double SymMultiForm::entry(int out, std::vector<int> tuple) const {
    std::sort(tuple.begin(), tuple.end());
    return coeffs_(out, static_cast<Eigen::Index>(multiset_rank(tuple, dim_in_)));
}

void SymMultiForm::set_entry(int out, std::vector<int> tuple, double value) {
    if (static_cast<int>(tuple.size()) != degree_) throw InputError("set_entry: tuple length != degree");
    std::sort(tuple.begin(), tuple.end());
    coeffs_(out, static_cast<Eigen::Index>(multiset_rank(tuple, dim_in_))) = value;
}

Vec SymMultiForm::eval(const Vec& xi) const {
    if (xi.size() != dim_in_) throw InputError("SymMultiForm::eval: dimension mismatch");
    Vec out = Vec::Zero(dim_out_);
    const auto tuples = multisets(dim_in_, degree_);
    for (std::size_t c = 0; c < tuples.size(); ++c) {
        double m = permutation_count(tuples[c], dim_in_);
        for (int i : tuples[c]) m *= xi[i];
        out += m * coeffs_.col(static_cast<Eigen::Index>(c));
    }
    return out;
}

Vec SymMultiForm::eval_multi(std::span<const Vec> args) const {
    if (static_cast<int>(args.size()) != degree_) throw InputError("eval_multi: argument count != degree");
    for (const auto& a : args)
        if (a.size() != dim_in_) throw InputError("eval_multi: dimension mismatch");
    Vec out = Vec::Zero(dim_out_);
    if (degree_ == 0) return coeffs_.col(0);
    // Walk all index tuples in d^k, accumulating the product of argument entries.
    std::vector<int> idx(degree_, 0), sorted(degree_);
    while (true) {
        double w = 1.0;
        for (int r = 0; r < degree_; ++r) w *= args[r][idx[r]];
        if (w != 0.0) {
            sorted = idx;
            std::sort(sorted.begin(), sorted.end());
            out += w * coeffs_.col(static_cast<Eigen::Index>(multiset_rank(sorted, dim_in_)));
        }
        int r = degree_ - 1;
        while (r >= 0 && idx[r] == dim_in_ - 1) idx[r--] = 0;
        if (r < 0) break;
        ++idx[r];
    }
    return out;
}

Mat SymMultiForm::monomial_coeffs() const {
    Mat c = coeffs_;
    const auto tuples = multisets(dim_in_, degree_);
    for (std::size_t j = 0; j < tuples.size(); ++j)
        c.col(static_cast<Eigen::Index>(j)) *= permutation_count(tuples[j], dim_in_);
    return c;
}

SymMultiForm SymMultiForm::from_monomial_coeffs(int degree, int dim_in, const Mat& c) {
    SymMultiForm f(degree, dim_in, static_cast<int>(c.rows()));
    if (c.cols() != f.coeffs_.cols()) throw InputError("from_monomial_coeffs: wrong column count");
    const auto tuples = multisets(dim_in, degree);
    for (std::size_t j = 0; j < tuples.size(); ++j)
        f.coeffs_.col(static_cast<Eigen::Index>(j)) =
            c.col(static_cast<Eigen::Index>(j)) / permutation_count(tuples[j], dim_in);
    return f;
}

SymMultiForm& SymMultiForm::operator+=(const SymMultiForm& o) {
    if (o.degree_ != degree_ || o.dim_in_ != dim_in_ || o.dim_out_ != dim_out_)
        throw InputError("SymMultiForm +=: shape mismatch");
    coeffs_ += o.coeffs_;
    return *this;
}

SymMultiForm& SymMultiForm::operator*=(double s) {
    coeffs_ *= s;
    return *this;
}

SymMultiForm operator+(SymMultiForm a, const SymMultiForm& b) { return a += b; }
SymMultiForm operator-(SymMultiForm a, const SymMultiForm& b) {
    SymMultiForm nb = b;
    nb *= -1.0;
    return a += nb;
}
SymMultiForm operator*(double s, SymMultiForm a) { return a *= s; }

} // namespace imjet
