#pragma once

#include "imjet/common.hpp"

#include <span>
#include <vector>

namespace imjet {

/// Symmetric k-linear map R^dim_in x ... x R^dim_in -> R^dim_out.
///
/// Column c of the coefficient matrix holds the tensor entry T[i1..ik] for the
/// c-th nondecreasing index tuple in graded-lex order; the remaining entries
/// follow by symmetry, so symmetry is structural.
class SymMultiForm {
public:
    SymMultiForm() = default;
    SymMultiForm(int degree, int dim_in, int dim_out);
    SymMultiForm(int degree, int dim_in, int dim_out, Mat coeffs);

    int degree() const { return degree_; }
    int dim_in() const { return dim_in_; }
    int dim_out() const { return dim_out_; }
    const Mat& coeffs() const { return coeffs_; }
    Mat& coeffs() { return coeffs_; }

    /// Entry T[tuple] (any ordering of the tuple).
    double entry(int out, std::vector<int> tuple) const;
    void set_entry(int out, std::vector<int> tuple, double value);

    /// Homogeneous polynomial P(xi) = T[xi, ..., xi].
    Vec eval(const Vec& xi) const;

    /// Multilinear evaluation T[args[0], ..., args[k-1]].
    Vec eval_multi(std::span<const Vec> args) const;

    /// Monomial coefficients c_alpha with P(xi) = sum_alpha c_alpha xi^alpha (columns in graded-lex order).
    Mat monomial_coeffs() const;
    static SymMultiForm from_monomial_coeffs(int degree, int dim_in, const Mat& c);

    SymMultiForm& operator+=(const SymMultiForm& o);
    SymMultiForm& operator*=(double s);

private:
    int degree_ = 0;
    int dim_in_ = 0;
    int dim_out_ = 0;
    Mat coeffs_;
};

SymMultiForm operator+(SymMultiForm a, const SymMultiForm& b);
SymMultiForm operator-(SymMultiForm a, const SymMultiForm& b);
SymMultiForm operator*(double s, SymMultiForm a);

} // namespace imjet
