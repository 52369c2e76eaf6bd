#pragma once

#include "imjet/common.hpp"

#include <array>

namespace imjet {

/// Truncated power series in one parameter s, carried together with a tangent
/// series: a value a(s) + eps*a'(s) with eps^2 = 0. The tangent part propagates
/// the linearization F'(x(s)) y(s) alongside F(x(s)).
class Series {
public:
    static constexpr int kMaxOrder = 7;
    using Coeffs = std::array<double, kMaxOrder + 1>;

    Series() = default;
    Series(int order, double c0);

    /// x0 + s with zero tangent.
    static Series variable(int order, double x0);

    int order() const { return n_; }
    double& operator[](int k) { return v_[k]; }
    double operator[](int k) const { return v_[k]; }
    double& tangent(int k) { return d_[k]; }
    double tangent(int k) const { return d_[k]; }
    bool constant_value() const;

    Series& operator+=(const Series& o);
    Series& operator-=(const Series& o);
    Series& operator*=(double s);
    Series& operator+=(double c);

private:
    friend Series operator*(const Series& a, const Series& b);
    friend Series operator/(const Series& a, const Series& b);
    friend Series exp(const Series& a);
    friend Series log(const Series& a);

    int n_ = 0;
    Coeffs v_{};
    Coeffs d_{};
};

Series operator+(Series a, const Series& b);
Series operator-(Series a, const Series& b);
Series operator-(Series a);
Series operator*(double s, Series a);
Series operator+(Series a, double c);
Series operator*(const Series& a, const Series& b);
Series operator/(const Series& a, const Series& b);
Series exp(const Series& a);
Series log(const Series& a);
/// |a| for a(0) != 0.
Series abs(const Series& a);

/// C-infinity step: 0 for y <= 0, 1 for y >= 1, S(y) + S(1 - y) = 1.
double smoothstep_inf(double y);
double smoothstep_inf_derivative(double y);
Series smoothstep_inf(const Series& y);

/// Quintic smoothstep on [0,1] (C^2 at the seams), clamped outside.
double smoothstep5(double y);
double smoothstep5_derivative(double y);

} // namespace imjet
