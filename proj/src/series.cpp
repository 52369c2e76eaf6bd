#include "imjet/series.hpp"

#include <cmath>

namespace imjet {

Series::Series(int order, double c0) : n_(order) {
    if (order < 0 || order > kMaxOrder) throw CapabilityError("Series: order outside [0, 7]");
    v_[0] = c0;
}

Series Series::variable(int order, double x0) {
    Series s(order, x0);
    if (order >= 1) s.v_[1] = 1.0;
    return s;
}

bool Series::constant_value() const {
    for (int k = 1; k <= n_; ++k)
        if (v_[k] != 0.0) return false;
    for (int k = 0; k <= n_; ++k)
        if (d_[k] != 0.0) return false;
    return true;
}

Series& Series::operator+=(const Series& o) {
    for (int k = 0; k <= n_; ++k) {
        v_[k] += o.v_[k];
        d_[k] += o.d_[k];
    }
    return *this;
}

Series& Series::operator-=(const Series& o) {
    for (int k = 0; k <= n_; ++k) {
        v_[k] -= o.v_[k];
        d_[k] -= o.d_[k];
    }
    return *this;
}

Series& Series::operator*=(double s) {
    for (int k = 0; k <= n_; ++k) {
        v_[k] *= s;
        d_[k] *= s;
    }
    return *this;
}

Series& Series::operator+=(double c) {
    v_[0] += c;
    return *this;
}

Series operator+(Series a, const Series& b) { return a += b; }
Series operator-(Series a, const Series& b) { return a -= b; }
Series operator-(Series a) { return a *= -1.0; }
Series operator*(double s, Series a) { return a *= s; }
Series operator+(Series a, double c) { return a += c; }

Series operator*(const Series& a, const Series& b) {
    Series r(a.n_, 0.0);
    for (int k = 0; k <= a.n_; ++k) {
        double v = 0.0, d = 0.0;
        for (int j = 0; j <= k; ++j) {
            v += a.v_[j] * b.v_[k - j];
            d += a.d_[j] * b.v_[k - j] + a.v_[j] * b.d_[k - j];
        }
        r.v_[k] = v;
        r.d_[k] = d;
    }
    return r;
}

Series operator/(const Series& a, const Series& b) {
    if (b.v_[0] == 0.0) throw DomainError("Series: division by a series with zero constant term");
    Series q(a.n_, 0.0);
    for (int k = 0; k <= a.n_; ++k) {
        double v = a.v_[k];
        for (int j = 1; j <= k; ++j) v -= b.v_[j] * q.v_[k - j];
        q.v_[k] = v / b.v_[0];
    }
    // (a' - q b') / b
    for (int k = 0; k <= a.n_; ++k) {
        double num = a.d_[k];
        for (int j = 0; j <= k; ++j) num -= q.v_[j] * b.d_[k - j];
        for (int j = 1; j <= k; ++j) num -= b.v_[j] * q.d_[k - j];
        q.d_[k] = num / b.v_[0];
    }
    return q;
}

Series exp(const Series& a) {
    Series e(a.n_, std::exp(a.v_[0]));
    for (int k = 1; k <= a.n_; ++k) {
        double s = 0.0;
        for (int j = 1; j <= k; ++j) s += j * a.v_[j] * e.v_[k - j];
        e.v_[k] = s / k;
    }
    for (int k = 0; k <= a.n_; ++k) {
        double d = 0.0;
        for (int j = 0; j <= k; ++j) d += e.v_[j] * a.d_[k - j];
        e.d_[k] = d;
    }
    return e;
}

Series log(const Series& a) {
    if (!(a.v_[0] > 0.0)) throw DomainError("Series: log of a series with nonpositive constant term");
    Series l(a.n_, std::log(a.v_[0]));
    for (int k = 1; k <= a.n_; ++k) {
        double s = k * a.v_[k];
        for (int j = 1; j < k; ++j) s -= j * l.v_[j] * a.v_[k - j];
        l.v_[k] = s / (k * a.v_[0]);
    }
    // a' / a
    for (int k = 0; k <= a.n_; ++k) {
        double num = a.d_[k];
        for (int j = 1; j <= k; ++j) num -= a.v_[j] * l.d_[k - j];
        l.d_[k] = num / a.v_[0];
    }
    return l;
}

Series abs(const Series& a) {
    if (a[0] == 0.0) throw DomainError("Series: abs at a zero constant term");
    return a[0] > 0.0 ? a : -a;
}

namespace {
double bump_tail(double y) { return y > 0.0 ? std::exp(-1.0 / y) : 0.0; }
} // namespace

double smoothstep_inf(double y) {
    if (y <= 0.0) return 0.0;
    if (y >= 1.0) return 1.0;
    const double a = bump_tail(y), b = bump_tail(1.0 - y);
    return a / (a + b);
}

double smoothstep_inf_derivative(double y) {
    if (y <= 0.0 || y >= 1.0) return 0.0;
    return smoothstep_inf(Series::variable(1, y))[1];
}

Series smoothstep_inf(const Series& y) {
    const int n = y.order();
    if (y[0] <= 0.0) return Series(n, 0.0);
    if (y[0] >= 1.0) return Series(n, 1.0);
    Series one_minus = -y + 1.0;
    Series a = exp(-(Series(n, 1.0) / y));
    Series b = exp(-(Series(n, 1.0) / one_minus));
    return a / (a + b);
}

double smoothstep5(double y) {
    if (y <= 0.0) return 0.0;
    if (y >= 1.0) return 1.0;
    return y * y * y * (10.0 + y * (-15.0 + 6.0 * y));
}

double smoothstep5_derivative(double y) {
    if (y <= 0.0 || y >= 1.0) return 0.0;
    return 30.0 * y * y * (1.0 - y) * (1.0 - y);
}

} // namespace imjet
