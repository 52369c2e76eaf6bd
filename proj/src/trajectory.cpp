#include "imjet/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>

namespace imjet {

int TimeGrid::nearest(double t) const {
    const long j = std::lround((t - t0) / dt);
    return static_cast<int>(std::clamp<long>(j, 0, intervals));
}

TimeGrid TimeGrid::covering(double a, double b, double max_dt) {
    if (!(b > a) || !(max_dt > 0.0)) throw InputError("TimeGrid::covering: need a < b and max_dt > 0");
    const int m = std::max(1, static_cast<int>(std::ceil((b - a) / max_dt - 1e-9)));
    return TimeGrid{a, (b - a) / m, m};
}

Trajectory::Trajectory(TimeGrid g, RowMat v, double th) : grid(g), values(std::move(v)), theta(th) {
    if (values.rows() != grid.nodes()) throw InputError("Trajectory: row count != grid nodes");
}

Vec Trajectory::at_zero() const {
    const int j = grid.nearest(0.0);
    if (std::abs(grid.t(j)) > 1e-9 * std::max(1.0, grid.dt)) throw InputError("Trajectory::at_zero: grid does not contain t = 0");
    return at(j);
}

Vec Trajectory::sample(double t) const {
    const double x = (t - grid.t0) / grid.dt;
    if (x < -1e-9 || x > grid.intervals + 1e-9) throw DomainError("Trajectory::sample: time outside grid");
    if (grid.intervals < 3) {
        const int j = std::clamp(static_cast<int>(std::floor(x)), 0, grid.intervals - 1);
        const double w = x - j;
        return ((1 - w) * values.row(j) + w * values.row(j + 1)).transpose();
    }
    int j0 = static_cast<int>(std::floor(x)) - 1;
    j0 = std::clamp(j0, 0, grid.intervals - 3);
    Vec out = Vec::Zero(dim());
    for (int a = 0; a < 4; ++a) {
        double w = 1.0;
        for (int b = 0; b < 4; ++b)
            if (b != a) w *= (x - (j0 + b)) / static_cast<double>(a - b);
        out += w * values.row(j0 + a).transpose();
    }
    return out;
}

Vec trapezoid_weights(const TimeGrid& g) {
    Vec w = Vec::Constant(g.nodes(), g.dt);
    w[0] *= 0.5;
    w[g.intervals] *= 0.5;
    return w;
}

double weighted_l2_norm(const TimeGrid& g, const RowMat& u, double theta) {
    const Vec w = trapezoid_weights(g);
    double s = 0.0;
    for (int j = 0; j < g.nodes(); ++j) s += w[j] * std::exp(2.0 * theta * g.t(j)) * u.row(j).squaredNorm();
    return std::sqrt(s);
}

double weighted_l2_norm(const Trajectory& u, double theta) { return weighted_l2_norm(u.grid, u.values, theta); }

double weighted_sup_norm(const TimeGrid& g, const RowMat& u, double theta) {
    double s = 0.0;
    for (int j = 0; j < g.nodes(); ++j) s = std::max(s, std::exp(theta * g.t(j)) * u.row(j).norm());
    return s;
}

double weighted_sup_norm(const Trajectory& u, double theta) { return weighted_sup_norm(u.grid, u.values, theta); }

RowMat weighted_values(const TimeGrid& g, const RowMat& u, double theta) {
    RowMat r = u;
    for (int j = 0; j < g.nodes(); ++j) r.row(j) *= std::exp(theta * g.t(j));
    return r;
}

void write_csv(const Trajectory& u, std::ostream& os) {
    os << "t";
    for (int k = 1; k <= u.dim(); ++k) os << ",u" << k;
    os << '\n' << std::setprecision(17);
    for (int j = 0; j < u.grid.nodes(); ++j) {
        os << u.grid.t(j);
        for (int k = 0; k < u.dim(); ++k) os << ',' << u.values(j, k);
        os << '\n';
    }
}

void write_csv(const Trajectory& u, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw InputError("write_csv: cannot open " + path);
    write_csv(u, f);
}

namespace {
constexpr char kMagic[8] = {'I', 'M', 'J', 'T', 'R', 'A', 'J', '1'};
}

void write_binary(const Trajectory& u, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("write_binary: cannot open " + path);
    const std::int64_t k = u.dim(), m = u.grid.nodes();
    const double hdr[3] = {u.theta, u.grid.t0, u.grid.t_end()};
    f.write(kMagic, 8);
    f.write(reinterpret_cast<const char*>(&k), sizeof k);
    f.write(reinterpret_cast<const char*>(&m), sizeof m);
    f.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
    f.write(reinterpret_cast<const char*>(u.values.data()), static_cast<std::streamsize>(sizeof(double) * k * m));
}

Trajectory read_binary(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("read_binary: cannot open " + path);
    char magic[8];
    std::int64_t k = 0, m = 0;
    double hdr[3];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kMagic, 8) != 0) throw InputError("read_binary: bad magic in " + path);
    f.read(reinterpret_cast<char*>(&k), sizeof k);
    f.read(reinterpret_cast<char*>(&m), sizeof m);
    f.read(reinterpret_cast<char*>(hdr), sizeof hdr);
    if (!f || k <= 0 || m < 2) throw InputError("read_binary: bad header in " + path);
    TimeGrid g{hdr[1], (hdr[2] - hdr[1]) / static_cast<double>(m - 1), static_cast<int>(m - 1)};
    RowMat v(m, k);
    f.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * k * m));
    if (!f) throw InputError("read_binary: truncated data in " + path);
    return Trajectory(g, std::move(v), hdr[0]);
}

} // namespace imjet
