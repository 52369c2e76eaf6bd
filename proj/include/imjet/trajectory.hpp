#pragma once

#include "imjet/common.hpp"

#include <iosfwd>
#include <string>

namespace imjet {

/// Uniform grid t_j = t0 + j dt, j = 0..intervals.
struct TimeGrid {
    double t0 = 0.0;
    double dt = 1.0;
    int intervals = 0;

    int nodes() const { return intervals + 1; }
    double t(int j) const { return t0 + j * dt; }
    double t_end() const { return t0 + intervals * dt; }
    /// Index of the node closest to t.
    int nearest(double t) const;
    /// Uniform grid on [a, b] with step <= max_dt.
    static TimeGrid covering(double a, double b, double max_dt);
    bool operator==(const TimeGrid& o) const { return t0 == o.t0 && dt == o.dt && intervals == o.intervals; }
};

/// Vector path sampled on a grid (one row per node), with the weight exponent theta
/// of the space it was built in.
struct Trajectory {
    TimeGrid grid;
    RowMat values;
    double theta = 0.0;

    Trajectory() = default;
    Trajectory(TimeGrid g, int dim, double th = 0.0) : grid(g), values(RowMat::Zero(g.nodes(), dim)), theta(th) {}
    Trajectory(TimeGrid g, RowMat v, double th = 0.0);

    int dim() const { return static_cast<int>(values.cols()); }
    Vec at(int j) const { return values.row(j).transpose(); }
    /// Value at the node nearest to t = 0 (the grid is expected to contain 0).
    Vec at_zero() const;
    /// Cubic Lagrange interpolation between nodes.
    Vec sample(double t) const;
};

/// Trapezoidal weights of the grid.
Vec trapezoid_weights(const TimeGrid& g);
/// sqrt(int e^{2 theta t} |u(t)|^2 dt) by the trapezoidal rule.
double weighted_l2_norm(const TimeGrid& g, const RowMat& u, double theta);
double weighted_l2_norm(const Trajectory& u, double theta);
/// max_j e^{theta t_j} |u(t_j)|.
double weighted_sup_norm(const TimeGrid& g, const RowMat& u, double theta);
double weighted_sup_norm(const Trajectory& u, double theta);
/// Rows scaled by e^{theta t_j}.
RowMat weighted_values(const TimeGrid& g, const RowMat& u, double theta);

/// CSV with header "t,u1,...,uK".
void write_csv(const Trajectory& u, std::ostream& os);
void write_csv(const Trajectory& u, const std::string& path);

/// Binary cache: 8-byte magic "IMJTRAJ1", int64 K, int64 nodes, double theta,
/// double t0, double t_end, then nodes*K row-major doubles (little-endian host order).
void write_binary(const Trajectory& u, const std::string& path);
Trajectory read_binary(const std::string& path);

} // namespace imjet
