#pragma once

#include <Eigen/Dense>

#include "mkteq/errors.hpp"

namespace mkteq {

// Uniform time grid 0 = t_0 < t_1 < ... < t_K = T.
struct TimeGrid {
    int steps = 0;        // K
    double horizon = 0.0; // T

    TimeGrid() = default;
    TimeGrid(int num_steps, double T);

    int nodes() const { return steps + 1; }
    double dt() const { return horizon / steps; }
    // The endpoint is pinned so that t(steps) == horizon exactly.
    double t(int k) const { return k == steps ? horizon : k * horizon / steps; }

    bool operator==(const TimeGrid&) const = default;
};

// A d-dimensional path sampled on a TimeGrid, one row per node.
struct PathGrid {
    TimeGrid grid;
    Eigen::MatrixXd values;  // (K+1) x d

    PathGrid() = default;
    PathGrid(const TimeGrid& g, int dim)
        : grid(g), values(Eigen::MatrixXd::Zero(g.nodes(), dim)) {}
    PathGrid(const TimeGrid& g, Eigen::MatrixXd v);

    int dim() const { return static_cast<int>(values.cols()); }
    Eigen::VectorXd at(int k) const { return values.row(k).transpose(); }
    double max_abs() const { return values.size() == 0 ? 0.0 : values.cwiseAbs().maxCoeff(); }
};

void require_same_grid(const PathGrid& a, const PathGrid& b);
double max_abs_diff(const PathGrid& a, const PathGrid& b);

PathGrid operator+(const PathGrid& a, const PathGrid& b);
PathGrid operator-(const PathGrid& a, const PathGrid& b);
PathGrid operator*(double c, const PathGrid& a);

// Trapezoid rule for a scalar series sampled on the grid.
double trapezoid(const TimeGrid& g, const Eigen::VectorXd& f);

// Node-wise application of a constant matrix: out(k) = M * path(k).
PathGrid apply_matrix(const Eigen::MatrixXd& M, const PathGrid& path);

}  // namespace mkteq
