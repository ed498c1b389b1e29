#include "mkteq/grid.hpp"

namespace mkteq {

TimeGrid::TimeGrid(int num_steps, double T) : steps(num_steps), horizon(T) {
    if (num_steps < 1) {
        throw BadDimension("TimeGrid: need at least one step");
    }
    if (!(T > 0.0)) {
        throw BadDimension("TimeGrid: horizon must be positive");
    }
}

PathGrid::PathGrid(const TimeGrid& g, Eigen::MatrixXd v) : grid(g), values(std::move(v)) {
    if (values.rows() != grid.nodes()) {
        throw GridMismatch("PathGrid: row count does not match grid nodes");
    }
}

void require_same_grid(const PathGrid& a, const PathGrid& b) {
    if (!(a.grid == b.grid) || a.dim() != b.dim()) {
        throw GridMismatch("paths live on different grids");
    }
}

double max_abs_diff(const PathGrid& a, const PathGrid& b) {
    require_same_grid(a, b);
    return (a.values - b.values).cwiseAbs().maxCoeff();
}

PathGrid operator+(const PathGrid& a, const PathGrid& b) {
    require_same_grid(a, b);
    return PathGrid(a.grid, a.values + b.values);
}

PathGrid operator-(const PathGrid& a, const PathGrid& b) {
    require_same_grid(a, b);
    return PathGrid(a.grid, a.values - b.values);
}

PathGrid operator*(double c, const PathGrid& a) { return PathGrid(a.grid, c * a.values); }

double trapezoid(const TimeGrid& g, const Eigen::VectorXd& f) {
    if (f.size() != g.nodes()) {
        throw GridMismatch("trapezoid: series length does not match grid");
    }
    const double dt = g.dt();
    double acc = 0.5 * (f(0) + f(f.size() - 1));
    for (int k = 1; k + 1 < f.size(); ++k) {
        acc += f(k);
    }
    return acc * dt;
}

PathGrid apply_matrix(const Eigen::MatrixXd& M, const PathGrid& path) {
    if (M.cols() != path.dim()) {
        throw DimensionMismatch("apply_matrix: matrix does not fit path dimension");
    }
    return PathGrid(path.grid, path.values * M.transpose());
}

}  // namespace mkteq
