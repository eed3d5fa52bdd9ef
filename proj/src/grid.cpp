#include "bds/grid.hpp"

#include "bds/errors.hpp"

#include <algorithm>
#include <cmath>

namespace bds {

Grid::Grid(int dimension, double box_radius, int points_per_axis)
    : dim_(dimension), R_(box_radius), n_(points_per_axis) {
    if (dim_ < 1 || dim_ > 3)
        throw EvaluationError("grid dimension must be 1, 2 or 3, got " + std::to_string(dim_));
    if (!(R_ > 0.0)) throw EvaluationError("grid box radius must be positive");
    if (n_ < 3) throw EvaluationError("grid needs at least 3 points per axis");
    h_ = 2.0 * R_ / static_cast<double>(n_ - 1);
    size_ = 1;
    for (int a = 0; a < dim_; ++a) size_ *= static_cast<std::size_t>(n_);
}

std::size_t Grid::stride(int axis) const {
    std::size_t s = 1;
    for (int a = 0; a < axis; ++a) s *= static_cast<std::size_t>(n_);
    return s;
}

void Grid::node(std::size_t flat, std::span<double> out) const {
    for (int a = 0; a < dim_; ++a) {
        const std::size_t i = flat % static_cast<std::size_t>(n_);
        flat /= static_cast<std::size_t>(n_);
        out[a] = axis_coordinate(static_cast<int>(i));
    }
}

std::vector<double> Grid::node(std::size_t flat) const {
    std::vector<double> x(dim_);
    node(flat, x);
    return x;
}

double Grid::weight(std::size_t flat) const {
    double w = 1.0;
    for (int a = 0; a < dim_; ++a) {
        const std::size_t i = flat % static_cast<std::size_t>(n_);
        flat /= static_cast<std::size_t>(n_);
        w *= (i == 0 || i == static_cast<std::size_t>(n_ - 1)) ? 0.5 * h_ : h_;
    }
    return w;
}

std::vector<double> Grid::weights() const {
    std::vector<double> w(size_);
    for (std::size_t k = 0; k < size_; ++k) w[k] = weight(k);
    return w;
}

std::size_t Grid::nearest_node(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim_)
        throw EvaluationError("nearest_node: point dimension mismatch");
    std::size_t flat = 0;
    for (int a = dim_ - 1; a >= 0; --a) {
        long i = std::lround((x[a] + R_) / h_);
        i = std::clamp<long>(i, 0, n_ - 1);
        flat = flat * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i);
    }
    return flat;
}

} // namespace bds
