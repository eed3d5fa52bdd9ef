#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bds {

/// Uniform tensor grid on [-R, R]^d with trapezoid quadrature weights.
/// Axis 0 is the fastest-varying index of the flat node numbering.
class Grid {
public:
    Grid(int dimension, double box_radius, int points_per_axis);

    int dimension() const { return dim_; }
    double box_radius() const { return R_; }
    int points_per_axis() const { return n_; }
    double spacing() const { return h_; }
    std::size_t size() const { return size_; }

    double axis_coordinate(int i) const { return -R_ + h_ * i; }
    std::size_t stride(int axis) const;

    void node(std::size_t flat, std::span<double> out) const;
    std::vector<double> node(std::size_t flat) const;

    /// Trapezoid weight of a node (product of per-axis factors; the weights
    /// sum to (2R)^d).
    double weight(std::size_t flat) const;
    std::vector<double> weights() const;

    std::size_t nearest_node(std::span<const double> x) const;

private:
    int dim_;
    double R_;
    int n_;
    double h_;
    std::size_t size_;
};

} // namespace bds
