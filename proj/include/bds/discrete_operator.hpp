#pragma once

#include "bds/grid.hpp"
#include "bds/model.hpp"

#include <span>
#include <vector>

namespace bds {

/// Symmetric positive operator -(1/2) Laplacian_h + diag(K~ + m) on the
/// grid, with second-order central differences and zero Dirichlet values
/// outside the box. The shift m = max(0, 1 - min K~) makes the diagonal
/// potential >= min(1, min K~) > 0 and is recorded for later removal.
class DiscreteOperator {
public:
    DiscreteOperator(Grid grid, ModelSpec spec);

    const Grid& grid() const { return grid_; }
    const ModelSpec& model() const { return spec_; }
    double shift() const { return shift_m_; }
    std::span<const double> potential() const { return potential_; } // K~ + m
    std::size_t size() const { return grid_.size(); }

    void apply(std::span<const double> v, std::span<double> out) const;

private:
    Grid grid_;
    ModelSpec spec_;
    double shift_m_ = 0.0;
    std::vector<double> potential_;
};

DiscreteOperator discretize(const ModelSpec& spec, const Grid& grid);

} // namespace bds
