#include "bds/discrete_operator.hpp"

#include "bds/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bds {

DiscreteOperator::DiscreteOperator(Grid grid, ModelSpec spec)
    : grid_(std::move(grid)), spec_(std::move(spec)) {
    if (grid_.dimension() != spec_.dimension)
        throw EvaluationError("discretize: grid dimension " +
                              std::to_string(grid_.dimension()) + " != model dimension " +
                              std::to_string(spec_.dimension));
    const std::size_t N = grid_.size();
    potential_.resize(N);
    double kmin = std::numeric_limits<double>::infinity();
    std::vector<double> x(grid_.dimension());
    for (std::size_t k = 0; k < N; ++k) {
        grid_.node(k, x);
        const double kt = effective_potential(spec_, x);
        if (!std::isfinite(kt))
            throw EvaluationError("K~ non-finite at node " + std::to_string(k) +
                                  ", x=" + format_point(x));
        potential_[k] = kt;
        kmin = std::min(kmin, kt);
    }
    shift_m_ = std::max(0.0, 1.0 - kmin);
    for (double& p : potential_) p += shift_m_;
}

void DiscreteOperator::apply(std::span<const double> v, std::span<double> out) const {
    const int d = grid_.dimension();
    const std::size_t n = static_cast<std::size_t>(grid_.points_per_axis());
    const double inv_h2 = 1.0 / (grid_.spacing() * grid_.spacing());
    const double diag_lap = static_cast<double>(d) * inv_h2;
    const double off = -0.5 * inv_h2;
    const std::size_t N = grid_.size();

    if (d == 1) {
        for (std::size_t i = 0; i < N; ++i) {
            double acc = (potential_[i] + diag_lap) * v[i];
            if (i > 0) acc += off * v[i - 1];
            if (i + 1 < N) acc += off * v[i + 1];
            out[i] = acc;
        }
        return;
    }

    for (std::size_t flat = 0; flat < N; ++flat) {
        double acc = (potential_[flat] + diag_lap) * v[flat];
        std::size_t rem = flat;
        std::size_t stride = 1;
        for (int a = 0; a < d; ++a) {
            const std::size_t i = rem % n;
            rem /= n;
            if (i > 0) acc += off * v[flat - stride];
            if (i + 1 < n) acc += off * v[flat + stride];
            stride *= n;
        }
        out[flat] = acc;
    }
}

DiscreteOperator discretize(const ModelSpec& spec, const Grid& grid) {
    return DiscreteOperator(grid, spec);
}

} // namespace bds
