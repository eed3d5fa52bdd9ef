#pragma once

#include <functional>
#include <span>

namespace bds {

using Integrand = std::function<double(std::span<const double>)>;

struct QuadratureResult {
    double value = 0.0;
    bool converged = false;
    bool nonfinite = false;      // integrand evaluated to NaN/inf somewhere
    double nonfinite_radius = 0; // |x| of the first such point
    double max_interior = 0.0;   // max |f| over non-boundary nodes
    double max_boundary = 0.0;   // max |f| over box-face nodes
    int levels = 0;
};

/// Composite trapezoid on [-B, B]^d, halving the mesh until the relative
/// change drops below rel_tol. Summation order is fixed, so results do not
/// depend on scheduling.
QuadratureResult trapezoid_refine(const Integrand& f, int dim, double box_radius,
                                  double rel_tol, int n0 = 0, int max_levels = 0);

struct BoxedIntegral {
    double value = 0.0;
    bool converged = false;
    bool diverged = false;
    double box_radius = 0.0;        // box at which the result was accepted
    double divergence_radius = 0.0; // box at which growth/overflow was seen
    double boundary_ratio = 0.0;    // max boundary |f| / max interior |f|
};

/// Integrates f over [-B, B]^d, doubling B until the value stabilizes to
/// rel_tol and the boundary integrand is below 1e-12 of the interior max.
/// Boundary values that keep growing under doubling (or overflow) are
/// reported as divergence with the box radius where growth was detected.
BoxedIntegral integrate_box_doubling(const Integrand& f, int dim, double initial_radius,
                                     double rel_tol, int max_doublings = 10);

} // namespace bds
