#pragma once

#include "bds/model.hpp"
#include "bds/quadrature.hpp"

#include <span>

namespace bds {

/// Parameters of the eigenfunction decay envelope H and of the ball-infimum
/// sampling behind it.
struct BoundParams {
    double c = 10.0;  // decay constant multiplying the ball infimum
    double c0 = 0.05; // decay constant on |x|^2 resp. |x| sqrt(inf)
    double r0 = 1.0;  // radius beyond which the closed form applies
    int ball_samples = 64;
    enum class Branch { ess, ess2 } branch = Branch::ess2;

    void validate() const; // c, c0 > 0; r0 >= 1; ball_samples >= 32
};

/// Minimum of the effective potential over a deterministic quasi-uniform
/// sample of the closed ball B(x, |x|/2). The sample always contains the
/// center and the radially inward/outward boundary points, so the result is
/// exact for radially monotone fields. Requires |x| > 0.
double ball_infimum_ktilde(const ModelSpec& spec, std::span<const double> x,
                           const BoundParams& params);

/// The envelope closed form from precomputed pieces: branch ess gives
/// exp(-v_plus) [exp(-c inf) + exp(-c0 |x|^2)], branch ess2 gives
/// exp(-v_plus) exp(-c0 |x| sqrt(inf)) with the infimum clamped at 0 under
/// the square root.
double bound_H_closed_form(BoundParams::Branch branch, double c, double c0, double v_plus,
                           double ball_inf, double abs_x);

/// Decay envelope H at x. For |x| >= r0 this is the closed form with the
/// sampled ball infimum; for |x| < r0 the infimum is clamped below at 0,
/// which extends H continuously and keeps it positive.
double bound_H(const ModelSpec& spec, const BoundParams& params, std::span<const double> x);

struct MuHResult {
    double value = 0.0;
    bool converged = false;
    bool diverged = false;
    double divergence_radius = 0.0;
};

/// mu(H) = integral of H(x) e^{2V(x)} dx by box-doubling trapezoid
/// quadrature. Requires box_radius > params.r0. Divergence (the integrand
/// outgrowing every box) is reported, not thrown.
MuHResult mu_H_integral(const ModelSpec& spec, const BoundParams& params, double box_radius,
                        double quad_tol);

/// Growth-exponent admissibility: true iff (alpha < 2 and alpha <= beta) or
/// (beta >= 2 and alpha < 1 + beta/2).
bool example13_admissible(double alpha, double beta);

} // namespace bds
