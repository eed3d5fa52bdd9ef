#include "bds/quadrature.hpp"

#include "bds/errors.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace bds {

namespace {

struct PassResult {
    double value = 0.0;
    bool nonfinite = false;
    double nonfinite_radius = 0.0;
    double max_interior = 0.0;
    double max_boundary = 0.0;
};

// One composite-trapezoid pass with n points per axis.
PassResult trapezoid_pass(const Integrand& f, int dim, double B, std::int64_t n) {
    PassResult out;
    const double h = 2.0 * B / static_cast<double>(n - 1);
    std::vector<double> x(dim);
    std::vector<std::int64_t> idx(dim, 0);

    double sum = 0.0;
    const std::int64_t total = [&] {
        std::int64_t t = 1;
        for (int a = 0; a < dim; ++a) t *= n;
        return t;
    }();

    for (std::int64_t flat = 0; flat < total; ++flat) {
        std::int64_t rem = flat;
        double w = 1.0;
        bool boundary = false;
        for (int a = 0; a < dim; ++a) {
            const std::int64_t i = rem % n;
            rem /= n;
            idx[a] = i;
            x[a] = -B + h * static_cast<double>(i);
            if (i == 0 || i == n - 1) {
                w *= 0.5;
                boundary = true;
            }
        }
        const double fv = f(x);
        if (!std::isfinite(fv)) {
            out.nonfinite = true;
            double r2 = 0.0;
            for (double xi : x) r2 += xi * xi;
            out.nonfinite_radius = std::sqrt(r2);
            return out;
        }
        const double a = std::fabs(fv);
        if (boundary) {
            if (a > out.max_boundary) out.max_boundary = a;
        } else {
            if (a > out.max_interior) out.max_interior = a;
        }
        sum += w * fv;
    }
    double hd = 1.0;
    for (int a = 0; a < dim; ++a) hd *= h;
    out.value = sum * hd;
    return out;
}

} // namespace

QuadratureResult trapezoid_refine(const Integrand& f, int dim, double box_radius,
                                  double rel_tol, int n0, int max_levels) {
    if (dim < 1 || dim > 3)
        throw EvaluationError("quadrature supports dimensions 1..3, got " + std::to_string(dim));
    if (!(box_radius > 0.0)) throw EvaluationError("quadrature box radius must be positive");

    if (n0 == 0) n0 = dim == 1 ? 65 : (dim == 2 ? 33 : 17);
    if (max_levels == 0) max_levels = dim == 1 ? 13 : (dim == 2 ? 6 : 4);

    QuadratureResult out;
    std::int64_t n = n0;
    double prev = 0.0;
    for (int level = 0; level < max_levels; ++level) {
        PassResult pass = trapezoid_pass(f, dim, box_radius, n);
        out.levels = level + 1;
        out.max_interior = pass.max_interior;
        out.max_boundary = pass.max_boundary;
        if (pass.nonfinite) {
            out.nonfinite = true;
            out.nonfinite_radius = pass.nonfinite_radius;
            return out;
        }
        out.value = pass.value;
        if (level > 0) {
            const double change = std::fabs(pass.value - prev);
            if (change <= rel_tol * std::max(std::fabs(pass.value), 1e-300)) {
                out.converged = true;
                return out;
            }
        }
        prev = pass.value;
        n = 2 * (n - 1) + 1;
    }
    return out;
}

BoxedIntegral integrate_box_doubling(const Integrand& f, int dim, double initial_radius,
                                     double rel_tol, int max_doublings) {
    BoxedIntegral out;
    double B = initial_radius;
    double prev_value = 0.0;
    double growth1 = 0.0, growth2 = 0.0; // value growth factors of the last two doublings
    bool have_prev = false;

    for (int k = 0; k <= max_doublings; ++k, B *= 2.0) {
        QuadratureResult q = trapezoid_refine(f, dim, B, rel_tol);
        if (q.nonfinite || q.value > 1e250 || q.max_interior > 1e290) {
            out.diverged = true;
            out.divergence_radius = q.nonfinite ? q.nonfinite_radius : B;
            return out;
        }
        out.value = q.value;
        out.box_radius = B;
        if (q.max_interior == 0.0 && q.max_boundary == 0.0) {
            out.converged = true; // identically-zero integrand
            out.boundary_ratio = 0.0;
            return out;
        }
        out.boundary_ratio = q.max_boundary / std::max(q.max_interior, 1e-300);
        if (have_prev) {
            growth2 = growth1;
            growth1 = q.value / std::max(prev_value, 1e-300);
            const bool stable =
                std::fabs(q.value - prev_value) <= rel_tol * std::max(std::fabs(q.value), 1e-300);
            if (stable && out.boundary_ratio < 1e-12 && q.converged) {
                out.converged = true;
                return out;
            }
        }
        prev_value = q.value;
        have_prev = true;
    }
    // Budget exhausted: persistent geometric growth across the final
    // doublings marks a tail the measure cannot beat; otherwise the result
    // is merely unconverged.
    if (growth1 >= 2.0 && growth2 >= 2.0) {
        out.diverged = true;
        out.divergence_radius = out.box_radius;
    }
    return out;
}

} // namespace bds
