#include "bds/bounds.hpp"

#include "bds/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace bds {

namespace {

double norm(std::span<const double> x) {
    double s = 0.0;
    for (double xi : x) s += xi * xi;
    return std::sqrt(s);
}

// Van der Corput radical inverse, the building block of the Halton sample.
double radical_inverse(unsigned base, unsigned i) {
    double inv = 1.0 / base, f = inv, v = 0.0;
    while (i > 0) {
        v += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return v;
}

} // namespace

void BoundParams::validate() const {
    if (!(c > 0.0) || !(c0 > 0.0)) throw EvaluationError("bound params: c and c0 must be > 0");
    if (!(r0 >= 1.0)) throw EvaluationError("bound params: r0 must be >= 1");
    if (ball_samples < 32) throw EvaluationError("bound params: ball_samples must be >= 32");
}

double ball_infimum_ktilde(const ModelSpec& spec, std::span<const double> x,
                           const BoundParams& params) {
    params.validate();
    const double r = norm(x);
    if (!(r > 0.0)) throw EvaluationError("ball_infimum_ktilde requires |x| > 0");
    const double rad = 0.5 * r;
    const int d = spec.dimension;

    double best = effective_potential(spec, x); // center; result is always <= K~(x)

    std::vector<double> z(d);
    auto consider = [&](std::span<const double> pt) {
        best = std::min(best, effective_potential(spec, pt));
    };

    if (d == 1) {
        // Uniform samples over [x - r/2, x + r/2] including both endpoints.
        int m = std::max(params.ball_samples, 33);
        if (m % 2 == 0) ++m;
        for (int j = 0; j < m; ++j) {
            z[0] = x[0] - rad + 2.0 * rad * static_cast<double>(j) / (m - 1);
            consider(z);
        }
        return best;
    }

    // Radially inward / outward boundary points (exact endpoints for radial
    // monotone fields) and axis-aligned boundary points.
    for (double s : {0.5, 1.5}) {
        for (int a = 0; a < d; ++a) z[a] = s * x[a];
        consider(z);
    }
    for (int a = 0; a < d; ++a) {
        for (double s : {-1.0, 1.0}) {
            for (int b = 0; b < d; ++b) z[b] = x[b];
            z[a] += s * rad;
            consider(z);
        }
    }

    // Boundary shell.
    if (d == 2) {
        for (int j = 0; j < 32; ++j) {
            const double th = 2.0 * std::numbers::pi * j / 32.0;
            z[0] = x[0] + rad * std::cos(th);
            z[1] = x[1] + rad * std::sin(th);
            consider(z);
        }
    } else if (d == 3) {
        // Fibonacci sphere.
        const double ga = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int j = 0; j < 32; ++j) {
            const double zc = 1.0 - 2.0 * (j + 0.5) / 32.0;
            const double rr = std::sqrt(std::max(0.0, 1.0 - zc * zc));
            const double th = ga * j;
            z[0] = x[0] + rad * rr * std::cos(th);
            z[1] = x[1] + rad * rr * std::sin(th);
            z[2] = x[2] + rad * zc;
            consider(z);
        }
    }

    // Halton points in the cube, rejected to the ball interior.
    static const unsigned bases[3] = {2, 3, 5};
    int accepted = 0;
    for (unsigned i = 1; accepted < params.ball_samples && i < 100000; ++i) {
        double u2 = 0.0;
        for (int a = 0; a < d; ++a) {
            const double u = 2.0 * radical_inverse(bases[a], i) - 1.0;
            z[a] = u;
            u2 += u * u;
        }
        if (u2 > 1.0) continue;
        for (int a = 0; a < d; ++a) z[a] = x[a] + rad * z[a];
        consider(z);
        ++accepted;
    }
    return best;
}

double bound_H_closed_form(BoundParams::Branch branch, double c, double c0, double v_plus,
                           double ball_inf, double abs_x) {
    const double pre = std::exp(-v_plus);
    if (branch == BoundParams::Branch::ess)
        return pre * (std::exp(-c * ball_inf) + std::exp(-c0 * abs_x * abs_x));
    return pre * std::exp(-c0 * abs_x * std::sqrt(std::max(ball_inf, 0.0)));
}

double bound_H(const ModelSpec& spec, const BoundParams& params, std::span<const double> x) {
    params.validate();
    const double r = norm(x);
    const double v_plus = std::max(spec.V.value(x), 0.0);
    double inf = r > 0.0 ? ball_infimum_ktilde(spec, x, params) : effective_potential(spec, x);
    if (r < params.r0) inf = std::max(inf, 0.0); // continuous positive extension inside r0
    return bound_H_closed_form(params.branch, params.c, params.c0, v_plus, inf, r);
}

MuHResult mu_H_integral(const ModelSpec& spec, const BoundParams& params, double box_radius,
                        double quad_tol) {
    params.validate();
    if (!(box_radius > params.r0))
        throw EvaluationError("mu_H_integral: box_radius must exceed r0");
    Integrand f = [&](std::span<const double> x) {
        const double h = bound_H(spec, params, x);
        const double v = spec.V.value(x);
        // Overflow in e^{2V} marks the integrand as non-finite; the
        // box-doubling wrapper reports it as divergence.
        return h * std::exp(2.0 * v);
    };
    BoxedIntegral bi = integrate_box_doubling(f, spec.dimension, box_radius, quad_tol);
    MuHResult out;
    out.value = bi.value;
    out.converged = bi.converged;
    out.diverged = bi.diverged;
    out.divergence_radius = bi.divergence_radius;
    return out;
}

bool example13_admissible(double alpha, double beta) {
    if (!(alpha >= 0.0) || !(beta > 0.0)) return false;
    return (alpha < 2.0 && alpha <= beta) || (beta >= 2.0 && alpha < 1.0 + beta / 2.0);
}

} // namespace bds
