#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bds/assumptions.hpp"
#include "bds/bounds.hpp"
#include "bds/errors.hpp"
#include "bds/model.hpp"
#include "bds/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace bds;

namespace {

ModelSpec harmonic_1d() {
    ModelSpec spec;
    spec.dimension = 1;
    spec.V = ScalarField::constant(0.0);
    spec.birth = ScalarField::constant(0.0);
    spec.death = ScalarField::radial_poly(0.5, 2.0, 0.0); // K = x^2/2
    return spec;
}

ModelSpec ou_kappa(double kappa) {
    ModelSpec spec;
    spec.dimension = 1;
    spec.V = ScalarField::quadratic(-1.0); // V = -x^2/2
    spec.birth = ScalarField::constant(0.0);
    spec.death = ScalarField::constant(kappa);
    return spec;
}

} // namespace

TEST_CASE("effective potential hand values") {
    const std::vector<double> x2{2.0};
    CHECK(effective_potential(harmonic_1d(), x2) == doctest::Approx(2.0)); // V=0 gives K

    // V = -x^2/2, K = 0: K~(1) = 0 + (1/2)(-1) + (1/2)(1) = 0.
    ModelSpec m = ou_kappa(0.0);
    CHECK(effective_potential(m, std::vector<double>{1.0}) == doctest::Approx(0.0));

    // V = -x^2/2, K = 1: K~(2) = 1 - 1/2 + (1/2)(4) = 2.5.
    m = ou_kappa(1.0);
    CHECK(effective_potential(m, x2) == doctest::Approx(2.5));
}

TEST_CASE("V = 0 reduces the effective potential to K exactly") {
    ModelSpec spec;
    spec.dimension = 2;
    spec.V = ScalarField::constant(0.0);
    spec.birth = ScalarField::radial_poly(0.3, 2.0, 0.0);
    spec.death = ScalarField::radial_poly(1.0, 4.0, 0.5);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 10000; ++i) {
        const std::vector<double> x{u(rng), u(rng)};
        CHECK(effective_potential(spec, x) == spec.K(x)); // exact, not approximate
    }
}

TEST_CASE("effective potential errors name the offending field") {
    ModelSpec spec = harmonic_1d();
    spec.death = ScalarField::radial_poly(1e300, 8.0, 0.0);
    try {
        effective_potential(spec, std::vector<double>{20.0}); // 1e300 * 20^8 overflows
        FAIL("expected EvaluationError");
    } catch (const EvaluationError& e) {
        CHECK(std::string(e.what()).find("death") != std::string::npos);
    }
    spec = harmonic_1d();
    spec.V = ScalarField::radial_poly(1e200, 4.0, 0.0);
    try {
        effective_potential(spec, std::vector<double>{10.0});
        FAIL("expected EvaluationError");
    } catch (const EvaluationError& e) {
        CHECK(std::string(e.what()).find("V") != std::string::npos);
    }
}

TEST_CASE("rate validation rejects negative rates") {
    ModelSpec spec = harmonic_1d();
    spec.birth = ScalarField::constant(-0.5);
    CHECK_THROWS_AS(spec.validate_rates(4.0), EvaluationError);
}

TEST_CASE("ball infimum") {
    BoundParams params;

    // K = x^2, ball B(4, 2) = [2, 6]: infimum 4 exactly (endpoint is sampled).
    ModelSpec spec = harmonic_1d();
    spec.death = ScalarField::radial_poly(1.0, 2.0, 0.0);
    CHECK(ball_infimum_ktilde(spec, std::vector<double>{4.0}, params) == doctest::Approx(4.0));

    // Constant field: infimum equals the constant.
    spec.death = ScalarField::constant(5.0);
    CHECK(ball_infimum_ktilde(spec, std::vector<double>{3.0}, params) == doctest::Approx(5.0));
    ModelSpec const3d;
    const3d.dimension = 3;
    const3d.death = ScalarField::constant(5.0);
    CHECK(ball_infimum_ktilde(const3d, std::vector<double>{1.0, -2.0, 0.5}, params) ==
          doctest::Approx(5.0));

    // Always <= K~(x).
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-8.0, 8.0);
    spec = harmonic_1d();
    for (int i = 0; i < 200; ++i) {
        const std::vector<double> x{u(rng)};
        if (std::fabs(x[0]) < 1e-3) continue;
        CHECK(ball_infimum_ktilde(spec, x, params) <= effective_potential(spec, x) + 1e-12);
    }
    ModelSpec spec2d;
    spec2d.dimension = 2;
    spec2d.V = ScalarField::quadratic(-0.5);
    spec2d.death = ScalarField::radial_poly(0.5, 2.0, 0.0);
    for (int i = 0; i < 100; ++i) {
        const std::vector<double> x{u(rng), u(rng)};
        if (std::hypot(x[0], x[1]) < 1e-3) continue;
        CHECK(ball_infimum_ktilde(spec2d, x, params) <= effective_potential(spec2d, x) + 1e-12);
    }
}

TEST_CASE("envelope H closed form and positivity") {
    BoundParams params;
    params.branch = BoundParams::Branch::ess2;
    params.c0 = 0.1;

    // Harmonic, x = 4: infimum of z^2/2 over [2, 6] is 2, so
    // H = exp(-0.1 * 4 * sqrt(2)).
    const ModelSpec spec = harmonic_1d();
    const double expected = std::exp(-0.1 * 4.0 * std::sqrt(2.0));
    CHECK(bound_H(spec, params, std::vector<double>{4.0}) == doctest::Approx(expected));

    // A positive part V+ multiplies in exp(-V+); isolated via the closed form
    // with the same ball infimum.
    const double with_vplus =
        bound_H_closed_form(BoundParams::Branch::ess2, params.c, 0.1, 8.0, 2.0, 4.0);
    CHECK(with_vplus == doctest::Approx(expected * std::exp(-8.0)));

    // Positive and bounded on a dense grid.
    double hmax = 0.0;
    for (int i = 0; i <= 100000; ++i) {
        const double x = -20.0 + 40.0 * i / 100000.0;
        const double h = bound_H(spec, params, std::vector<double>{x});
        CHECK(h > 0.0);
        hmax = std::max(hmax, h);
    }
    CHECK(std::isfinite(hmax));
    CHECK(hmax <= 1.0 + 1e-12); // exp(-nonneg) terms only for this model
}

TEST_CASE("mu(H) integral: convergence, divergence, monotonicity") {
    // V = 0, K = x^2, branch ess, c = 1, c0 = 0.1:
    // mu(H) = int e^{-x^2/4} + e^{-0.1 x^2} dx = 2 sqrt(pi) + sqrt(10 pi).
    ModelSpec spec = harmonic_1d();
    spec.death = ScalarField::radial_poly(1.0, 2.0, 0.0);
    BoundParams params;
    params.branch = BoundParams::Branch::ess;
    params.c = 1.0;
    params.c0 = 0.1;
    MuHResult r = mu_H_integral(spec, params, 8.0, 1e-6);
    CHECK(r.converged);
    CHECK_FALSE(r.diverged);
    const double oracle = 2.0 * std::sqrt(std::numbers::pi) + std::sqrt(10.0 * std::numbers::pi);
    CHECK(r.value == doctest::Approx(oracle).epsilon(1e-4));

    // V = x^2 with a small c: e^{2V} outruns H and the integral diverges.
    ModelSpec grow = spec;
    grow.V = ScalarField::quadratic(2.0);
    BoundParams weak = params;
    weak.c = 0.1;
    MuHResult rd = mu_H_integral(grow, weak, 8.0, 1e-6);
    CHECK(rd.diverged);
    CHECK(rd.divergence_radius > 0.0);

    // Zero integrand integrates to zero.
    BoxedIntegral zero = integrate_box_doubling([](std::span<const double>) { return 0.0; }, 1,
                                                8.0, 1e-6);
    CHECK(zero.converged);
    CHECK(zero.value == 0.0);

    // Monotonicity: larger c (branch ess) or larger c0 never increases mu(H).
    const MuHResult base = mu_H_integral(spec, params, 8.0, 1e-6);
    BoundParams bigger_c = params;
    bigger_c.c = 2.0;
    CHECK(mu_H_integral(spec, bigger_c, 8.0, 1e-6).value <= base.value + 1e-9);
    BoundParams bigger_c0 = params;
    bigger_c0.c0 = 0.3;
    CHECK(mu_H_integral(spec, bigger_c0, 8.0, 1e-6).value <= base.value + 1e-9);

    CHECK_THROWS_AS(mu_H_integral(spec, params, 0.5, 1e-6), EvaluationError); // box < r0
}

TEST_CASE("growth-exponent admissibility") {
    CHECK(example13_admissible(1.0, 2.0));
    CHECK(example13_admissible(2.5, 4.0));
    CHECK_FALSE(example13_admissible(3.0, 2.0));

    // Independent restatement of the two clauses; scan a grid of exponents.
    auto oracle = [](double a, double b) {
        const bool clause1 = a < 2.0 && a <= b;
        const bool clause2 = b >= 2.0 && a < 1.0 + b / 2.0;
        return clause1 || clause2;
    };
    for (double a = 0.0; a <= 5.0; a += 0.125)
        for (double b = 0.125; b <= 5.0; b += 0.125)
            CHECK(example13_admissible(a, b) == oracle(a, b));
}

TEST_CASE("assumption checks classify the standard models") {
    const std::vector<double> radii{2, 4, 8, 16};
    const std::vector<double> thetas{1.0};

    // Harmonic: consistent, envelope branch ess2 (quadratic growth keeps
    // |x|^2 / inf K~ bounded; V- vanishes).
    AssumptionReport rep = check_assumptions(harmonic_1d(), radii, thetas);
    CHECK(rep.verdict == AssumptionReport::Verdict::consistent);
    CHECK(rep.branch == AssumptionReport::Branch::ess2);
    CHECK(rep.theta_converged.at(1.0));
    // Integral oracle: int e^{-x^2/2} dx = sqrt(2 pi).
    CHECK(rep.theta_integrals.at(1.0) ==
          doctest::Approx(std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-4));

    // K~ identically zero cannot diverge.
    ModelSpec flat;
    flat.dimension = 1;
    AssumptionReport bad = check_assumptions(flat, radii, thetas);
    CHECK(bad.verdict == AssumptionReport::Verdict::inconsistent);

    // Drifted constant-K model: K~ = 1/2 + x^2/2, still quadratic.
    AssumptionReport ou = check_assumptions(ou_kappa(1.0), radii, thetas);
    CHECK(ou.verdict == AssumptionReport::Verdict::consistent);
    CHECK(ou.branch == AssumptionReport::Branch::ess2);
    // Integral oracle: int e^{-(1/2 + x^2/2)} dx = e^{-1/2} sqrt(2 pi).
    CHECK(ou.theta_integrals.at(1.0) ==
          doctest::Approx(std::exp(-0.5) * std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-4));

    // Report invariant: consistent requires eventually-increasing sphere minima.
    for (std::size_t i = radii.size() / 2; i < radii.size(); ++i)
        CHECK(rep.ktilde_min[i] > rep.ktilde_min[i - 1]);

    CHECK_THROWS_AS(check_assumptions(harmonic_1d(), {1, 2, 3}, thetas), EvaluationError);
    CHECK_THROWS_AS(check_assumptions(harmonic_1d(), {1, 2, 3, 2.5}, thetas), EvaluationError);
    CHECK_THROWS_AS(check_assumptions(harmonic_1d(), radii, {}), EvaluationError);
}

TEST_CASE("quadrature oracles and determinism") {
    // Gaussian integral in one and two dimensions.
    Integrand g1 = [](std::span<const double> x) { return std::exp(-x[0] * x[0]); };
    BoxedIntegral b1 = integrate_box_doubling(g1, 1, 8.0, 1e-7);
    CHECK(b1.converged);
    CHECK(b1.value == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-6));

    Integrand g2 = [](std::span<const double> x) {
        return std::exp(-(x[0] * x[0] + x[1] * x[1]));
    };
    BoxedIntegral b2 = integrate_box_doubling(g2, 2, 6.0, 1e-6);
    CHECK(b2.converged);
    CHECK(b2.value == doctest::Approx(std::numbers::pi).epsilon(1e-5));

    // Fixed summation order: identical bits on identical calls.
    BoxedIntegral again = integrate_box_doubling(g1, 1, 8.0, 1e-7);
    CHECK(again.value == b1.value);
}
