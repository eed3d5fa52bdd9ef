#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bds {

/// Smooth scalar field on R^d with closed-form gradient and Laplacian.
///
/// Concrete shapes: constant(k), quadratic(c) = c|x|^2/2, radial_poly(a,
/// alpha, shift) = a|x|^alpha + shift, and sums/scalings of those. Fields
/// are dimension-agnostic (the dimension is taken from the point supplied)
/// and behave as cheap value types backed by immutable shared state.
///
/// For radial exponents alpha < 2 the derivatives are singular at the
/// origin; there we return 0 for the gradient and Laplacian.
class ScalarField {
public:
    ScalarField(); // constant 0

    double value(std::span<const double> x) const;
    void gradient(std::span<const double> x, std::span<double> out) const;
    double laplacian(std::span<const double> x) const;

    std::vector<double> gradient(std::span<const double> x) const;

    /// Canonical descriptor text, e.g. "radial_poly(0.5,2,0)". Parsing the
    /// descriptor reproduces the field.
    const std::string& descriptor() const;

    static ScalarField constant(double k);
    static ScalarField quadratic(double c);
    static ScalarField radial_poly(double a, double alpha, double shift);
    static ScalarField scaled(double s, const ScalarField& f);
    static ScalarField sum(std::vector<ScalarField> terms);

    /// Parses "constant(0.5)", "quadratic(-1)", "radial_poly(1,2,0)",
    /// "scale(2, quadratic(1))", "sum(constant(1), radial_poly(1,4,0))".
    static ScalarField parse(std::string_view text);

    struct Impl;

private:
    explicit ScalarField(std::shared_ptr<const Impl> impl);
    std::shared_ptr<const Impl> impl_;
};

} // namespace bds
