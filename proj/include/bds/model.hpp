#pragma once

#include "bds/scalar_field.hpp"

#include <span>
#include <string>

namespace bds {

/// Branching-diffusion model: trait dimension, drift potential V, and the
/// birth/death rate fields. The reduction rate is K = death - birth; its
/// negative is the local growth rate.
struct ModelSpec {
    int dimension = 1;
    ScalarField V = ScalarField::constant(0.0);
    ScalarField birth = ScalarField::constant(0.0);
    ScalarField death = ScalarField::constant(0.0);

    double K(std::span<const double> x) const;

    /// Canonical one-line descriptor; identical models hash identically.
    std::string descriptor() const;
    std::uint64_t hash() const;

    /// Samples birth/death rates on radial probe points up to |x| = radius
    /// and throws if either is negative or non-finite.
    void validate_rates(double radius) const;
};

/// K(x) + (1/2) Laplacian V(x) + (1/2) |grad V(x)|^2, the drift-free
/// potential produced by conjugating the generator with e^V. Throws
/// EvaluationError naming the offending field if anything is non-finite.
double effective_potential(const ModelSpec& spec, std::span<const double> x);

/// Effective-potential view of a model; evaluation is pure.
class EffectivePotential {
public:
    explicit EffectivePotential(ModelSpec spec) : spec_(std::move(spec)) {}
    double evaluate(std::span<const double> x) const { return effective_potential(spec_, x); }
    const ModelSpec& source() const { return spec_; }

private:
    ModelSpec spec_;
};

std::string format_point(std::span<const double> x);

} // namespace bds
