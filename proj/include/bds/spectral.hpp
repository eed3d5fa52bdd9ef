#pragma once

#include "bds/bounds.hpp"
#include "bds/discrete_operator.hpp"
#include "bds/eigensolver.hpp"
#include "bds/grid.hpp"
#include "bds/model.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace bds {

/// Low spectrum of the drift-free operator -(1/2)Delta + K~ on the grid.
/// Eigenvalues are reported with the diagonal shift m removed. phi_tilde
/// vectors are orthonormal in L2(dx) under the grid's trapezoid quadrature;
/// phi = e^{-V} phi_tilde are the corresponding eigenfunctions of the
/// drifted operator, unit-normalized in L2(mu) with mu = e^{2V} dx.
struct SpectralDecomposition {
    Grid grid;
    std::string model_descriptor;
    std::uint64_t model_hash = 0;
    double shift_m = 0.0;
    std::vector<double> eigenvalues;               // ascending, shift removed
    std::vector<std::vector<double>> phi_tilde;    // node vectors
    std::vector<std::vector<double>> phi;          // e^{-V} phi_tilde
    std::vector<double> residuals;
    std::vector<double> v_nodes;                   // V at nodes
    std::vector<double> quad_weights;              // trapezoid weights

    int modes() const { return static_cast<int>(eigenvalues.size()); }

    double inner_dx(std::span<const double> a, std::span<const double> b) const;
    double inner_mu(std::span<const double> a, std::span<const double> b) const;

    /// mu(phi_0), the total mu-mass of the ground state.
    double mu_phi0() const;

    /// Checks gap, sign convention, orthonormality (1e-8) and residual
    /// bounds; throws SolverError on violation.
    void validate(double residual_tol) const;
};

/// Computes the m_modes smallest eigenpairs of the discrete operator with
/// residuals <= tol, removes the shift, fixes signs (ground state positive;
/// higher modes have their largest-magnitude entry positive) and normalizes
/// under grid quadrature. Rejects degenerate ground states
/// (lambda_1 - lambda_0 < 1e-10).
SpectralDecomposition eigs_smallest(const DiscreteOperator& op, int m_modes, double tol);

struct HeatKernelValue {
    double p_tilde = 0.0;
    double p = 0.0;
    double truncation_bound = 0.0; // estimate of the dropped-mode remainder
};

/// Mode-truncated kernels p~(t,x,y) = sum e^{-lambda_n t} phi~_n(x) phi~_n(y)
/// and p(t,x,y) = p~(t,x,y) e^{-V(x)} e^{-V(y)}. Requires t > 0.
HeatKernelValue heat_kernel(const SpectralDecomposition& dec, double t, std::size_t x_node,
                            std::size_t y_node);

/// P_t phi = sum_n e^{-lambda_n t} phi_n <phi_n, phi>_mu. At t = 0 this is
/// the spectral projection of phi onto the captured modes, not phi itself.
std::vector<double> semigroup_apply(const SpectralDecomposition& dec, double t,
                                    std::span<const double> phi);

/// Pi(g) = phi_0 <g, phi_0>_mu, the rank-one projection onto the ground state.
std::vector<double> project_pi(const SpectralDecomposition& dec, std::span<const double> g);

struct EnvelopeFit {
    double C0 = 0.0;
    double T0 = 0.0;
    std::vector<double> ratio_max;       // per mode: max |phi_n| / H over |x| >= r0
    std::vector<double> residual_factor; // ratio / (C0 e^{lambda_n T0 / 2})
    int excluded_nodes = 0;              // H underflow exclusions
    bool pass = false;                   // max residual factor <= 10
};

/// Fits |phi_n(x)| <= C0 e^{lambda_n T0/2} H(x) across all computed modes by
/// least squares in (log C0, T0).
EnvelopeFit envelope_fit(const SpectralDecomposition& dec, const ModelSpec& spec,
                         const BoundParams& params);

/// Single-mode view of the shared fit: (ratio_max for mode n, overall pass).
std::pair<double, bool> eigenfunction_envelope_check(const SpectralDecomposition& dec,
                                                     const ModelSpec& spec,
                                                     const BoundParams& params, int n);

void save_eigenvalues_csv(const SpectralDecomposition& dec, std::ostream& os);
void save_eigenvectors_csv(const SpectralDecomposition& dec, std::ostream& os);

/// Rebuilds a decomposition from the two CSV streams. The model must hash to
/// the value recorded in the header; orthonormality is re-validated.
SpectralDecomposition load_decomposition(std::istream& values, std::istream& vectors,
                                         const ModelSpec& spec, double residual_tol = 1e-6);

} // namespace bds
