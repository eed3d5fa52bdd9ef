#pragma once

#include "bds/discrete_operator.hpp"

#include <cstdint>
#include <vector>

namespace bds {

struct LanczosOptions {
    double cg_tol = 1e-13;
    int cg_max_iters = 50000;
    int max_iters = 0; // Lanczos steps; 0 picks max(4 n_modes + 60, 120)
    std::uint64_t start_seed = 0x9e3779b97f4a7c15ull;
};

struct LanczosResult {
    std::vector<double> values;               // ascending, of the shifted operator
    std::vector<std::vector<double>> vectors; // Euclidean-orthonormal
    std::vector<double> residuals;            // ||A y - lambda y||_2
    int iterations = 0;
    bool converged = false;
};

/// Smallest eigenpairs of the (symmetric positive definite) discrete
/// operator by shift-invert Lanczos: the Lanczos recurrence runs on A^{-1}
/// via conjugate-gradient solves, with full two-pass reorthogonalization of
/// the basis. Residuals are verified directly against A before returning.
/// Deterministic: fixed starting vector, fixed summation order.
LanczosResult smallest_eigenpairs(const DiscreteOperator& A, int n_modes, double tol,
                                  const LanczosOptions& opts = {});

} // namespace bds
