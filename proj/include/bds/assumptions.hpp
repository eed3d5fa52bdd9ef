#pragma once

#include "bds/bounds.hpp"
#include "bds/model.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace bds {

/// Numerical evidence for the standing assumptions: divergence of the
/// effective potential, integrability of e^{-theta K~}, and the ratio
/// conditions selecting the envelope branch. Limits at infinity are not
/// decidable numerically; the verdict reports trend evidence over the
/// radii supplied, never a proof.
struct AssumptionReport {
    std::vector<double> radii;
    std::vector<double> ktilde_min; // min of K~ over the sphere of each radius

    std::map<double, double> theta_integrals; // theta -> integral of e^{-theta K~}
    std::map<double, bool> theta_converged;

    // Ratio traces over the radii (max over sphere sample points).
    std::vector<double> ess_vminus_over_r2;
    std::vector<double> ess_vminus_over_ballinf;
    std::vector<double> ess2_r2_over_ballinf;
    std::vector<double> ess2_vminus_over_r_sqrt_ballinf;

    enum class Branch { ess, ess2, neither } branch = Branch::neither;
    enum class Verdict { consistent, inconsistent, inconclusive } verdict = Verdict::inconclusive;
    std::string notes;
};

/// Samples the sphere minima of K~, integrates e^{-theta K~} for each theta
/// by box-doubling quadrature, evaluates the branch ratio traces at the
/// sampled radii, and classifies their trends. Radii must be strictly
/// increasing with at least 4 entries; thetas must be nonempty and positive.
AssumptionReport check_assumptions(const ModelSpec& spec, const std::vector<double>& radii,
                                   const std::vector<double>& thetas,
                                   const BoundParams& ball = {});

/// Flat CSV: radius, min K~, and the four ratio traces.
void write_assumption_csv(const AssumptionReport& report, std::ostream& os);

/// One-line machine-readable verdict for standard output.
std::string assumption_verdict_line(const AssumptionReport& report);

const char* to_string(AssumptionReport::Branch b);
const char* to_string(AssumptionReport::Verdict v);

} // namespace bds
