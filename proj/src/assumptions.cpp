#include "bds/assumptions.hpp"

#include "bds/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace bds {

namespace {

std::vector<std::vector<double>> sphere_points(int dim, double r) {
    std::vector<std::vector<double>> pts;
    if (dim == 1) {
        pts.push_back({-r});
        pts.push_back({r});
    } else if (dim == 2) {
        for (int j = 0; j < 64; ++j) {
            const double th = 2.0 * std::numbers::pi * j / 64.0;
            pts.push_back({r * std::cos(th), r * std::sin(th)});
        }
    } else {
        const double ga = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int j = 0; j < 128; ++j) {
            const double z = 1.0 - 2.0 * (j + 0.5) / 128.0;
            const double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
            pts.push_back({r * rr * std::cos(ga * j), r * rr * std::sin(ga * j), r * z});
        }
    }
    return pts;
}

enum class Trend { zero, bounded, growing, ambiguous };

// Classifies a nonnegative trace over increasing radii by the log-log slope
// of its second half. Bands around the decision thresholds map to
// `ambiguous` so borderline cases are never silently adjudicated.
Trend classify(const std::vector<double>& radii, const std::vector<double>& trace) {
    double scale = 0.0;
    for (double v : trace) {
        if (std::isinf(v)) return Trend::growing;
        scale = std::max(scale, v);
    }
    if (scale <= 1e-12) return Trend::zero;

    const std::size_t n = trace.size();
    const std::size_t start = n / 2 >= 1 ? n / 2 - (n % 2 == 0 ? 1 : 0) : 0;
    std::vector<double> lx, ly;
    for (std::size_t i = start; i < n; ++i) {
        lx.push_back(std::log(radii[i]));
        ly.push_back(std::log(std::max(trace[i], scale * 1e-300)));
    }
    const std::size_t m = lx.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < m; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    const double slope = sxy / std::max(sxx, 1e-300);

    if (slope <= -0.25) return Trend::zero;
    if (slope > -0.15 && slope < 0.15) return Trend::bounded;
    if (slope >= 0.25) return Trend::growing;
    return Trend::ambiguous;
}

double safe_ratio(double num, double den) {
    if (num == 0.0) return 0.0;
    if (den <= 0.0) return std::numeric_limits<double>::infinity();
    return num / den;
}

} // namespace

AssumptionReport check_assumptions(const ModelSpec& spec, const std::vector<double>& radii,
                                   const std::vector<double>& thetas, const BoundParams& ball) {
    if (radii.size() < 4) throw EvaluationError("check_assumptions: need at least 4 radii");
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (!(radii[i] > radii[i - 1]))
            throw EvaluationError("check_assumptions: radii must be strictly increasing");
    if (thetas.empty()) throw EvaluationError("check_assumptions: thetas must be nonempty");

    AssumptionReport rep;
    rep.radii = radii;

    // Sphere minima of K~ and the pointwise branch ratios (max over the
    // sphere sample stands in for the sup over the sphere).
    for (double r : radii) {
        double kmin = std::numeric_limits<double>::infinity();
        double kmax = -std::numeric_limits<double>::infinity();
        double r1a = 0, r1b = 0, r2a = 0, r2b = 0;
        for (const auto& p : sphere_points(spec.dimension, r)) {
            const double kt = effective_potential(spec, p);
            kmin = std::min(kmin, kt);
            kmax = std::max(kmax, kt);
            const double vminus = std::max(-spec.V.value(p), 0.0);
            const double inf_ball = ball_infimum_ktilde(spec, p, ball);
            r1a = std::max(r1a, safe_ratio(vminus, r * r));
            r1b = std::max(r1b, safe_ratio(vminus, inf_ball));
            r2a = std::max(r2a, safe_ratio(r * r, inf_ball));
            r2b = std::max(r2b, safe_ratio(vminus, r * (inf_ball > 0.0 ? std::sqrt(inf_ball)
                                                                       : 0.0)));
        }
        rep.ktilde_min.push_back(kmin);
        rep.ess_vminus_over_r2.push_back(r1a);
        rep.ess_vminus_over_ballinf.push_back(r1b);
        rep.ess2_r2_over_ballinf.push_back(r2a);
        rep.ess2_vminus_over_r_sqrt_ballinf.push_back(r2b);
        if (r == radii.back() && kmax < 0.0) {
            rep.verdict = AssumptionReport::Verdict::inconsistent;
            rep.notes += "K~ negative everywhere on the largest sphere; ";
        }
    }

    // Integrability of e^{-theta K~}.
    bool all_theta_converged = true;
    bool any_theta_diverged = false;
    for (double theta : thetas) {
        if (!(theta > 0.0)) throw EvaluationError("check_assumptions: thetas must be positive");
        Integrand f = [&](std::span<const double> x) {
            return std::exp(-theta * effective_potential(spec, x));
        };
        BoxedIntegral bi = integrate_box_doubling(f, spec.dimension, std::max(radii.back(), 4.0),
                                                  1e-6);
        rep.theta_integrals[theta] = bi.value;
        rep.theta_converged[theta] = bi.converged;
        if (bi.diverged) any_theta_diverged = true;
        if (!bi.converged) all_theta_converged = false;
    }

    // Branch adjudication. The second ess2 ratio is accepted when bounded,
    // not only when vanishing; the trace is reported either way.
    const Trend t1a = classify(radii, rep.ess_vminus_over_r2);
    const Trend t1b = classify(radii, rep.ess_vminus_over_ballinf);
    const Trend t2a = classify(radii, rep.ess2_r2_over_ballinf);
    const Trend t2b = classify(radii, rep.ess2_vminus_over_r_sqrt_ballinf);

    auto is_zero = [](Trend t) { return t == Trend::zero; };
    auto is_bounded = [](Trend t) { return t == Trend::zero || t == Trend::bounded; };
    const bool ess_ok = is_zero(t1a) && is_bounded(t1b);
    const bool ess2_ok = is_bounded(t2a) && is_bounded(t2b);
    const bool any_ambiguous = t1a == Trend::ambiguous || t1b == Trend::ambiguous ||
                               t2a == Trend::ambiguous || t2b == Trend::ambiguous;

    if (ess2_ok)
        rep.branch = AssumptionReport::Branch::ess2;
    else if (ess_ok)
        rep.branch = AssumptionReport::Branch::ess;
    else
        rep.branch = AssumptionReport::Branch::neither;
    if (ess2_ok && !is_zero(t2b))
        rep.notes += "ess2 second ratio bounded but not vanishing; ";

    if (rep.verdict == AssumptionReport::Verdict::inconsistent) return rep;

    // Divergence evidence: sphere minima strictly increasing over the last
    // half of the radii.
    bool eventually_increasing = true;
    for (std::size_t i = std::max<std::size_t>(1, radii.size() / 2); i < radii.size(); ++i)
        if (!(rep.ktilde_min[i] > rep.ktilde_min[i - 1])) eventually_increasing = false;

    if (!eventually_increasing) {
        rep.verdict = AssumptionReport::Verdict::inconsistent;
        rep.notes += "sphere minima of K~ not eventually increasing; ";
        return rep;
    }
    if (any_theta_diverged) {
        rep.verdict = AssumptionReport::Verdict::inconsistent;
        rep.notes += "a theta-integral diverges; ";
        return rep;
    }
    if (!all_theta_converged) {
        rep.verdict = AssumptionReport::Verdict::inconclusive;
        rep.notes += "a theta-integral did not converge; ";
        return rep;
    }
    if (rep.branch == AssumptionReport::Branch::neither) {
        rep.verdict = any_ambiguous ? AssumptionReport::Verdict::inconclusive
                                    : AssumptionReport::Verdict::inconsistent;
        rep.notes += any_ambiguous ? "branch ratios near a decision threshold; "
                                   : "no envelope branch passes; ";
        return rep;
    }
    rep.verdict = AssumptionReport::Verdict::consistent;
    return rep;
}

void write_assumption_csv(const AssumptionReport& rep, std::ostream& os) {
    os << "radius,ktilde_min,ess_vminus_over_r2,ess_vminus_over_ballinf,"
          "ess2_r2_over_ballinf,ess2_vminus_over_r_sqrt_ballinf\n";
    char buf[256];
    for (std::size_t i = 0; i < rep.radii.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", rep.radii[i],
                      rep.ktilde_min[i], rep.ess_vminus_over_r2[i],
                      rep.ess_vminus_over_ballinf[i], rep.ess2_r2_over_ballinf[i],
                      rep.ess2_vminus_over_r_sqrt_ballinf[i]);
        os << buf;
    }
}

std::string assumption_verdict_line(const AssumptionReport& rep) {
    std::ostringstream os;
    os << "assumptions verdict=" << to_string(rep.verdict) << " branch=" << to_string(rep.branch);
    for (const auto& [theta, val] : rep.theta_integrals)
        os << " I(theta=" << theta << ")=" << val
           << (rep.theta_converged.at(theta) ? "" : "(unconverged)");
    if (!rep.notes.empty()) os << " notes=\"" << rep.notes << '"';
    return os.str();
}

const char* to_string(AssumptionReport::Branch b) {
    switch (b) {
    case AssumptionReport::Branch::ess: return "ess";
    case AssumptionReport::Branch::ess2: return "ess2";
    default: return "neither";
    }
}

const char* to_string(AssumptionReport::Verdict v) {
    switch (v) {
    case AssumptionReport::Verdict::consistent: return "consistent";
    case AssumptionReport::Verdict::inconsistent: return "inconsistent";
    default: return "inconclusive";
    }
}

} // namespace bds
