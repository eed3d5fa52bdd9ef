#include "bds/model.hpp"

#include "bds/errors.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

namespace bds {

namespace {

constexpr int kMaxDim = 8;

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace

std::string format_point(std::span<const double> x) {
    std::string out = "(";
    char buf[32];
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.6g", x[i]);
        if (i) out += ", ";
        out += buf;
    }
    out += ")";
    return out;
}

double ModelSpec::K(std::span<const double> x) const {
    return death.value(x) - birth.value(x);
}

std::string ModelSpec::descriptor() const {
    return "dim=" + std::to_string(dimension) + ";V=" + V.descriptor() +
           ";b=" + birth.descriptor() + ";d=" + death.descriptor();
}

std::uint64_t ModelSpec::hash() const { return fnv1a64(descriptor()); }

void ModelSpec::validate_rates(double radius) const {
    if (dimension < 1 || dimension > kMaxDim)
        throw EvaluationError("model dimension must be in [1, " + std::to_string(kMaxDim) +
                              "], got " + std::to_string(dimension));
    std::vector<double> x(dimension, 0.0);
    for (int axis = 0; axis < dimension; ++axis) {
        for (int i = 0; i <= 16; ++i) {
            for (double s : {-1.0, 1.0}) {
                for (double& c : x) c = 0.0;
                x[axis] = s * radius * static_cast<double>(i) / 16.0;
                const double b = birth.value(x);
                const double d = death.value(x);
                if (!std::isfinite(b) || b < 0.0)
                    throw EvaluationError("birth rate invalid (" + std::to_string(b) +
                                          ") at x=" + format_point(x));
                if (!std::isfinite(d) || d < 0.0)
                    throw EvaluationError("death rate invalid (" + std::to_string(d) +
                                          ") at x=" + format_point(x));
            }
        }
    }
}

double effective_potential(const ModelSpec& spec, std::span<const double> x) {
    if (static_cast<int>(x.size()) != spec.dimension)
        throw EvaluationError("point dimension " + std::to_string(x.size()) +
                              " does not match model dimension " +
                              std::to_string(spec.dimension));
    for (double xi : x)
        if (!std::isfinite(xi))
            throw EvaluationError("non-finite point " + format_point(x));

    const double b = spec.birth.value(x);
    if (!std::isfinite(b))
        throw EvaluationError("birth rate non-finite at x=" + format_point(x));
    const double d = spec.death.value(x);
    if (!std::isfinite(d))
        throw EvaluationError("death rate non-finite at x=" + format_point(x));

    const double lap = spec.V.laplacian(x);
    double gbuf[kMaxDim];
    std::span<double> grad(gbuf, x.size());
    spec.V.gradient(x, grad);
    double g2 = 0.0;
    for (double gi : grad) g2 += gi * gi;
    if (!std::isfinite(lap) || !std::isfinite(g2))
        throw EvaluationError("potential V derivative non-finite at x=" + format_point(x));

    const double out = (d - b) + 0.5 * lap + 0.5 * g2;
    if (!std::isfinite(out))
        throw EvaluationError("effective potential non-finite at x=" + format_point(x));
    return out;
}

} // namespace bds
