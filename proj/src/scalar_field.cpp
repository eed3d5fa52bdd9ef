#include "bds/scalar_field.hpp"

#include "bds/errors.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <utility>

namespace bds {

namespace {

std::string fmt_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double radius(std::span<const double> x) {
    double s = 0.0;
    for (double xi : x) s += xi * xi;
    return std::sqrt(s);
}

} // namespace

struct ScalarField::Impl {
    virtual ~Impl() = default;
    virtual double value(std::span<const double> x) const = 0;
    virtual void gradient(std::span<const double> x, std::span<double> out) const = 0;
    virtual double laplacian(std::span<const double> x) const = 0;
    std::string descriptor;
};

namespace {

struct ConstantImpl final : ScalarField::Impl {
    double k;
    double value(std::span<const double>) const override { return k; }
    void gradient(std::span<const double>, std::span<double> out) const override {
        for (double& g : out) g = 0.0;
    }
    double laplacian(std::span<const double>) const override { return 0.0; }
};

struct QuadraticImpl final : ScalarField::Impl {
    double c; // c|x|^2/2
    double value(std::span<const double> x) const override {
        double r2 = 0.0;
        for (double xi : x) r2 += xi * xi;
        return 0.5 * c * r2;
    }
    void gradient(std::span<const double> x, std::span<double> out) const override {
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = c * x[i];
    }
    double laplacian(std::span<const double> x) const override {
        return c * static_cast<double>(x.size());
    }
};

struct RadialPolyImpl final : ScalarField::Impl {
    double a, alpha, shift; // a|x|^alpha + shift
    double value(std::span<const double> x) const override {
        if (alpha == 0.0) return a + shift;
        return a * std::pow(radius(x), alpha) + shift;
    }
    void gradient(std::span<const double> x, std::span<double> out) const override {
        const double r = radius(x);
        if (alpha == 0.0 || r == 0.0) {
            for (double& g : out) g = 0.0;
            return;
        }
        const double f = a * alpha * std::pow(r, alpha - 2.0);
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = f * x[i];
    }
    double laplacian(std::span<const double> x) const override {
        const double d = static_cast<double>(x.size());
        if (alpha == 0.0) return 0.0;
        const double coef = a * alpha * (alpha + d - 2.0);
        if (coef == 0.0) return 0.0; // e.g. alpha = 1 in one dimension
        const double r = radius(x);
        if (r == 0.0) return alpha == 2.0 ? coef : 0.0;
        return coef * std::pow(r, alpha - 2.0);
    }
};

struct ScaledImpl final : ScalarField::Impl {
    double s;
    ScalarField base;
    ScaledImpl(double s_, ScalarField b) : s(s_), base(std::move(b)) {}
    double value(std::span<const double> x) const override { return s * base.value(x); }
    void gradient(std::span<const double> x, std::span<double> out) const override {
        base.gradient(x, out);
        for (double& g : out) g *= s;
    }
    double laplacian(std::span<const double> x) const override { return s * base.laplacian(x); }
};

struct SumImpl final : ScalarField::Impl {
    std::vector<ScalarField> terms;
    double value(std::span<const double> x) const override {
        double v = 0.0;
        for (const auto& t : terms) v += t.value(x);
        return v;
    }
    void gradient(std::span<const double> x, std::span<double> out) const override {
        for (double& g : out) g = 0.0;
        double buf[8];
        std::span<double> tmp(buf, x.size());
        for (const auto& t : terms) {
            t.gradient(x, tmp);
            for (std::size_t i = 0; i < x.size(); ++i) out[i] += tmp[i];
        }
    }
    double laplacian(std::span<const double> x) const override {
        double v = 0.0;
        for (const auto& t : terms) v += t.laplacian(x);
        return v;
    }
};

} // namespace

ScalarField::ScalarField() : ScalarField(constant(0.0).impl_) {}
ScalarField::ScalarField(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

double ScalarField::value(std::span<const double> x) const { return impl_->value(x); }
void ScalarField::gradient(std::span<const double> x, std::span<double> out) const {
    impl_->gradient(x, out);
}
double ScalarField::laplacian(std::span<const double> x) const { return impl_->laplacian(x); }

std::vector<double> ScalarField::gradient(std::span<const double> x) const {
    std::vector<double> g(x.size());
    impl_->gradient(x, g);
    return g;
}

const std::string& ScalarField::descriptor() const { return impl_->descriptor; }

ScalarField ScalarField::constant(double k) {
    auto impl = std::make_shared<ConstantImpl>();
    impl->k = k;
    impl->descriptor = "constant(" + fmt_num(k) + ")";
    return ScalarField(impl);
}

ScalarField ScalarField::quadratic(double c) {
    auto impl = std::make_shared<QuadraticImpl>();
    impl->c = c;
    impl->descriptor = "quadratic(" + fmt_num(c) + ")";
    return ScalarField(impl);
}

ScalarField ScalarField::radial_poly(double a, double alpha, double shift) {
    if (!(alpha >= 0.0))
        throw EvaluationError("radial_poly: exponent must be >= 0, got " + fmt_num(alpha));
    auto impl = std::make_shared<RadialPolyImpl>();
    impl->a = a;
    impl->alpha = alpha;
    impl->shift = shift;
    impl->descriptor =
        "radial_poly(" + fmt_num(a) + "," + fmt_num(alpha) + "," + fmt_num(shift) + ")";
    return ScalarField(impl);
}

ScalarField ScalarField::scaled(double s, const ScalarField& f) {
    auto impl = std::make_shared<ScaledImpl>(s, f);
    impl->descriptor = "scale(" + fmt_num(s) + "," + f.descriptor() + ")";
    return ScalarField(impl);
}

ScalarField ScalarField::sum(std::vector<ScalarField> terms) {
    auto impl = std::make_shared<SumImpl>();
    std::string d = "sum(";
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (i) d += ",";
        d += terms[i].descriptor();
    }
    d += ")";
    impl->terms = std::move(terms);
    impl->descriptor = std::move(d);
    return ScalarField(impl);
}

namespace {

// Minimal recursive-descent parser for the descriptor grammar.
struct Parser {
    std::string_view text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError("field descriptor: " + msg + " at offset " + std::to_string(pos) +
                          " in \"" + std::string(text) + "\"");
    }

    char peek() {
        skip_ws();
        if (pos >= text.size()) fail("unexpected end");
        return text[pos];
    }

    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos;
    }

    std::string ident() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        if (pos == start) fail("expected identifier");
        return std::string(text.substr(start, pos - start));
    }

    double number() {
        skip_ws();
        const char* begin = text.data() + pos;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) fail("expected number");
        pos += static_cast<std::size_t>(end - begin);
        return v;
    }

    ScalarField field() {
        std::string name = ident();
        expect('(');
        ScalarField out;
        if (name == "constant") {
            out = ScalarField::constant(number());
        } else if (name == "quadratic") {
            out = ScalarField::quadratic(number());
        } else if (name == "radial_poly") {
            double a = number();
            expect(',');
            double alpha = number();
            double shift = 0.0;
            if (peek() == ',') {
                ++pos;
                shift = number();
            }
            out = ScalarField::radial_poly(a, alpha, shift);
        } else if (name == "scale") {
            double s = number();
            expect(',');
            ScalarField base = field();
            out = ScalarField::scaled(s, base);
        } else if (name == "sum") {
            std::vector<ScalarField> terms;
            terms.push_back(field());
            while (peek() == ',') {
                ++pos;
                terms.push_back(field());
            }
            out = ScalarField::sum(std::move(terms));
        } else {
            fail("unknown field kind '" + name + "'");
        }
        expect(')');
        return out;
    }
};

} // namespace

ScalarField ScalarField::parse(std::string_view text) {
    Parser p{text};
    ScalarField f = p.field();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("trailing characters");
    return f;
}

} // namespace bds
