#include "bds/config.hpp"

#include "bds/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace bds {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    std::size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double out = std::stod(v, &used);
        if (trim(v.substr(used)).empty()) return out;
    } catch (...) {
    }
    throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
}

long to_long(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long out = std::stol(v, &used);
        if (trim(v.substr(used)).empty()) return out;
    } catch (...) {
    }
    throw ConfigError("config: key '" + key + "' expects an integer, got '" + v + "'");
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const unsigned long long out = std::stoull(v, &used);
        if (trim(v.substr(used)).empty()) return out;
    } catch (...) {
    }
    throw ConfigError("config: key '" + key + "' expects an unsigned integer, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    // Comma-separated, but commas inside parentheses belong to descriptors
    // like bump(1,0.75).
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    for (char c : v) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == ',' && depth == 0) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty()) out.push_back(trim(cur));
    return out;
}

std::vector<double> to_double_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& item : split_list(v)) out.push_back(to_double(key, item));
    return out;
}

struct RawSection {
    std::map<std::string, std::string> kv;
};

std::map<std::string, RawSection> parse_ini(const std::string& text) {
    std::map<std::string, RawSection> sections;
    std::istringstream is(text);
    std::string line, current;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": bad section header");
            current = trim(t.substr(1, t.size() - 2));
            if (current.empty())
                throw ConfigError("config line " + std::to_string(lineno) + ": empty section name");
            sections[current]; // created even if left empty
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        if (current.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": key outside a section");
        const std::string key = trim(t.substr(0, eq));
        const std::string val = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        auto& sec = sections[current];
        if (sec.kv.count(key))
            throw ConfigError("config: duplicate key '" + current + "." + key + "'");
        sec.kv[key] = val;
    }
    return sections;
}

// Strict take-or-default access; leftover keys are rejected by the caller.
class SectionReader {
public:
    SectionReader(std::string name, RawSection raw) : name_(std::move(name)), raw_(std::move(raw)) {}

    bool has(const std::string& key) const { return raw_.kv.count(key) != 0; }

    std::string take(const std::string& key, const std::string& fallback) {
        auto it = raw_.kv.find(key);
        if (it == raw_.kv.end()) return fallback;
        std::string v = it->second;
        raw_.kv.erase(it);
        return v;
    }

    std::optional<std::string> take_optional(const std::string& key) {
        auto it = raw_.kv.find(key);
        if (it == raw_.kv.end()) return std::nullopt;
        std::string v = it->second;
        raw_.kv.erase(it);
        return v;
    }

    void finish() const {
        if (!raw_.kv.empty())
            throw ConfigError("config: unknown key '" + name_ + "." + raw_.kv.begin()->first +
                              "'");
    }

    const std::string& name() const { return name_; }

private:
    std::string name_;
    RawSection raw_;
};

} // namespace

RunConfig parse_run_config(const std::string& text) {
    auto sections = parse_ini(text);
    static const std::set<std::string> known = {"model", "grid",   "sim",
                                                "bounds", "verify", "output"};
    for (const auto& [name, _] : sections)
        if (!known.count(name)) throw ConfigError("config: unknown section '" + name + "'");

    RunConfig cfg;
    if (sections.count("model")) {
        SectionReader r("model", sections["model"]);
        ModelSection m;
        m.dimension = static_cast<int>(to_long("dimension", r.take("dimension", "1")));
        m.V = r.take("V", m.V);
        m.b = r.take("b", m.b);
        m.d = r.take("d", m.d);
        r.finish();
        cfg.model = m;
    }
    if (sections.count("grid")) {
        SectionReader r("grid", sections["grid"]);
        GridSection g;
        g.R = to_double("R", r.take("R", fmt_num(g.R)));
        g.n = static_cast<int>(to_long("n", r.take("n", std::to_string(g.n))));
        g.m_modes = static_cast<int>(to_long("m_modes", r.take("m_modes", std::to_string(g.m_modes))));
        g.tol = to_double("tol", r.take("tol", fmt_num(g.tol)));
        r.finish();
        cfg.grid = g;
    }
    if (sections.count("sim")) {
        SectionReader r("sim", sections["sim"]);
        SimSection s;
        s.dt = to_double("dt", r.take("dt", fmt_num(s.dt)));
        s.t_max = to_double("t_max", r.take("t_max", fmt_num(s.t_max)));
        s.n_paths = to_long("n_paths", r.take("n_paths", std::to_string(s.n_paths)));
        s.seed = to_u64("seed", r.take("seed", std::to_string(s.seed)));
        s.cap = to_long("cap", r.take("cap", std::to_string(s.cap)));
        s.threads = static_cast<int>(to_long("threads", r.take("threads", "0")));
        r.finish();
        cfg.sim = s;
    }
    if (sections.count("bounds")) {
        SectionReader r("bounds", sections["bounds"]);
        BoundsSection b;
        b.c = to_double("c", r.take("c", fmt_num(b.c)));
        b.c0 = to_double("c0", r.take("c0", fmt_num(b.c0)));
        b.r0 = to_double("r0", r.take("r0", fmt_num(b.r0)));
        b.ball_samples =
            static_cast<int>(to_long("ball_samples", r.take("ball_samples", "64")));
        b.branch = r.take("branch", b.branch);
        if (auto v = r.take_optional("c_sweep")) b.c_sweep = to_double_list("c_sweep", *v);
        if (auto v = r.take_optional("c0_sweep")) b.c0_sweep = to_double_list("c0_sweep", *v);
        b.box_radius = to_double("box_radius", r.take("box_radius", fmt_num(b.box_radius)));
        b.quad_tol = to_double("quad_tol", r.take("quad_tol", fmt_num(b.quad_tol)));
        if (auto v = r.take_optional("alpha")) b.alpha = to_double("alpha", *v);
        if (auto v = r.take_optional("beta")) b.beta = to_double("beta", *v);
        if (auto v = r.take_optional("assumption_radii"))
            b.assumption_radii = to_double_list("assumption_radii", *v);
        if (auto v = r.take_optional("assumption_thetas"))
            b.assumption_thetas = to_double_list("assumption_thetas", *v);
        r.finish();
        cfg.bounds = b;
    }
    if (sections.count("verify")) {
        SectionReader r("verify", sections["verify"]);
        VerifySection v;
        if (auto s = r.take_optional("times")) v.times = to_double_list("times", *s);
        if (auto s = r.take_optional("phis")) v.phis = split_list(*s);
        if (auto s = r.take_optional("checks")) v.checks = split_list(*s);
        v.x0 = to_double("x0", r.take("x0", fmt_num(v.x0)));
        if (auto s = r.take_optional("lambda0_override"))
            v.lambda0_override = to_double("lambda0_override", *s);
        r.finish();
        cfg.verify = v;
    }
    if (sections.count("output")) {
        SectionReader r("output", sections["output"]);
        OutputSection o;
        o.dir = r.take("dir", o.dir);
        r.finish();
        cfg.output = o;
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_run_config(ss.str());
}

std::string RunConfig::canonical() const {
    std::ostringstream os;
    auto num = [](double v) { return fmt_num(v); };
    auto list = [](const std::vector<double>& xs) {
        std::string s;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (i) s += ",";
            s += fmt_num(xs[i]);
        }
        return s;
    };
    auto slist = [](const std::vector<std::string>& xs) {
        std::string s;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (i) s += ",";
            s += xs[i];
        }
        return s;
    };
    if (model) {
        os << "model.dimension=" << model->dimension << "\n";
        os << "model.V=" << model->V << "\n";
        os << "model.b=" << model->b << "\n";
        os << "model.d=" << model->d << "\n";
    }
    if (grid) {
        os << "grid.R=" << num(grid->R) << "\n";
        os << "grid.n=" << grid->n << "\n";
        os << "grid.m_modes=" << grid->m_modes << "\n";
        os << "grid.tol=" << num(grid->tol) << "\n";
    }
    if (sim) {
        os << "sim.dt=" << num(sim->dt) << "\n";
        os << "sim.t_max=" << num(sim->t_max) << "\n";
        os << "sim.n_paths=" << sim->n_paths << "\n";
        os << "sim.seed=" << sim->seed << "\n";
        os << "sim.cap=" << sim->cap << "\n";
        os << "sim.threads=" << sim->threads << "\n";
    }
    if (bounds) {
        os << "bounds.c=" << num(bounds->c) << "\n";
        os << "bounds.c0=" << num(bounds->c0) << "\n";
        os << "bounds.r0=" << num(bounds->r0) << "\n";
        os << "bounds.ball_samples=" << bounds->ball_samples << "\n";
        os << "bounds.branch=" << bounds->branch << "\n";
        os << "bounds.c_sweep=" << list(bounds->c_sweep) << "\n";
        os << "bounds.c0_sweep=" << list(bounds->c0_sweep) << "\n";
        os << "bounds.box_radius=" << num(bounds->box_radius) << "\n";
        os << "bounds.quad_tol=" << num(bounds->quad_tol) << "\n";
        if (bounds->alpha) os << "bounds.alpha=" << num(*bounds->alpha) << "\n";
        if (bounds->beta) os << "bounds.beta=" << num(*bounds->beta) << "\n";
        os << "bounds.assumption_radii=" << list(bounds->assumption_radii) << "\n";
        os << "bounds.assumption_thetas=" << list(bounds->assumption_thetas) << "\n";
    }
    if (verify) {
        os << "verify.times=" << list(verify->times) << "\n";
        os << "verify.phis=" << slist(verify->phis) << "\n";
        os << "verify.checks=" << slist(verify->checks) << "\n";
        os << "verify.x0=" << num(verify->x0) << "\n";
        if (verify->lambda0_override)
            os << "verify.lambda0_override=" << num(*verify->lambda0_override) << "\n";
    }
    if (output) os << "output.dir=" << output->dir << "\n";
    return os.str();
}

std::uint64_t RunConfig::hash() const {
    const std::string s = canonical();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string RunConfig::hash_hex() const {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
}

namespace {

const char* kHarmonic = R"(
[model]
dimension = 1
V = constant(0)
b = constant(0)
d = radial_poly(0.5,2,0)

[grid]
R = 8
n = 801
m_modes = 8
tol = 1e-9

[sim]
dt = 1e-3
t_max = 4
n_paths = 20000
seed = 20260810
cap = 1000000

[bounds]
c = 10
c0 = 0.05
r0 = 1
ball_samples = 64
branch = ess2
c_sweep = 1,5,10,20
c0_sweep = 0.01,0.05,0.2
box_radius = 8
quad_tol = 1e-6

[verify]
times = 1,2,3,4
phis = one,bump(1,0.75)
checks = total_mass,gap_rate,qsd
x0 = 0

[output]
dir = out
)";

const char* kOuKappa = R"(
[model]
dimension = 1
V = quadratic(-1)
b = constant(0)
d = constant(0.3)

[grid]
R = 8
n = 801
m_modes = 6
tol = 1e-9

[sim]
dt = 1e-3
t_max = 4
n_paths = 20000
seed = 20260811
cap = 1000000

[bounds]
c = 10
c0 = 0.05
r0 = 1
ball_samples = 64
branch = ess2
box_radius = 8
quad_tol = 1e-6

[verify]
times = 1,2,3,4
phis = one,coord
checks = total_mass,qsd
x0 = 0.7

[output]
dir = out
)";

const char* kYule = R"(
[model]
dimension = 1
V = constant(0)
b = constant(0.5)
d = constant(0)

[sim]
dt = 1e-3
t_max = 2
n_paths = 20000
seed = 20260812
cap = 1000000

[verify]
times = 0.5,1,1.5,2
phis = one
checks = mass_closed_form
x0 = 0

[output]
dir = out
)";

const char* kCritical = R"(
[model]
dimension = 1
V = constant(0)
b = constant(0.5)
d = constant(0.5)

[sim]
dt = 1e-3
t_max = 2
n_paths = 20000
seed = 20260813
cap = 1000000

[verify]
times = 0.5,1,1.5,2
phis = one
checks = mass_closed_form
x0 = 0

[output]
dir = out
)";

} // namespace

RunConfig scenario_config(const std::string& name) {
    if (name == "harmonic") return parse_run_config(kHarmonic);
    if (name == "ou-kappa") return parse_run_config(kOuKappa);
    if (name == "yule") return parse_run_config(kYule);
    if (name == "critical") return parse_run_config(kCritical);
    throw ConfigError("unknown scenario '" + name + "'; available: harmonic, ou-kappa, yule, "
                      "critical");
}

std::vector<std::string> scenario_names() { return {"harmonic", "ou-kappa", "yule", "critical"}; }

ModelSpec make_model(const ModelSection& section) {
    ModelSpec spec;
    spec.dimension = section.dimension;
    spec.V = ScalarField::parse(section.V);
    spec.birth = ScalarField::parse(section.b);
    spec.death = ScalarField::parse(section.d);
    return spec;
}

BoundParams make_bound_params(const BoundsSection& section) {
    BoundParams p;
    p.c = section.c;
    p.c0 = section.c0;
    p.r0 = section.r0;
    p.ball_samples = section.ball_samples;
    if (section.branch == "ess")
        p.branch = BoundParams::Branch::ess;
    else if (section.branch == "ess2")
        p.branch = BoundParams::Branch::ess2;
    else
        throw ConfigError("bounds.branch must be 'ess' or 'ess2', got '" + section.branch + "'");
    p.validate();
    return p;
}

SimConfig make_sim_config(const SimSection& section) {
    SimConfig cfg;
    cfg.dt = section.dt;
    cfg.t_max = section.t_max;
    cfg.n_paths = section.n_paths;
    cfg.rng_seed = section.seed;
    cfg.population_cap = section.cap;
    cfg.threads = section.threads;
    cfg.validate();
    return cfg;
}

NamedPointFunction parse_point_function(const std::string& descriptor) {
    const std::string d = trim(descriptor);
    if (d == "one") return {"one", [](std::span<const double>) { return 1.0; }};
    if (d == "coord") return {"coord", [](std::span<const double> x) { return x[0]; }};
    if (d.rfind("bump(", 0) == 0 && d.back() == ')') {
        const std::string args = d.substr(5, d.size() - 6);
        const auto parts = split_list(args);
        if (parts.size() != 2) throw ConfigError("bump(center,width) expects two arguments");
        const double center = to_double("bump.center", parts[0]);
        const double width = to_double("bump.width", parts[1]);
        if (!(width > 0.0)) throw ConfigError("bump width must be positive");
        return {d, [center, width](std::span<const double> x) {
                    double q = (x[0] - center) * (x[0] - center);
                    for (std::size_t a = 1; a < x.size(); ++a) q += x[a] * x[a];
                    return std::exp(-q / (width * width));
                }};
    }
    throw ConfigError("unknown test function '" + d + "'; use one, coord or bump(center,width)");
}

} // namespace bds
