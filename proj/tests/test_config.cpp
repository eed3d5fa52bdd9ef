#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bds/config.hpp"
#include "bds/errors.hpp"

#include <cmath>

using namespace bds;

TEST_CASE("sections parse with defaults and overrides") {
    const RunConfig cfg = parse_run_config(R"(
# comment
[model]
dimension = 2
V = quadratic(-1)
d = radial_poly(0.5,2,0)

[grid]
R = 6
n = 97

[sim]
dt = 0.002
n_paths = 500
seed = 42
)");
    REQUIRE(cfg.model.has_value());
    CHECK(cfg.model->dimension == 2);
    CHECK(cfg.model->V == "quadratic(-1)");
    CHECK(cfg.model->b == "constant(0)"); // default
    REQUIRE(cfg.grid.has_value());
    CHECK(cfg.grid->R == 6.0);
    CHECK(cfg.grid->n == 97);
    CHECK(cfg.grid->m_modes == 8); // default
    REQUIRE(cfg.sim.has_value());
    CHECK(cfg.sim->dt == 0.002);
    CHECK(cfg.sim->seed == 42);
    CHECK_FALSE(cfg.bounds.has_value());
    CHECK_FALSE(cfg.verify.has_value());

    const ModelSpec spec = make_model(*cfg.model);
    CHECK(spec.dimension == 2);
    CHECK(spec.V.value(std::vector<double>{1.0, 1.0}) == doctest::Approx(-1.0));
}

TEST_CASE("strict parsing rejects unknown keys and sections") {
    CHECK_THROWS_AS(parse_run_config("[model]\ndimensions = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("[grids]\nR = 8\n"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("[model]\ndimension = 1\ndimension = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("dimension = 1\n"), ConfigError); // key outside section
    CHECK_THROWS_AS(parse_run_config("[sim]\ndt = fast\n"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("[verify]\ntimes = 1,2\nphi = one\n"), ConfigError);
}

TEST_CASE("list values and point functions") {
    const RunConfig cfg = parse_run_config(R"(
[verify]
times = 0.5, 1, 2
phis = one, bump(1,0.75), coord
x0 = 0.25
)");
    REQUIRE(cfg.verify.has_value());
    CHECK(cfg.verify->times == std::vector<double>{0.5, 1.0, 2.0});
    REQUIRE(cfg.verify->phis.size() == 3);
    CHECK(cfg.verify->phis[1] == "bump(1,0.75)"); // parenthesized commas survive

    const NamedPointFunction one = parse_point_function("one");
    CHECK(one.fn(std::vector<double>{3.0}) == 1.0);
    const NamedPointFunction coord = parse_point_function("coord");
    CHECK(coord.fn(std::vector<double>{3.0, 4.0}) == 3.0);
    const NamedPointFunction bump = parse_point_function("bump(1,0.5)");
    CHECK(bump.fn(std::vector<double>{1.0}) == doctest::Approx(1.0));
    CHECK(bump.fn(std::vector<double>{1.5}) == doctest::Approx(std::exp(-1.0)));
    CHECK_THROWS_AS(parse_point_function("mystery"), ConfigError);
    CHECK_THROWS_AS(parse_point_function("bump(1)"), ConfigError);
}

TEST_CASE("canonical form and hash are stable") {
    const char* text = R"(
[model]
dimension = 1
V = constant(0)

[sim]
dt = 0.001
seed = 7
)";
    const RunConfig a = parse_run_config(text);
    const RunConfig b = parse_run_config(text);
    CHECK(a.canonical() == b.canonical());
    CHECK(a.hash_hex() == b.hash_hex());
    CHECK(a.hash_hex().size() == 16);

    RunConfig c = a;
    c.sim->seed = 8;
    CHECK(c.hash_hex() != a.hash_hex());
}

TEST_CASE("bundled scenarios are well-formed") {
    for (const auto& name : scenario_names()) {
        const RunConfig cfg = scenario_config(name);
        REQUIRE(cfg.model.has_value());
        REQUIRE(cfg.sim.has_value());
        REQUIRE(cfg.verify.has_value());
        const ModelSpec spec = make_model(*cfg.model);
        spec.validate_rates(4.0);
        const SimConfig sim = make_sim_config(*cfg.sim);
        CHECK(sim.n_paths >= 1000);
        if (cfg.bounds) {
            const BoundParams p = make_bound_params(*cfg.bounds);
            CHECK(p.ball_samples >= 32);
        }
    }
    CHECK_THROWS_AS(scenario_config("unknown"), ConfigError);
}

TEST_CASE("bounds section round trip") {
    const RunConfig cfg = parse_run_config(R"(
[bounds]
c = 2
c0 = 0.1
r0 = 1.5
ball_samples = 48
branch = ess
c_sweep = 1,2,4
c0_sweep = 0.05,0.1
alpha = 1
beta = 2
)");
    REQUIRE(cfg.bounds.has_value());
    const BoundParams p = make_bound_params(*cfg.bounds);
    CHECK(p.branch == BoundParams::Branch::ess);
    CHECK(p.r0 == 1.5);
    CHECK(cfg.bounds->c_sweep.size() == 3);
    CHECK(cfg.bounds->alpha.value() == 1.0);
    CHECK(cfg.canonical().find("bounds.branch=ess") != std::string::npos);

    RunConfig bad = cfg;
    bad.bounds->branch = "both";
    CHECK_THROWS_AS(make_bound_params(*bad.bounds), ConfigError);
}
