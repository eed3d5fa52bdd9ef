#pragma once

#include "bds/bounds.hpp"
#include "bds/model.hpp"
#include "bds/montecarlo.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bds {

struct ModelSection {
    int dimension = 1;
    std::string V = "constant(0)";
    std::string b = "constant(0)";
    std::string d = "constant(0)";
};

struct GridSection {
    double R = 8.0;
    int n = 801;
    int m_modes = 8;
    double tol = 1e-9;
};

struct SimSection {
    double dt = 1e-3;
    double t_max = 4.0;
    long n_paths = 20000;
    std::uint64_t seed = 1;
    long cap = 1000000;
    int threads = 0;
};

struct BoundsSection {
    double c = 10.0;
    double c0 = 0.05;
    double r0 = 1.0;
    int ball_samples = 64;
    std::string branch = "ess2";
    std::vector<double> c_sweep;
    std::vector<double> c0_sweep;
    double box_radius = 8.0;
    double quad_tol = 1e-6;
    std::optional<double> alpha; // growth exponents, for sweep annotation
    std::optional<double> beta;
    std::vector<double> assumption_radii = {2, 4, 8, 16};
    std::vector<double> assumption_thetas = {1};
};

struct VerifySection {
    std::vector<double> times = {1, 2, 3, 4};
    std::vector<std::string> phis = {"one"};
    std::vector<std::string> checks = {"total_mass"};
    double x0 = 0.0; // starting trait (first axis; remaining axes 0)
    std::optional<double> lambda0_override; // fault injection for harness tests
};

struct OutputSection {
    std::string dir = "out";
};

/// Full run configuration. Sections are optional; each subcommand demands
/// the ones it needs. Parsing is strict: unknown sections or keys are errors.
struct RunConfig {
    std::optional<ModelSection> model;
    std::optional<GridSection> grid;
    std::optional<SimSection> sim;
    std::optional<BoundsSection> bounds;
    std::optional<VerifySection> verify;
    std::optional<OutputSection> output;

    /// Canonical key=value rendering of the present sections; equal configs
    /// render identically.
    std::string canonical() const;
    std::uint64_t hash() const;
    std::string hash_hex() const;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// Bundled scenarios: harmonic, ou-kappa, yule, critical.
RunConfig scenario_config(const std::string& name);
std::vector<std::string> scenario_names();

ModelSpec make_model(const ModelSection& section);
BoundParams make_bound_params(const BoundsSection& section);
SimConfig make_sim_config(const SimSection& section);

struct NamedPointFunction {
    std::string descriptor;
    PointFunction fn;
};

/// Test-function descriptors for the verify/fk commands: "one", "coord",
/// "bump(center,width)" = exp(-|x - center e_1|^2 / width^2).
NamedPointFunction parse_point_function(const std::string& descriptor);

} // namespace bds
