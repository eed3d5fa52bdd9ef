// Drives the bdlab binary end to end: exit-code contract, determinism of
// file outputs, and the bundled scenarios. The binary path arrives as argv[1].

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

std::string g_bdlab;
int g_failures = 0;

void expect(bool ok, const std::string& what) {
    if (ok) {
        std::printf("[PASS] %s\n", what.c_str());
    } else {
        std::printf("[FAIL] %s\n", what.c_str());
        ++g_failures;
    }
}

int run(const std::string& args, const fs::path& log) {
    const std::string cmd = g_bdlab + " " + args + " >" + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
}

const char* kSmallHarmonic = R"(
[model]
dimension = 1
V = constant(0)
b = constant(0)
d = radial_poly(0.5,2,0)

[grid]
R = 8
n = 401
m_modes = 4
tol = 1e-9

[sim]
dt = 5e-3
t_max = 1
n_paths = 2000
seed = 99

[verify]
times = 0.5,1
phis = one
checks = total_mass
x0 = 0
)";

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: test_cli <path-to-bdlab>\n");
        return 2;
    }
    g_bdlab = argv[1];
    const fs::path work = fs::temp_directory_path() / "bdlab_cli_test";
    fs::remove_all(work);
    fs::create_directories(work);
    const fs::path log = work / "run.log";

    // Usage errors.
    expect(run("spectrum", log) == 1, "spectrum without config is a usage error (exit 1)");
    expect(run("verify --scenario nope --out " + (work / "o0").string(), log) == 1,
           "unknown scenario is a usage error (exit 1)");
    {
        write_file(work / "bad.ini", "[model]\ndimensions = 1\n");
        expect(run("spectrum --config " + (work / "bad.ini").string(), log) == 1,
               "misspelled key is rejected (exit 1)");
    }

    // Spectrum: determinism and the harmonic ground state.
    {
        const int rc1 = run("spectrum --scenario harmonic --out " + (work / "s1").string(), log);
        const int rc2 = run("spectrum --scenario harmonic --out " + (work / "s2").string(), log);
        expect(rc1 == 0 && rc2 == 0, "spectrum scenario runs (exit 0)");
        expect(slurp(work / "s1" / "eigenvalues.csv") == slurp(work / "s2" / "eigenvalues.csv") &&
                   slurp(work / "s1" / "eigenvectors.csv") ==
                       slurp(work / "s2" / "eigenvectors.csv"),
               "repeated spectrum runs are byte-identical");
        const std::string vals = slurp(work / "s1" / "eigenvalues.csv");
        const auto pos = vals.find("\n0,");
        double lam0 = -1;
        if (pos != std::string::npos) std::sscanf(vals.c_str() + pos + 1, "0,%lf", &lam0);
        expect(std::fabs(lam0 - 0.5) < 1e-3, "harmonic lambda0 within 1e-3 of 0.5");
    }

    // Degenerate model: flat K~ has no discrete spectrum to compute.
    {
        write_file(work / "flat.ini", R"(
[model]
dimension = 1
V = constant(0)
b = constant(0)
d = constant(0)

[grid]
R = 8
n = 401
m_modes = 4
tol = 1e-9
)");
        const int rc = run("spectrum --config " + (work / "flat.ini").string(), log);
        const std::string msg = slurp(log);
        expect(rc == 2, "flat potential exits 2");
        expect(msg.find("not discrete") != std::string::npos,
               "diagnostic cites discreteness failure");
    }

    // fk: determinism under a fixed seed, difference under another.
    {
        write_file(work / "fk.ini", std::string(kSmallHarmonic) + "\n[output]\ndir = " +
                                        (work / "f1").string() + "\n");
        expect(run("fk --config " + (work / "fk.ini").string(), log) == 0, "fk runs (exit 0)");
        expect(run("fk --config " + (work / "fk.ini").string() + " --out " +
                       (work / "f2").string(),
                   log) == 0,
               "fk rerun (exit 0)");
        expect(slurp(work / "f1" / "fk.csv") == slurp(work / "f2" / "fk.csv"),
               "same seed gives byte-identical fk output");
        expect(run("fk --config " + (work / "fk.ini").string() + " --seed 123 --out " +
                       (work / "f3").string(),
                   log) == 0,
               "fk with overridden seed (exit 0)");
        expect(slurp(work / "f1" / "fk.csv") != slurp(work / "f3" / "fk.csv"),
               "different seed changes fk output");
    }

    // simulate: unit mean mass for b = d.
    {
        write_file(work / "crit.ini", R"(
[model]
dimension = 1
V = constant(0)
b = constant(0.5)
d = constant(0.5)

[sim]
dt = 5e-3
t_max = 1
n_paths = 2000
seed = 4

[verify]
times = 0.5,1
phis = one
checks = mass_closed_form
x0 = 0
)");
        expect(run("simulate --config " + (work / "crit.ini").string() + " --out " +
                       (work / "sim1").string(),
                   log) == 0,
               "simulate runs (exit 0)");
        std::ifstream ts(work / "sim1" / "timeseries.csv");
        std::string line;
        double sum = 0;
        long count = 0;
        while (std::getline(ts, line)) {
            if (line.empty() || line[0] == '#' || line[0] == 'r') continue;
            long rep, n;
            double t;
            int capped, extinct;
            if (std::sscanf(line.c_str(), "%ld,%lf,%ld,%d,%d", &rep, &t, &n, &capped,
                            &extinct) == 5 &&
                std::fabs(t - 1.0) < 1e-9) {
                sum += double(n);
                ++count;
            }
        }
        expect(count == 2000 && std::fabs(sum / double(count) - 1.0) < 0.1,
               "critical mean mass stays near 1");
    }

    // verify: fault injection must fail, the real thing must pass.
    {
        write_file(work / "inject.ini",
                   std::string(kSmallHarmonic) + "\n" /* lambda0_override appended below */);
        std::ofstream f(work / "inject.ini", std::ios::app);
        f << "\n";
        f.close();
        // Append the override inside the verify section by rewriting.
        std::string text(kSmallHarmonic);
        text.insert(text.find("x0 = 0"), "lambda0_override = 0.9\n");
        write_file(work / "inject.ini", text);
        expect(run("verify --config " + (work / "inject.ini").string() + " --out " +
                       (work / "v_bad").string(),
                   log) == 4,
               "wrong injected lambda0 exits 4");

        expect(run("verify --config " + (work / "fk.ini").string() + " --out " +
                       (work / "v_ok").string(),
                   log) == 0,
               "small total-mass verify passes (exit 0)");
    }

    // bounds: sweep table plus assumption verdict; empty sweep is usage error.
    {
        write_file(work / "bounds.ini", R"(
[model]
dimension = 1
V = radial_poly(1,1,0)
b = constant(0)
d = radial_poly(1,2,0)

[bounds]
c = 10
c0 = 0.05
r0 = 1
ball_samples = 64
branch = ess
c_sweep = 5,10
c0_sweep = 0.05
box_radius = 8
quad_tol = 1e-6
alpha = 1
beta = 2
)");
        expect(run("bounds --config " + (work / "bounds.ini").string() + " --out " +
                       (work / "b1").string(),
                   log) == 0,
               "bounds sweep runs (exit 0)");
        const std::string sweep = slurp(work / "b1" / "bounds_sweep.csv");
        expect(sweep.find("example13_admissible: true") != std::string::npos,
               "sweep annotated with admissibility");
        expect(sweep.find(",1,0\n") != std::string::npos, "sweep cells converge");

        write_file(work / "bounds_empty.ini", R"(
[model]
dimension = 1
V = constant(0)
b = constant(0)
d = radial_poly(1,2,0)

[bounds]
branch = ess
)");
        expect(run("bounds --config " + (work / "bounds_empty.ini").string(), log) == 1,
               "empty sweep grid is a usage error (exit 1)");
    }

    // Bundled scenarios end to end.
    {
        expect(run("verify --scenario yule --out " + (work / "vy").string(), log) == 0,
               "yule scenario verifies (exit 0)");
        expect(run("verify --scenario critical --out " + (work / "vc").string(), log) == 0,
               "critical scenario verifies (exit 0)");
        expect(run("verify --scenario ou-kappa --out " + (work / "vo").string(), log) == 0,
               "ou-kappa scenario verifies (exit 0)");
        expect(run("verify --scenario harmonic --out " + (work / "vh").string(), log) == 0,
               "harmonic scenario verifies (exit 0)");
        const std::string summary = slurp(work / "vh" / "summary.txt");
        expect(summary.find("check=total_mass verdict=pass") != std::string::npos,
               "harmonic summary records the mass check");
        expect(summary.find("verdict=fail") == std::string::npos,
               "no failed checks in the harmonic summary");
    }

    // qsd subcommand produces a normalized cloud.
    {
        expect(run("qsd --config " + (work / "fk.ini").string() + " --out " +
                       (work / "q1").string(),
                   log) == 0,
               "qsd runs (exit 0)");
        std::ifstream cloud(work / "q1" / "qsd_cloud.csv");
        std::string line;
        double wsum = 0;
        while (std::getline(cloud, line)) {
            if (line.empty() || line[0] == '#' || line[0] == 'x') continue;
            double x, w;
            if (std::sscanf(line.c_str(), "%lf,%lf", &x, &w) == 2) wsum += w;
        }
        expect(std::fabs(wsum - 1.0) < 1e-9, "qsd cloud weights sum to 1");
    }

    std::printf("%s\n", g_failures == 0 ? "ALL CLI CHECKS PASSED" : "CLI CHECKS FAILED");
    return g_failures == 0 ? 0 : 1;
}
