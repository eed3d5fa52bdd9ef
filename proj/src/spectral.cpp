#include "bds/spectral.hpp"

#include "bds/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace bds {

namespace {

double fit_line(const std::vector<double>& xs, const std::vector<double>& ys, double& intercept) {
    const std::size_t n = xs.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    const double slope = sxx > 0 ? sxy / sxx : 0.0;
    intercept = my - slope * mx;
    return slope;
}

} // namespace

double SpectralDecomposition::inner_dx(std::span<const double> a,
                                       std::span<const double> b) const {
    double s = 0.0;
    for (std::size_t k = 0; k < quad_weights.size(); ++k) s += quad_weights[k] * a[k] * b[k];
    return s;
}

double SpectralDecomposition::inner_mu(std::span<const double> a,
                                       std::span<const double> b) const {
    double s = 0.0;
    for (std::size_t k = 0; k < quad_weights.size(); ++k)
        s += quad_weights[k] * std::exp(2.0 * v_nodes[k]) * a[k] * b[k];
    return s;
}

double SpectralDecomposition::mu_phi0() const {
    double s = 0.0;
    for (std::size_t k = 0; k < quad_weights.size(); ++k)
        s += quad_weights[k] * std::exp(v_nodes[k]) * phi_tilde[0][k];
    return s;
}

void SpectralDecomposition::validate(double residual_tol) const {
    const int m = modes();
    if (m < 2) throw SolverError("decomposition: need at least 2 modes");
    if (eigenvalues[1] - eigenvalues[0] < 1e-10)
        throw SolverError("decomposition rejected: ground state degenerate (gap " +
                          std::to_string(eigenvalues[1] - eigenvalues[0]) + ")");
    for (int i = 1; i < m; ++i)
        if (eigenvalues[i] < eigenvalues[i - 1] - 1e-12)
            throw SolverError("decomposition: eigenvalues not ascending");

    // Ground state sign: entries that are significant must all be positive.
    double amax = 0.0;
    for (double v : phi_tilde[0]) amax = std::max(amax, std::fabs(v));
    for (double v : phi_tilde[0])
        if (v < -1e-12 * amax)
            throw SolverError("decomposition: ground state changes sign");

    for (int i = 0; i < m; ++i) {
        for (int j = i; j < m; ++j) {
            const double g = inner_dx(phi_tilde[i], phi_tilde[j]);
            const double want = i == j ? 1.0 : 0.0;
            if (std::fabs(g - want) > 1e-8)
                throw SolverError("decomposition: orthonormality violation at (" +
                                  std::to_string(i) + "," + std::to_string(j) + "): " +
                                  std::to_string(g));
        }
        const double mu_norm = inner_mu(phi[i], phi[i]);
        if (std::fabs(mu_norm - 1.0) > 1e-8)
            throw SolverError("decomposition: mu-norm of phi_" + std::to_string(i) +
                              " is " + std::to_string(mu_norm));
        if (!(residuals[i] <= residual_tol))
            throw SolverError("decomposition: residual of mode " + std::to_string(i) +
                              " is " + std::to_string(residuals[i]));
    }
}

SpectralDecomposition eigs_smallest(const DiscreteOperator& op, int m_modes, double tol) {
    if (m_modes < 2) throw SolverError("eigs_smallest: need m_modes >= 2");
    if (op.grid().points_per_axis() < 16)
        throw SolverError("eigs_smallest: spectral grids need n >= 16 points per axis");
    if (static_cast<std::size_t>(m_modes) * 4 > op.size())
        throw SolverError("eigs_smallest: m_modes must be well below the node count");

    LanczosResult lr = smallest_eigenpairs(op, m_modes, tol);

    SpectralDecomposition dec{op.grid(), op.model().descriptor(), op.model().hash(),
                              op.shift(),  {},                    {},
                              {},          lr.residuals,          {},
                              {}};
    dec.quad_weights = op.grid().weights();
    const std::size_t N = op.size();
    dec.v_nodes.resize(N);
    std::vector<double> x(op.grid().dimension());
    for (std::size_t k = 0; k < N; ++k) {
        op.grid().node(k, x);
        dec.v_nodes[k] = op.model().V.value(x);
    }

    for (int n = 0; n < m_modes; ++n) {
        dec.eigenvalues.push_back(lr.values[n] - op.shift());
        dec.phi_tilde.push_back(std::move(lr.vectors[n]));
    }
    if (dec.eigenvalues[1] - dec.eigenvalues[0] < 1e-10)
        throw SolverError("eigs_smallest: degenerate ground state, gap " +
                          std::to_string(dec.eigenvalues[1] - dec.eigenvalues[0]));

    for (int n = 0; n < m_modes; ++n) {
        auto& v = dec.phi_tilde[n];
        // Deterministic sign: largest-magnitude entry positive (for the
        // ground state this makes every significant entry positive).
        std::size_t imax = 0;
        for (std::size_t k = 1; k < N; ++k)
            if (std::fabs(v[k]) > std::fabs(v[imax])) imax = k;
        if (v[imax] < 0.0)
            for (double& q : v) q = -q;
        // Unit norm under grid quadrature.
        const double nrm = std::sqrt(dec.inner_dx(v, v));
        for (double& q : v) q /= nrm;

        std::vector<double> ph(N);
        for (std::size_t k = 0; k < N; ++k) ph[k] = std::exp(-dec.v_nodes[k]) * v[k];
        for (double q : ph)
            if (!std::isfinite(q))
                throw SolverError("eigs_smallest: e^{-V} phi~ overflowed; "
                                  "V too negative on this box");
        dec.phi.push_back(std::move(ph));
    }

    dec.validate(tol);
    return dec;
}

HeatKernelValue heat_kernel(const SpectralDecomposition& dec, double t, std::size_t x_node,
                            std::size_t y_node) {
    if (!(t > 0.0)) throw EvaluationError("heat_kernel: t must be > 0");
    HeatKernelValue out;
    const int m = dec.modes();
    double diag_x = 0.0, diag_y = 0.0; // p~(t/2, x, x) and p~(t/2, y, y)
    for (int n = 0; n < m; ++n) {
        const double e = std::exp(-dec.eigenvalues[n] * t);
        // Grouped so that swapping x and y gives bit-identical sums.
        out.p_tilde += e * (dec.phi_tilde[n][x_node] * dec.phi_tilde[n][y_node]);
        const double eh = std::exp(-dec.eigenvalues[n] * 0.5 * t);
        diag_x += eh * (dec.phi_tilde[n][x_node] * dec.phi_tilde[n][x_node]);
        diag_y += eh * (dec.phi_tilde[n][y_node] * dec.phi_tilde[n][y_node]);
    }
    out.p = out.p_tilde * std::exp(-dec.v_nodes[x_node] - dec.v_nodes[y_node]);
    out.truncation_bound = std::exp(-dec.eigenvalues[m - 1] * 0.5 * t) *
                           std::sqrt(std::max(diag_x, 0.0) * std::max(diag_y, 0.0));
    return out;
}

std::vector<double> semigroup_apply(const SpectralDecomposition& dec, double t,
                                    std::span<const double> phi) {
    if (t < 0.0) throw EvaluationError("semigroup_apply: t must be >= 0");
    for (double v : phi)
        if (!std::isfinite(v)) throw EvaluationError("semigroup_apply: phi has non-finite entries");
    const std::size_t N = dec.quad_weights.size();
    std::vector<double> out(N, 0.0);
    for (int n = 0; n < dec.modes(); ++n) {
        const double a = dec.inner_mu(dec.phi[n], phi);
        const double e = std::exp(-dec.eigenvalues[n] * t);
        const auto& ph = dec.phi[n];
        for (std::size_t k = 0; k < N; ++k) out[k] += e * a * ph[k];
    }
    return out;
}

std::vector<double> project_pi(const SpectralDecomposition& dec, std::span<const double> g) {
    const std::size_t N = dec.quad_weights.size();
    const double a = dec.inner_mu(dec.phi[0], g);
    std::vector<double> out(N);
    for (std::size_t k = 0; k < N; ++k) out[k] = a * dec.phi[0][k];
    return out;
}

EnvelopeFit envelope_fit(const SpectralDecomposition& dec, const ModelSpec& spec,
                         const BoundParams& params) {
    EnvelopeFit fit;
    const std::size_t N = dec.quad_weights.size();
    const int m = dec.modes();
    std::vector<double> x(dec.grid.dimension());

    std::vector<double> ratio(m, 0.0);
    for (std::size_t k = 0; k < N; ++k) {
        dec.grid.node(k, x);
        double r2 = 0.0;
        for (double xi : x) r2 += xi * xi;
        if (std::sqrt(r2) < params.r0) continue;
        const double H = bound_H(spec, params, x);
        if (H < 1e-290) {
            ++fit.excluded_nodes;
            continue;
        }
        for (int n = 0; n < m; ++n)
            ratio[n] = std::max(ratio[n], std::fabs(dec.phi[n][k]) / H);
    }
    fit.ratio_max = ratio;

    // log ratio_n ~ log C0 + (T0/2) lambda_n, least squares over modes.
    std::vector<double> xs, ys;
    for (int n = 0; n < m; ++n) {
        if (ratio[n] <= 0.0) continue;
        xs.push_back(dec.eigenvalues[n]);
        ys.push_back(std::log(ratio[n]));
    }
    if (xs.size() < 2) {
        fit.C0 = ratio.empty() ? 0.0 : *std::max_element(ratio.begin(), ratio.end());
        fit.T0 = 0.0;
        fit.pass = true; // degenerate envelope: a single constant suffices
        fit.residual_factor.assign(m, 1.0);
        return fit;
    }
    double intercept = 0.0;
    const double slope = fit_line(xs, ys, intercept);
    fit.T0 = 2.0 * slope;
    fit.C0 = std::exp(intercept);

    fit.residual_factor.resize(m, 0.0);
    double worst = 0.0;
    for (int n = 0; n < m; ++n) {
        const double bound = fit.C0 * std::exp(0.5 * fit.T0 * dec.eigenvalues[n]);
        fit.residual_factor[n] = ratio[n] / std::max(bound, 1e-300);
        worst = std::max(worst, fit.residual_factor[n]);
    }
    fit.pass = worst <= 10.0;
    return fit;
}

std::pair<double, bool> eigenfunction_envelope_check(const SpectralDecomposition& dec,
                                                     const ModelSpec& spec,
                                                     const BoundParams& params, int n) {
    if (n < 0 || n >= dec.modes())
        throw EvaluationError("envelope check: mode index out of range");
    EnvelopeFit fit = envelope_fit(dec, spec, params);
    return {fit.ratio_max[n], fit.pass};
}

namespace {

void write_header(const SpectralDecomposition& dec, std::ostream& os) {
    char buf[256];
    os << "# bds-spectrum v1\n";
    os << "# dimension: " << dec.grid.dimension() << "\n";
    std::snprintf(buf, sizeof(buf), "# box_radius: %.17g\n", dec.grid.box_radius());
    os << buf;
    os << "# points_per_axis: " << dec.grid.points_per_axis() << "\n";
    os << "# m_modes: " << dec.modes() << "\n";
    std::snprintf(buf, sizeof(buf), "# shift_m: %.17g\n", dec.shift_m);
    os << buf;
    os << "# model: " << dec.model_descriptor << "\n";
    std::snprintf(buf, sizeof(buf), "# model_hash: %016llx\n",
                  static_cast<unsigned long long>(dec.model_hash));
    os << buf;
}

std::map<std::string, std::string> read_header(std::istream& is) {
    std::map<std::string, std::string> kv;
    while (is.peek() == '#') {
        std::string line;
        std::getline(is, line);
        const auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        std::string key = line.substr(2, colon - 2);
        std::string val = line.substr(colon + 1);
        while (!val.empty() && val.front() == ' ') val.erase(val.begin());
        kv[key] = val;
    }
    return kv;
}

} // namespace

void save_eigenvalues_csv(const SpectralDecomposition& dec, std::ostream& os) {
    write_header(dec, os);
    os << "mode,lambda,residual\n";
    char buf[128];
    for (int n = 0; n < dec.modes(); ++n) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", n, dec.eigenvalues[n],
                      dec.residuals[n]);
        os << buf;
    }
}

void save_eigenvectors_csv(const SpectralDecomposition& dec, std::ostream& os) {
    write_header(dec, os);
    os << "node";
    for (int a = 0; a < dec.grid.dimension(); ++a) os << ",x" << a;
    for (int n = 0; n < dec.modes(); ++n) os << ",phi_tilde_" << n;
    os << "\n";
    char buf[64];
    std::vector<double> x(dec.grid.dimension());
    for (std::size_t k = 0; k < dec.grid.size(); ++k) {
        dec.grid.node(k, x);
        os << k;
        for (double xi : x) {
            std::snprintf(buf, sizeof(buf), ",%.17g", xi);
            os << buf;
        }
        for (int n = 0; n < dec.modes(); ++n) {
            std::snprintf(buf, sizeof(buf), ",%.17g", dec.phi_tilde[n][k]);
            os << buf;
        }
        os << "\n";
    }
}

SpectralDecomposition load_decomposition(std::istream& values, std::istream& vectors,
                                         const ModelSpec& spec, double residual_tol) {
    auto hdr = read_header(values);
    const int dim = std::stoi(hdr.at("dimension"));
    const double R = std::stod(hdr.at("box_radius"));
    const int n = std::stoi(hdr.at("points_per_axis"));
    const int m = std::stoi(hdr.at("m_modes"));
    const double shift = std::stod(hdr.at("shift_m"));
    const std::uint64_t want_hash = std::stoull(hdr.at("model_hash"), nullptr, 16);
    if (want_hash != spec.hash())
        throw SolverError("load_decomposition: model hash mismatch (file " + hdr.at("model_hash") +
                          ", supplied model " + spec.descriptor() + ")");

    SpectralDecomposition dec{Grid(dim, R, n), spec.descriptor(), spec.hash(), shift, {}, {}, {},
                              {},              {},                {}};
    dec.quad_weights = dec.grid.weights();
    const std::size_t N = dec.grid.size();
    dec.v_nodes.resize(N);
    std::vector<double> x(dim);
    for (std::size_t k = 0; k < N; ++k) {
        dec.grid.node(k, x);
        dec.v_nodes[k] = spec.V.value(x);
    }

    std::string line;
    std::getline(values, line); // column header
    for (int i = 0; i < m; ++i) {
        if (!std::getline(values, line))
            throw SolverError("load_decomposition: truncated eigenvalue file");
        int mode;
        double lam, res;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf", &mode, &lam, &res) != 3)
            throw SolverError("load_decomposition: bad eigenvalue row: " + line);
        dec.eigenvalues.push_back(lam);
        dec.residuals.push_back(res);
    }

    auto hdr2 = read_header(vectors);
    if (hdr2.at("model_hash") != hdr.at("model_hash"))
        throw SolverError("load_decomposition: eigenvector file belongs to a different model");
    std::getline(vectors, line); // column header
    dec.phi_tilde.assign(m, std::vector<double>(N));
    for (std::size_t k = 0; k < N; ++k) {
        if (!std::getline(vectors, line))
            throw SolverError("load_decomposition: truncated eigenvector file");
        std::istringstream ls(line);
        std::string cell;
        std::getline(ls, cell, ','); // node index
        for (int a = 0; a < dim; ++a) std::getline(ls, cell, ','); // coordinates
        for (int nn = 0; nn < m; ++nn) {
            if (!std::getline(ls, cell, ','))
                throw SolverError("load_decomposition: short eigenvector row");
            dec.phi_tilde[nn][k] = std::stod(cell);
        }
    }

    for (int nn = 0; nn < m; ++nn) {
        std::vector<double> ph(N);
        for (std::size_t k = 0; k < N; ++k)
            ph[k] = std::exp(-dec.v_nodes[k]) * dec.phi_tilde[nn][k];
        dec.phi.push_back(std::move(ph));
    }
    dec.validate(residual_tol);
    return dec;
}

} // namespace bds
