#include "bds/montecarlo.hpp"

#include "bds/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>
#include <thread>

namespace bds {

namespace {

constexpr int kMaxDim = 8;

// Runs body(first, last) over contiguous path ranges. Each path owns its own
// random stream and output slot, so the partition does not affect results.
void parallel_paths(long n, int threads, const std::function<void(long, long)>& body) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    threads = static_cast<int>(std::min<long>(threads, n));
    if (threads <= 1) {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (int t = 0; t < threads; ++t) {
        const long first = n * t / threads;
        const long last = n * (t + 1) / threads;
        pool.emplace_back([&, t, first, last] {
            try {
                body(first, last);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

double rate_at(const ScalarField& field, std::span<const double> x, const char* what) {
    const double r = field.value(x);
    if (!std::isfinite(r) || r < 0.0)
        throw EvaluationError(std::string(what) + " rate invalid (" + std::to_string(r) +
                              ") at x=" + format_point(x));
    return r;
}

struct StepPlan {
    long n_steps = 0;
    double dt_eff = 0.0;
};

StepPlan plan_steps(double horizon, double dt) {
    StepPlan p;
    p.n_steps = std::max<long>(1, std::lround(horizon / dt));
    p.dt_eff = horizon / static_cast<double>(p.n_steps);
    return p;
}

std::vector<long> sample_step_indices(const std::vector<double>& sample_times, long n_steps,
                                      double dt_eff) {
    std::vector<long> idx;
    idx.reserve(sample_times.size());
    long prev = -1;
    for (double ts : sample_times) {
        if (ts < 0.0) throw EvaluationError("sample times must be nonnegative");
        long i = std::lround(ts / dt_eff);
        i = std::clamp<long>(i, 0, n_steps);
        if (i < prev) throw EvaluationError("sample times must be nondecreasing");
        prev = i;
        idx.push_back(i);
    }
    return idx;
}

// One replica of the branching dynamics. The recorder is invoked at each
// requested sample index with (slot, time, alive, positions). Returns true
// if the replica hit the population cap (series truncated there).
template <typename Recorder>
bool run_branching_replica(const ModelSpec& spec, std::span<const double> x0,
                           const SimConfig& cfg, long n_steps, double dt_eff,
                           const std::vector<long>& sample_idx, PathRng& rng, Recorder&& record) {
    const int d = spec.dimension;
    const double sqrt_dt = std::sqrt(dt_eff);
    std::vector<double> cur(x0.begin(), x0.end());
    std::vector<double> children;
    double grad[kMaxDim];

    long alive = 1;
    bool extinct = false;
    std::size_t next = 0;
    auto emit = [&](long step) {
        while (next < sample_idx.size() && sample_idx[next] == step) {
            record(next, static_cast<double>(step) * dt_eff, alive, cur, extinct);
            ++next;
        }
    };
    emit(0);

    for (long step = 1; step <= n_steps && next < sample_idx.size(); ++step) {
        if (!extinct) {
            children.clear();
            std::size_t w = 0;
            for (long i = 0; i < alive; ++i) {
                std::span<const double> x(cur.data() + i * d, d);
                const double d_rate = rate_at(spec.death, x, "death");
                const double u_death = rng.uniform01();
                if (u_death < -std::expm1(-d_rate * dt_eff)) continue; // died, no birth
                const double b_rate = rate_at(spec.birth, x, "birth");
                const double u_birth = rng.uniform01();
                if (u_birth < -std::expm1(-b_rate * dt_eff))
                    children.insert(children.end(), x.begin(), x.end());
                spec.V.gradient(x, {grad, static_cast<std::size_t>(d)});
                for (int a = 0; a < d; ++a) {
                    const double nx = x[a] + grad[a] * dt_eff + sqrt_dt * rng.normal();
                    if (!std::isfinite(nx))
                        throw EvaluationError("diffusion step non-finite at x=" +
                                              format_point(x));
                    cur[w * d + a] = nx;
                }
                ++w;
            }
            cur.resize(w * static_cast<std::size_t>(d));
            cur.insert(cur.end(), children.begin(), children.end());
            alive = static_cast<long>(cur.size()) / d;
            if (alive == 0) extinct = true;
            if (alive > cfg.population_cap) return true; // capped: truncate series
        }
        emit(step);
    }
    return false;
}

} // namespace

void SimConfig::validate() const {
    if (!(dt > 0.0)) throw EvaluationError("sim config: dt must be > 0");
    if (!(t_max >= dt)) throw EvaluationError("sim config: t_max must be >= dt");
    if (n_paths < 1) throw EvaluationError("sim config: n_paths must be >= 1");
    if (population_cap < 1) throw EvaluationError("sim config: population_cap must be >= 1");
}

void diffusion_step(const ModelSpec& spec, std::span<const double> x, double dt,
                    std::span<const double> noise, std::span<double> out) {
    if (!(dt > 0.0)) throw EvaluationError("diffusion_step: dt must be > 0");
    double grad[kMaxDim];
    spec.V.gradient(x, {grad, x.size()});
    const double sqrt_dt = std::sqrt(dt);
    for (std::size_t a = 0; a < x.size(); ++a) {
        if (!std::isfinite(grad[a]))
            throw EvaluationError("drift grad V non-finite at x=" + format_point(x));
        out[a] = x[a] + grad[a] * dt + sqrt_dt * noise[a];
    }
}

std::vector<double> diffusion_step(const ModelSpec& spec, std::span<const double> x, double dt,
                                   std::span<const double> noise) {
    std::vector<double> out(x.size());
    diffusion_step(spec, x, dt, noise, out);
    return out;
}

std::vector<ReplicaSeries> simulate_branching(const ModelSpec& spec, std::span<const double> x0,
                                              const SimConfig& cfg,
                                              const std::vector<double>& sample_times) {
    cfg.validate();
    if (static_cast<int>(x0.size()) != spec.dimension)
        throw EvaluationError("simulate_branching: x0 dimension mismatch");
    const StepPlan plan = plan_steps(cfg.t_max, cfg.dt);
    const auto sample_idx = sample_step_indices(sample_times, plan.n_steps, plan.dt_eff);

    std::vector<ReplicaSeries> out(cfg.n_paths);
    parallel_paths(cfg.n_paths, cfg.threads, [&](long first, long last) {
        for (long rep = first; rep < last; ++rep) {
            PathRng rng(cfg.rng_seed, static_cast<std::uint64_t>(rep));
            ReplicaSeries series;
            series.replica = rep;
            series.states.reserve(sample_idx.size());
            series.capped = run_branching_replica(
                spec, x0, cfg, plan.n_steps, plan.dt_eff, sample_idx, rng,
                [&](std::size_t, double t, long alive, const std::vector<double>& pos,
                    bool extinct) {
                    PopulationState st;
                    st.t = t;
                    st.n_alive = alive;
                    st.extinct = extinct;
                    if (cfg.record_positions) st.positions = pos;
                    series.states.push_back(std::move(st));
                });
            for (auto& st : series.states) st.capped = series.capped;
            out[rep] = std::move(series);
        }
    });
    return out;
}

MassStats mean_total_mass(const ModelSpec& spec, std::span<const double> x0,
                          const SimConfig& cfg, const std::vector<double>& sample_times) {
    cfg.validate();
    const StepPlan plan = plan_steps(cfg.t_max, cfg.dt);
    const auto sample_idx = sample_step_indices(sample_times, plan.n_steps, plan.dt_eff);
    const std::size_t n_samples = sample_idx.size();

    std::vector<double> counts(static_cast<std::size_t>(cfg.n_paths) * n_samples, 0.0);
    std::vector<char> capped(cfg.n_paths, 0);
    std::vector<char> extinct_final(cfg.n_paths, 0);

    parallel_paths(cfg.n_paths, cfg.threads, [&](long first, long last) {
        for (long rep = first; rep < last; ++rep) {
            PathRng rng(cfg.rng_seed, static_cast<std::uint64_t>(rep));
            const bool was_capped = run_branching_replica(
                spec, x0, cfg, plan.n_steps, plan.dt_eff, sample_idx, rng,
                [&](std::size_t slot, double, long alive, const std::vector<double>&,
                    bool extinct) {
                    counts[static_cast<std::size_t>(rep) * n_samples + slot] =
                        static_cast<double>(alive);
                    if (slot + 1 == n_samples) extinct_final[rep] = extinct ? 1 : 0;
                });
            capped[rep] = was_capped ? 1 : 0;
        }
    });

    MassStats stats;
    for (std::size_t j = 0; j < n_samples; ++j)
        stats.times.push_back(static_cast<double>(sample_idx[j]) * plan.dt_eff);
    stats.mean.assign(n_samples, 0.0);
    stats.std_error.assign(n_samples, 0.0);

    long used = 0;
    for (long rep = 0; rep < cfg.n_paths; ++rep) {
        if (capped[rep]) {
            ++stats.n_capped;
            continue;
        }
        ++used;
        if (extinct_final[rep]) ++stats.n_extinct_final;
        for (std::size_t j = 0; j < n_samples; ++j)
            stats.mean[j] += counts[static_cast<std::size_t>(rep) * n_samples + j];
    }
    stats.n_replicas_used = used;
    if (used == 0) throw EvaluationError("mean_total_mass: every replica hit the cap");
    for (std::size_t j = 0; j < n_samples; ++j) stats.mean[j] /= static_cast<double>(used);

    for (std::size_t j = 0; j < n_samples; ++j) {
        double ss = 0.0;
        for (long rep = 0; rep < cfg.n_paths; ++rep) {
            if (capped[rep]) continue;
            const double d = counts[static_cast<std::size_t>(rep) * n_samples + j] -
                             stats.mean[j];
            ss += d * d;
        }
        if (used > 1)
            stats.std_error[j] = std::sqrt(ss / static_cast<double>(used - 1) /
                                           static_cast<double>(used));
    }
    return stats;
}

namespace {

struct FKPathOut {
    double weight = 0.0;
    double value = 0.0; // weight * phi(X_t)
};

// Weighted single-particle path; the initial point is already in x.
FKPathOut run_fk_path(const ModelSpec& spec, double* x, int d, long steps, double dt_eff,
                      const PointFunction& phi, PathRng& rng) {
    const double sqrt_dt = std::sqrt(dt_eff);
    double grad[kMaxDim];
    std::span<const double> xs(x, static_cast<std::size_t>(d));
    double acc = 0.0; // left-endpoint sum of K along the path
    for (long k = 0; k < steps; ++k) {
        const double kv = spec.death.value(xs) - spec.birth.value(xs);
        if (!std::isfinite(kv))
            throw EvaluationError("reduction rate non-finite at x=" + format_point(xs));
        acc += kv * dt_eff;
        if (acc < -700.0)
            throw EvaluationError("Feynman-Kac weight overflow: |int K| reached " +
                                  std::to_string(-acc) + "; K is too negative on this path");
        spec.V.gradient(xs, {grad, static_cast<std::size_t>(d)});
        for (int a = 0; a < d; ++a) x[a] += grad[a] * dt_eff + sqrt_dt * rng.normal();
    }
    FKPathOut out;
    out.weight = std::exp(-acc);
    out.value = out.weight * phi(xs);
    return out;
}

} // namespace

FKEstimate feynman_kac_estimate(const ModelSpec& spec, std::span<const double> x0, double t,
                                const PointFunction& phi, const SimConfig& cfg,
                                const std::string& phi_descriptor) {
    cfg.validate();
    if (t > cfg.t_max + 1e-12)
        throw EvaluationError("feynman_kac_estimate: t exceeds cfg.t_max");
    if (static_cast<int>(x0.size()) != spec.dimension)
        throw EvaluationError("feynman_kac_estimate: x0 dimension mismatch");
    const StepPlan plan = plan_steps(t, cfg.dt);

    std::vector<double> values(cfg.n_paths), weights(cfg.n_paths);
    parallel_paths(cfg.n_paths, cfg.threads, [&](long first, long last) {
        double x[kMaxDim];
        for (long path = first; path < last; ++path) {
            PathRng rng(cfg.rng_seed, static_cast<std::uint64_t>(path));
            std::copy(x0.begin(), x0.end(), x);
            const FKPathOut po =
                run_fk_path(spec, x, spec.dimension, plan.n_steps, plan.dt_eff, phi, rng);
            values[path] = po.value;
            weights[path] = po.weight;
        }
    });

    FKEstimate est;
    est.t = t;
    est.phi_descriptor = phi_descriptor;
    est.x0.assign(x0.begin(), x0.end());
    est.n_paths = cfg.n_paths;
    double sum = 0.0;
    for (double v : values) sum += v;
    est.estimate = sum / static_cast<double>(cfg.n_paths);
    double ss = 0.0;
    for (double v : values) ss += (v - est.estimate) * (v - est.estimate);
    if (cfg.n_paths > 1)
        est.std_error = std::sqrt(ss / static_cast<double>(cfg.n_paths - 1) /
                                  static_cast<double>(cfg.n_paths));
    est.weight_min = *std::min_element(weights.begin(), weights.end());
    est.weight_max = *std::max_element(weights.begin(), weights.end());
    return est;
}

QSDSample qsd_sample(const ModelSpec& spec, const InitialSampler& nu0,
                     const std::string& nu0_descriptor, double t, const SimConfig& cfg) {
    cfg.validate();
    if (t > cfg.t_max + 1e-12) throw EvaluationError("qsd_sample: t exceeds cfg.t_max");
    const int d = spec.dimension;
    const StepPlan plan = plan_steps(t, cfg.dt);

    QSDSample out;
    out.t = t;
    out.nu0_descriptor = nu0_descriptor;
    out.n_paths = cfg.n_paths;
    out.positions.assign(static_cast<std::size_t>(cfg.n_paths) * d, 0.0);
    out.weights.assign(cfg.n_paths, 0.0);

    const PointFunction one = [](std::span<const double>) { return 1.0; };
    parallel_paths(cfg.n_paths, cfg.threads, [&](long first, long last) {
        double x[kMaxDim];
        for (long path = first; path < last; ++path) {
            PathRng rng(cfg.rng_seed, static_cast<std::uint64_t>(path));
            nu0(rng, {x, static_cast<std::size_t>(d)});
            for (int a = 0; a < d; ++a)
                if (!std::isfinite(x[a]))
                    throw EvaluationError("qsd_sample: initial sampler produced non-finite point");
            const FKPathOut po = run_fk_path(spec, x, d, plan.n_steps, plan.dt_eff, one, rng);
            out.weights[path] = po.weight;
            for (int a = 0; a < d; ++a) out.positions[path * d + a] = x[a];
        }
    });

    double wsum = 0.0, wsq = 0.0;
    for (double w : out.weights) {
        wsum += w;
        wsq += w * w;
    }
    if (!(wsum > static_cast<double>(cfg.n_paths) * 1e-290))
        throw EvaluationError("qsd_sample: total path weight underflowed; use a shorter t "
                              "or more paths");
    out.normalizing_constant = wsum / static_cast<double>(cfg.n_paths);
    double ss = 0.0;
    for (double w : out.weights) ss += (w - out.normalizing_constant) * (w - out.normalizing_constant);
    if (cfg.n_paths > 1)
        out.normalizing_std_error = std::sqrt(ss / static_cast<double>(cfg.n_paths - 1) /
                                              static_cast<double>(cfg.n_paths));
    out.effective_sample_size = wsum * wsum / std::max(wsq, 1e-300);
    for (double& w : out.weights) w /= wsum;
    return out;
}

std::pair<double, double> qsd_weighted_mean(const QSDSample& sample, int dimension,
                                            const PointFunction& phi) {
    double est = 0.0;
    const long n = sample.n_paths;
    for (long i = 0; i < n; ++i)
        est += sample.weights[i] *
               phi(std::span<const double>(sample.positions.data() + i * dimension, dimension));
    double var = 0.0;
    for (long i = 0; i < n; ++i) {
        const double fi =
            phi(std::span<const double>(sample.positions.data() + i * dimension, dimension));
        var += sample.weights[i] * sample.weights[i] * (fi - est) * (fi - est);
    }
    return {est, std::sqrt(var)};
}

namespace {

void write_meta(const OutputMeta& meta, std::ostream& os) {
    os << "# artifact: bdlab v0.1.0\n";
    os << "# config_hash: " << meta.config_hash << "\n";
    os << "# seed: " << meta.seed << "\n";
}

} // namespace

void write_population_csv(const std::vector<ReplicaSeries>& series, const OutputMeta& meta,
                          std::ostream& os) {
    write_meta(meta, os);
    os << "replica,t,N_t,capped,extinct\n";
    char buf[128];
    for (const auto& s : series) {
        for (const auto& st : s.states) {
            std::snprintf(buf, sizeof(buf), "%ld,%.17g,%ld,%d,%d\n", s.replica, st.t, st.n_alive,
                          st.capped ? 1 : 0, st.extinct ? 1 : 0);
            os << buf;
        }
    }
}

void write_fk_csv(const std::vector<FKEstimate>& estimates, const OutputMeta& meta,
                  std::ostream& os) {
    write_meta(meta, os);
    const std::size_t d = estimates.empty() ? 1 : estimates.front().x0.size();
    os << "t";
    for (std::size_t a = 0; a < d; ++a) os << ",x0_" << a;
    os << ",estimate,std_error,n_paths\n";
    char buf[64];
    for (const auto& e : estimates) {
        std::snprintf(buf, sizeof(buf), "%.17g", e.t);
        os << buf;
        for (double xi : e.x0) {
            std::snprintf(buf, sizeof(buf), ",%.17g", xi);
            os << buf;
        }
        std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%ld\n", e.estimate, e.std_error, e.n_paths);
        os << buf;
    }
}

void write_qsd_csv(const QSDSample& sample, int dimension, const OutputMeta& meta,
                   std::ostream& os) {
    write_meta(meta, os);
    for (int a = 0; a < dimension; ++a) os << "x" << a << ",";
    os << "weight\n";
    char buf[64];
    for (long i = 0; i < sample.n_paths; ++i) {
        for (int a = 0; a < dimension; ++a) {
            std::snprintf(buf, sizeof(buf), "%.17g,", sample.positions[i * dimension + a]);
            os << buf;
        }
        std::snprintf(buf, sizeof(buf), "%.17g\n", sample.weights[i]);
        os << buf;
    }
}

} // namespace bds
