#pragma once

#include "bds/model.hpp"
#include "bds/rng.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace bds {

struct SimConfig {
    double dt = 1e-3;
    double t_max = 1.0;
    long n_paths = 10000; // number of paths / replicas
    std::uint64_t rng_seed = 1;
    long population_cap = 1000000;
    enum class Scheme { euler_maruyama } scheme = Scheme::euler_maruyama;
    int threads = 0;              // 0 = hardware concurrency
    bool record_positions = true; // population snapshots keep particle traits

    void validate() const;
};

/// Snapshot of the alive-particle set at one sample time. `positions` holds
/// the traits flattened d-per-particle (empty when recording is off).
struct PopulationState {
    double t = 0.0;
    long n_alive = 0;
    bool extinct = false;
    bool capped = false;
    std::vector<double> positions;
};

struct ReplicaSeries {
    long replica = 0;
    bool capped = false;
    std::vector<PopulationState> states;
};

/// One Euler-Maruyama step x + grad V(x) dt + sqrt(dt) * noise.
void diffusion_step(const ModelSpec& spec, std::span<const double> x, double dt,
                    std::span<const double> noise, std::span<double> out);
std::vector<double> diffusion_step(const ModelSpec& spec, std::span<const double> x, double dt,
                                   std::span<const double> noise);

/// Simulates cfg.n_paths independent branching replicas started from a
/// single particle at x0. Per step and per particle: death is adjudicated
/// first with probability 1 - e^{-d(x) dt}, then a single birth at the
/// current trait with probability 1 - e^{-b(x) dt}; survivors then diffuse.
/// Children join the dynamics on the next step. Replicas that hit the
/// population cap stop and are flagged capped; extinct replicas stay at zero.
std::vector<ReplicaSeries> simulate_branching(const ModelSpec& spec, std::span<const double> x0,
                                              const SimConfig& cfg,
                                              const std::vector<double>& sample_times);

/// Streaming mean/standard-error of the total mass over replicas; capped
/// replicas are excluded from the estimate and counted.
struct MassStats {
    std::vector<double> times;
    std::vector<double> mean;
    std::vector<double> std_error;
    long n_replicas_used = 0;
    long n_capped = 0;
    long n_extinct_final = 0;
};
MassStats mean_total_mass(const ModelSpec& spec, std::span<const double> x0,
                          const SimConfig& cfg, const std::vector<double>& sample_times);

using PointFunction = std::function<double(std::span<const double>)>;

struct FKEstimate {
    double t = 0.0;
    std::string phi_descriptor;
    std::vector<double> x0;
    double estimate = 0.0;
    double std_error = 0.0;
    long n_paths = 0;
    double weight_min = 0.0;
    double weight_max = 0.0;
};

/// Single-particle Feynman-Kac estimator of E_x[e^{-int_0^t K(X_s) ds}
/// phi(X_t)]: each path carries the left-endpoint Riemann weight
/// exp(-sum_k K(X_{t_k}) dt).
FKEstimate feynman_kac_estimate(const ModelSpec& spec, std::span<const double> x0, double t,
                                const PointFunction& phi, const SimConfig& cfg,
                                const std::string& phi_descriptor = "phi");

/// Draws an initial point into the provided span.
using InitialSampler = std::function<void(PathRng&, std::span<double>)>;

struct QSDSample {
    double t = 0.0;
    std::string nu0_descriptor;
    long n_paths = 0;
    std::vector<double> positions;      // flattened d per path
    std::vector<double> weights;        // self-normalized, sum to 1
    double effective_sample_size = 0.0; // (sum w)^2 / sum w^2
    double normalizing_constant = 0.0;  // estimate of E_nu[e^{-int K}]
    double normalizing_std_error = 0.0;
};

/// Self-normalized weighted cloud at time t started from nu0 (the ratio
/// estimator of the quasi-stationary identity); no resampling.
QSDSample qsd_sample(const ModelSpec& spec, const InitialSampler& nu0,
                     const std::string& nu0_descriptor, double t, const SimConfig& cfg);

/// Weighted mean of phi under the cloud plus its delta-method standard error.
std::pair<double, double> qsd_weighted_mean(const QSDSample& sample, int dimension,
                                            const PointFunction& phi);

struct OutputMeta {
    std::string config_hash; // hex
    std::uint64_t seed = 0;
};

void write_population_csv(const std::vector<ReplicaSeries>& series, const OutputMeta& meta,
                          std::ostream& os);
void write_fk_csv(const std::vector<FKEstimate>& estimates, const OutputMeta& meta,
                  std::ostream& os);
void write_qsd_csv(const QSDSample& sample, int dimension, const OutputMeta& meta,
                   std::ostream& os);

} // namespace bds
