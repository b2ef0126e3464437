#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "schedlab/mdp.hpp"
#include "schedlab/whittle.hpp"

namespace schedlab {

enum class PolicyVariant {
    Optimal,          // PolicyTable lookup, clamped at the table cap
    WhittleOriginal,  // top-m by index
    WhittleRevised,   // top-m by index, keep only strictly positive indices
    MaxErrorFirst,    // top-m by expected error c_e(tau)
    MaxDelayFirst,    // top-m by holding time
    RoundRobin,       // m consecutive sensors per step
};

const char* policy_name(PolicyVariant variant);

/// A scheduling policy plus the payload its variant needs. The payloads are
/// borrowed, not owned; keep them alive for the duration of a simulation.
struct PolicyKind {
    PolicyVariant variant = PolicyVariant::MaxErrorFirst;
    const PolicyTable* table = nullptr;
    const std::vector<IndexTable>* index_tables = nullptr;
};

inline PolicyKind optimal_policy(const PolicyTable& table) {
    return {PolicyVariant::Optimal, &table, nullptr};
}
inline PolicyKind whittle_policy(const std::vector<IndexTable>& tables, bool revised) {
    return {revised ? PolicyVariant::WhittleRevised : PolicyVariant::WhittleOriginal,
            nullptr, &tables};
}
inline PolicyKind heuristic_policy(PolicyVariant variant) { return {variant, nullptr, nullptr}; }

/// Action bits for the given joint holding times; never schedules more than
/// m sensors. Score ties break toward the lower sensor id. `step` drives the
/// round-robin rotation. Index values beyond a table are computed on demand
/// from the closed form (or the perfect-channel fallback score).
std::uint64_t decide(const PolicyKind& policy, std::span<const int> tau,
                     std::span<const SteadyState> sensors, int m, long step);

/// Monte Carlo output for one policy.
struct SimReport {
    std::string policy;
    long horizon = 0;
    int replications = 0;
    std::uint64_t seed = 0;
    double avg_error = 0.0;
    double avg_comm_cost = 0.0;
    double avg_total = 0.0;
    double active_ratio = 0.0;  // mean transmissions per step / m
    double std_total = 0.0;     // sample std of per-replication totals
};

/// Simulates the holding-time chain directly: costs depend on tau only, so
/// the linear system never needs to be sampled. Channel draws are keyed by
/// (seed, replication, step, sensor); replications run in parallel (capped
/// by SCHEDLAB_THREADS) with results identical to a serial run.
/// tau_cap > 0 clamps holding times like the truncated MDP; 0 leaves the
/// chain unbounded.
SimReport simulate_tau_chain(std::span<const SteadyState> sensors,
                             const PolicyKind& policy, int m, long horizon,
                             int replications, std::uint64_t seed, int tau_cap = 0);

/// End-to-end validation run: samples the linear systems, runs each sensor's
/// steady-state Kalman filter and the hold-and-predict remote estimator, and
/// reports the empirical squared estimation error. Channel draws use the
/// same keys as simulate_tau_chain replication 0, so both simulators see the
/// same schedule realization under the same seed.
SimReport simulate_full_system(std::span<const SteadyState> sensors,
                               const PolicyKind& policy, int m, long horizon,
                               std::uint64_t seed);

/// Sampling ranges for random first-order benchmark instances.
struct GeneratorConfig {
    double a_mean = 0.0, a_std = 1.0;     // system gain, normal
    double c_min = 1.0, c_max = 10.0;     // observation gain, uniform
    double q_min = 0.0, q_max = 100.0;    // process noise variance, uniform
    double r_min = 0.0, r_max = 100.0;    // measurement noise variance, uniform
    double cost_min = 5.0, cost_max = 15.0;
    double lambda_min = 0.7, lambda_max = 0.99;
    double r_floor = 1e-6;                // resample below this (R must be PD)
    int max_attempts = 10000;
};

/// One random scalar model satisfying all model invariants and the spectral
/// condition rho^2(1-lambda) < 1. Draws are keyed by (seed, index, attempt),
/// so a fixed seed reproduces the same instance set. `resamples`, when
/// given, accumulates the number of rejected draws.
ProcessModel sample_scalar_model(const GeneratorConfig& config, std::uint64_t seed,
                                 int index, int* resamples = nullptr);

struct BenchScenario {
    int n = 0;
    int m = 0;
};

/// The benchmark's scenario list: n = 20..40 with m/n fixed at 0.4.
std::vector<BenchScenario> default_bench_scenarios();

struct BenchResult {
    int n = 0;
    int m = 0;
    double lower_bound = 0.0;
    std::vector<SimReport> reports;
};

/// Random-instance benchmark: samples one pool of scalar models, then for
/// each scenario runs the two Whittle policies, the two greedy baselines and
/// round-robin on the first n models, alongside the Lagrangian lower bound.
std::vector<BenchResult> benchmark_random(const GeneratorConfig& config,
                                          std::span<const BenchScenario> scenarios,
                                          long horizon, int replications,
                                          std::uint64_t seed, int tau_cap = 30);

}  // namespace schedlab
