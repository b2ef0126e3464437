#include "schedlab/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include "schedlab/rng.hpp"

namespace schedlab {

namespace {

int worker_count() {
    int workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    if (const char* env = std::getenv("SCHEDLAB_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) workers = std::min(workers, cap);
    }
    return workers;
}

std::atomic<bool> warned_perfect_channel{false};

double whittle_score(const PolicyKind& policy, const SteadyState& ss, int sensor_pos,
                     int tau) {
    if (ss.model().lambda >= 1.0) {
        if (!warned_perfect_channel.exchange(true))
            std::fprintf(stderr,
                         "schedlab: lambda == 1 sensor present; ranking by the "
                         "limit-equivalent index score\n");
        return whittle_fallback_score(ss, tau);
    }
    const auto& tables = *policy.index_tables;
    if (sensor_pos < static_cast<int>(tables.size()) &&
        tau < static_cast<int>(tables[sensor_pos].values.size()))
        return tables[sensor_pos].values[tau];
    return whittle_index(ss, tau);  // beyond the table: closed form on demand
}

struct RepStats {
    double err = 0.0;
    double comm = 0.0;
    double active = 0.0;
};

}  // namespace

const char* policy_name(PolicyVariant variant) {
    switch (variant) {
        case PolicyVariant::Optimal: return "optimal";
        case PolicyVariant::WhittleOriginal: return "whittle";
        case PolicyVariant::WhittleRevised: return "whittle-revised";
        case PolicyVariant::MaxErrorFirst: return "max-error";
        case PolicyVariant::MaxDelayFirst: return "max-delay";
        case PolicyVariant::RoundRobin: return "round-robin";
    }
    return "unknown";
}

std::uint64_t decide(const PolicyKind& policy, std::span<const int> tau,
                     std::span<const SteadyState> sensors, int m, long step) {
    const int n = static_cast<int>(sensors.size());
    if (static_cast<int>(tau.size()) != n)
        throw DimensionMismatch("decide: state dimension != sensor count");
    if (m <= 0) return 0;

    if (policy.variant == PolicyVariant::RoundRobin) {
        std::uint64_t bits = 0;
        for (int j = 0; j < m; ++j)
            bits |= 1ull << ((step * m + j) % n);
        return bits;
    }

    if (policy.variant == PolicyVariant::Optimal) {
        if (policy.table == nullptr)
            throw MissingTable("decide: optimal policy without a policy table");
        const PolicyTable& table = *policy.table;
        std::vector<int> clamped(n);
        for (int i = 0; i < n; ++i)
            clamped[i] = std::min(tau[i], table.tau_cap - 1);
        return table.action_bits(table.index_of(clamped));
    }

    if ((policy.variant == PolicyVariant::WhittleOriginal ||
         policy.variant == PolicyVariant::WhittleRevised) &&
        policy.index_tables == nullptr)
        throw MissingTable("decide: Whittle policy without index tables");

    std::vector<std::pair<double, int>> scored(n);
    for (int i = 0; i < n; ++i) {
        double score = 0.0;
        switch (policy.variant) {
            case PolicyVariant::MaxErrorFirst:
                score = sensors[i].error_cost(tau[i]);
                break;
            case PolicyVariant::MaxDelayFirst:
                score = tau[i];
                break;
            default:
                score = whittle_score(policy, sensors[i], i, tau[i]);
                break;
        }
        scored[i] = {score, i};
    }
    // Highest score first; ties go to the lower sensor id.
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });

    const int take = std::min(m, n);
    std::uint64_t bits = 0;
    for (int k = 0; k < take; ++k) {
        if (policy.variant == PolicyVariant::WhittleRevised && !(scored[k].first > 0.0))
            continue;
        bits |= 1ull << scored[k].second;
    }
    return bits;
}

SimReport simulate_tau_chain(std::span<const SteadyState> sensors,
                             const PolicyKind& policy, int m, long horizon,
                             int replications, std::uint64_t seed, int tau_cap) {
    const int n = static_cast<int>(sensors.size());
    if (horizon < 1) throw Error("simulate_tau_chain: horizon must be >= 1");
    if (replications < 1) throw Error("simulate_tau_chain: replications must be >= 1");

    const bool whittle_variant = policy.variant == PolicyVariant::WhittleOriginal ||
                                 policy.variant == PolicyVariant::WhittleRevised;
    if (whittle_variant && policy.index_tables == nullptr)
        throw MissingTable("simulate_tau_chain: Whittle policy without index tables");

    std::vector<RepStats> stats(replications);
    const auto run_range = [&](int rep_begin, int rep_end) {
        // Worker-local copies keep the cost memos uncontended, and let the
        // index tables grow past the precomputed range as holding times do
        // (doubling amortizes the closed-form extension work).
        std::vector<SteadyState> local(sensors.begin(), sensors.end());
        PolicyKind local_policy = policy;
        std::vector<IndexTable> local_tables;
        if (whittle_variant) {
            local_tables = *policy.index_tables;
            local_policy.index_tables = &local_tables;
        }
        std::vector<int> tau(n);
        for (int rep = rep_begin; rep < rep_end; ++rep) {
            std::fill(tau.begin(), tau.end(), 0);
            double err = 0.0, comm = 0.0;
            long active = 0;
            for (long k = 0; k < horizon; ++k) {
                if (whittle_variant) {
                    const int covered =
                        std::min(n, static_cast<int>(local_tables.size()));
                    for (int i = 0; i < covered; ++i) {
                        if (local[i].model().lambda >= 1.0) continue;
                        auto& table = local_tables[i];
                        if (tau[i] >= static_cast<int>(table.values.size()))
                            extend_index_table(
                                local[i], table,
                                std::max(tau[i] + 1,
                                         2 * static_cast<int>(table.values.size())));
                    }
                }
                const std::uint64_t act = decide(local_policy, tau, local, m, k);
                for (int i = 0; i < n; ++i) err += local[i].error_cost(tau[i]);
                active += std::popcount(act);
                for (int i = 0; i < n; ++i) {
                    const bool scheduled = act & (1ull << i);
                    if (scheduled) comm += local[i].model().comm_cost;
                    const bool reset =
                        scheduled &&
                        rng::bernoulli(local[i].model().lambda,
                                       {seed, rng::kChannel, static_cast<std::uint64_t>(rep),
                                        static_cast<std::uint64_t>(k),
                                        static_cast<std::uint64_t>(i)});
                    if (reset)
                        tau[i] = 0;
                    else
                        tau[i] = tau_cap > 0 ? std::min(tau[i] + 1, tau_cap - 1) : tau[i] + 1;
                }
            }
            stats[rep].err = err / horizon;
            stats[rep].comm = comm / horizon;
            stats[rep].active = m > 0 ? static_cast<double>(active) / (horizon * m) : 0.0;
        }
    };

    const int workers = std::min(worker_count(), replications);
    if (workers <= 1) {
        run_range(0, replications);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            const int begin = static_cast<int>(static_cast<long>(replications) * w / workers);
            const int end =
                static_cast<int>(static_cast<long>(replications) * (w + 1) / workers);
            pool.emplace_back(run_range, begin, end);
        }
        for (auto& t : pool) t.join();
    }

    SimReport report;
    report.policy = policy_name(policy.variant);
    report.horizon = horizon;
    report.replications = replications;
    report.seed = seed;
    double mean_total = 0.0;
    for (const auto& s : stats) {
        report.avg_error += s.err;
        report.avg_comm_cost += s.comm;
        report.active_ratio += s.active;
        mean_total += s.err + s.comm;
    }
    report.avg_error /= replications;
    report.avg_comm_cost /= replications;
    report.active_ratio /= replications;
    mean_total /= replications;
    report.avg_total = report.avg_error + report.avg_comm_cost;
    if (replications > 1) {
        double ss = 0.0;
        for (const auto& s : stats) {
            const double d = s.err + s.comm - mean_total;
            ss += d * d;
        }
        report.std_total = std::sqrt(ss / (replications - 1));
    }
    return report;
}

SimReport simulate_full_system(std::span<const SteadyState> sensors,
                               const PolicyKind& policy, int m, long horizon,
                               std::uint64_t seed) {
    const int n = static_cast<int>(sensors.size());
    if (horizon < 1) throw Error("simulate_full_system: horizon must be >= 1");

    // The estimation errors are simulated in error coordinates: for unstable
    // processes the raw state overflows doubles long before a 1e6-step
    // horizon, while x - xhat is stationary. The change of variables is
    // exact; the measurement enters through its noise only:
    //   local:  e+ = (I - K C)(A e + w) - K v
    //   remote: e+ = local e+ on reception, A e + w otherwise.
    struct SensorSim {
        Eigen::MatrixXd gain;     // steady-state Kalman gain
        Eigen::MatrixXd sqrt_q;
        Eigen::MatrixXd sqrt_r;
        Eigen::VectorXd local;    // x - local estimate
        Eigen::VectorXd remote;   // x - remote estimate
    };
    std::vector<SensorSim> sims(n);
    std::vector<SteadyState> local_sensors(sensors.begin(), sensors.end());
    const auto normal_vec = [&](std::uint64_t stream, std::uint64_t a, std::uint64_t b,
                                long dim) {
        Eigen::VectorXd z(dim);
        for (long c = 0; c < dim; ++c)
            z(c) = rng::gaussian({seed, stream, a, b, static_cast<std::uint64_t>(c)});
        return z;
    };
    for (int i = 0; i < n; ++i) {
        const auto& model = sensors[i].model();
        const long dim = model.state_dim();
        const Eigen::MatrixXd prior = lyapunov_apply(model, sensors[i].p_bar(), 1);
        const Eigen::MatrixXd innov =
            model.C * prior * model.C.transpose() + model.R;
        sims[i].gain =
            (innov.ldlt().solve(model.C * prior)).transpose();
        sims[i].sqrt_q = symmetric_sqrt(model.Q);
        sims[i].sqrt_r = symmetric_sqrt(model.R);
        // Start in steady state: the local error is already Pbar-distributed
        // and the remote side holds a fresh copy (tau = 0).
        sims[i].local =
            symmetric_sqrt(sensors[i].p_bar()) *
            normal_vec(rng::kInitialError, static_cast<std::uint64_t>(i), 0, dim);
        sims[i].remote = sims[i].local;
    }

    std::vector<int> tau(n, 0);
    double err = 0.0, comm = 0.0;
    long active = 0;
    for (long k = 0; k < horizon; ++k) {
        const std::uint64_t act = decide(policy, tau, local_sensors, m, k);
        active += std::popcount(act);
        for (int i = 0; i < n; ++i) {
            err += sims[i].remote.squaredNorm();
            if (act & (1ull << i)) comm += sensors[i].model().comm_cost;
        }
        for (int i = 0; i < n; ++i) {
            const auto& model = sensors[i].model();
            const auto ku = static_cast<std::uint64_t>(k);
            const auto iu = static_cast<std::uint64_t>(i);
            const Eigen::VectorXd w =
                sims[i].sqrt_q * normal_vec(rng::kProcessNoise, ku, iu,
                                            model.state_dim());
            const Eigen::VectorXd v =
                sims[i].sqrt_r * normal_vec(rng::kMeasurementNoise, ku, iu,
                                            model.obs_dim());
            const Eigen::VectorXd predicted = model.A * sims[i].local + w;
            sims[i].local = predicted - sims[i].gain * (model.C * predicted + v);
            const bool received =
                (act & (1ull << i)) &&
                rng::bernoulli(model.lambda, {seed, rng::kChannel, 0, ku, iu});
            if (received) {
                sims[i].remote = sims[i].local;
                tau[i] = 0;
            } else {
                sims[i].remote = model.A * sims[i].remote + w;
                ++tau[i];
            }
        }
    }

    SimReport report;
    report.policy = policy_name(policy.variant);
    report.horizon = horizon;
    report.replications = 1;
    report.seed = seed;
    report.avg_error = err / horizon;
    report.avg_comm_cost = comm / horizon;
    report.avg_total = report.avg_error + report.avg_comm_cost;
    report.active_ratio = m > 0 ? static_cast<double>(active) / (horizon * m) : 0.0;
    report.std_total = 0.0;
    return report;
}

ProcessModel sample_scalar_model(const GeneratorConfig& config, std::uint64_t seed,
                                 int index, int* resamples) {
    const auto u = [&](int attempt, int field, double lo, double hi) {
        return lo + rng::uniform({seed, rng::kGenerator, static_cast<std::uint64_t>(index),
                                  static_cast<std::uint64_t>(attempt),
                                  static_cast<std::uint64_t>(field)}) *
                        (hi - lo);
    };
    for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
        const double a =
            config.a_mean +
            config.a_std * rng::gaussian({seed, rng::kGenerator,
                                          static_cast<std::uint64_t>(index),
                                          static_cast<std::uint64_t>(attempt), 0});
        const double c = u(attempt, 1, config.c_min, config.c_max);
        const double q = u(attempt, 2, config.q_min, config.q_max);
        const double r = u(attempt, 3, config.r_min, config.r_max);
        const double cost = u(attempt, 4, config.cost_min, config.cost_max);
        const double lambda = u(attempt, 5, config.lambda_min, config.lambda_max);

        const auto reject = [&] {
            if (resamples) ++*resamples;
        };
        if (r < config.r_floor) {
            reject();
            continue;
        }
        if (a * a * (1.0 - lambda) >= 1.0) {
            reject();
            continue;
        }
        const auto scalar = [](double v) {
            return Eigen::MatrixXd::Constant(1, 1, v);
        };
        try {
            return make_process_model(index, scalar(a), scalar(c), scalar(q),
                                      scalar(r), lambda, cost);
        } catch (const Error&) {
            reject();
        }
    }
    throw GenerationExhausted("sample_scalar_model: no feasible draw for index " +
                              std::to_string(index));
}

std::vector<BenchScenario> default_bench_scenarios() {
    return {{20, 8}, {25, 10}, {30, 12}, {35, 14}, {40, 16}};
}

std::vector<BenchResult> benchmark_random(const GeneratorConfig& config,
                                          std::span<const BenchScenario> scenarios,
                                          long horizon, int replications,
                                          std::uint64_t seed, int tau_cap) {
    int max_n = 0;
    for (const auto& scenario : scenarios) max_n = std::max(max_n, scenario.n);

    std::vector<SteadyState> sensors;
    sensors.reserve(max_n);
    for (int i = 0; i < max_n; ++i)
        sensors.push_back(steady_state_covariance(sample_scalar_model(config, seed, i)));
    const std::vector<IndexTable> all_tables = build_index_tables(sensors, tau_cap);

    std::vector<BenchResult> results;
    for (const auto& scenario : scenarios) {
        BenchResult result;
        result.n = scenario.n;
        result.m = scenario.m;
        const std::span<const SteadyState> active(sensors.data(), scenario.n);
        const std::vector<IndexTable> tables(all_tables.begin(),
                                             all_tables.begin() + scenario.n);
        result.lower_bound = relaxed_lower_bound(active, scenario.m, tau_cap);
        const PolicyKind policies[] = {
            whittle_policy(tables, false),
            whittle_policy(tables, true),
            heuristic_policy(PolicyVariant::MaxErrorFirst),
            heuristic_policy(PolicyVariant::MaxDelayFirst),
            heuristic_policy(PolicyVariant::RoundRobin),
        };
        for (const auto& policy : policies)
            result.reports.push_back(simulate_tau_chain(active, policy, scenario.m,
                                                        horizon, replications, seed));
        results.push_back(std::move(result));
    }
    return results;
}

}  // namespace schedlab
