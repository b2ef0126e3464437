#pragma once

#include <utility>
#include <vector>

#include "schedlab/estimation.hpp"
#include "schedlab/mdp.hpp"
#include "schedlab/simulate.hpp"

namespace schedlab::testing {

inline Eigen::MatrixXd scalar(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

inline ProcessModel scalar_model(double a, double c, double q, double r, double lambda,
                                 double comm_cost, int id = 0) {
    return make_process_model(id, scalar(a), scalar(c), scalar(q), scalar(r), lambda,
                              comm_cost);
}

/// The two-process demo instance (unstable pair, lambda 0.8 / 0.9).
inline std::vector<ProcessModel> two_sensor_models(double cost1 = 20.0,
                                                   double cost2 = 10.0) {
    Eigen::MatrixXd a1(2, 2), c1(2, 2), a2(2, 2), c2(2, 2);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
    a1 << 1.1, 1, 0, 1;
    c1 << 2, 0, 0, 1;
    a2 << 1, 1, 0, 1.2;
    c2 << 1, 0, 0, 1;
    return {make_process_model(1, a1, c1, eye, eye, 0.8, cost1),
            make_process_model(2, a2, c2, eye, eye, 0.9, cost2)};
}

/// The three-process demo instance (m = 2 territory, scalar observations).
inline std::vector<ProcessModel> three_sensor_models() {
    Eigen::MatrixXd a1(2, 2), a2(2, 2), a3(2, 2), c12(1, 2), q1(2, 2), q2(2, 2);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
    a1 << 1.1, 1, 0, 1;
    a2 << 1.2, 1, 0, 1;
    a3 << 1.1, 1, 0, 1.3;
    c12 << 1, 0;
    q1 << 1, 0, 0, 4;
    q2 << 1, 0, 0, 2;
    return {make_process_model(1, a1, c12, q1, scalar(1.0), 0.9, 50.0),
            make_process_model(2, a2, c12, q2, scalar(1.0), 0.9, 30.0),
            make_process_model(3, a3, Eigen::MatrixXd::Identity(2, 2), eye, eye, 0.9, 40.0)};
}

inline std::vector<SteadyState> steady_states(const std::vector<ProcessModel>& models) {
    std::vector<SteadyState> sensors;
    for (const auto& model : models) sensors.push_back(steady_state_covariance(model));
    return sensors;
}

/// Single-sensor threshold policy (transmit iff tau >= theta) packaged as a
/// lookup table; the clamp at the cap keeps it exact for all tau.
inline PolicyTable threshold_policy_table(int theta) {
    PolicyTable table;
    table.n = 1;
    table.tau_cap = theta + 2;
    table.m = 1;
    table.actions = {0u, 1u};
    table.policy.resize(table.tau_cap);
    for (int t = 0; t < table.tau_cap; ++t) table.policy[t] = t >= theta ? 1 : 0;
    table.values.assign(table.tau_cap, 0.0);
    return table;
}

/// Random feasible scalar sensors drawn from the benchmark distributions.
/// `finite_variance` additionally enforces rho^4(A)(1-lambda) < 0.9 so
/// time-averaged costs obey a CLT at Monte Carlo tolerances.
inline std::vector<SteadyState> random_scalar_sensors(int count, std::uint64_t seed,
                                                      bool finite_variance = false) {
    GeneratorConfig config;
    std::vector<SteadyState> sensors;
    int index = 0;
    while (static_cast<int>(sensors.size()) < count) {
        ProcessModel model = sample_scalar_model(config, seed, index++);
        const double a = spectral_radius(model.A);
        if (finite_variance && a * a * a * a * (1.0 - model.lambda) >= 0.9) continue;
        model.id = static_cast<int>(sensors.size());
        sensors.push_back(steady_state_covariance(model));
    }
    return sensors;
}

}  // namespace schedlab::testing
