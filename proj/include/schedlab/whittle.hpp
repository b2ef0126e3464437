#pragma once

#include <span>
#include <vector>

#include "schedlab/estimation.hpp"

namespace schedlab {

/// Stationary law of the holding time under a threshold policy
/// (transmit iff tau >= theta): uniform up to theta, geometric beyond.
/// probs covers tau = 0..tau_limit; tail_mass is the closed-form remainder.
struct StationaryDistribution {
    std::vector<double> probs;
    double tail_mass = 0.0;
};

StationaryDistribution stationary_distribution(double lambda, int theta, int tau_limit);

/// Time-averaged transmission rate under threshold theta: 1 / (lambda theta + 1).
double threshold_comm_rate(double lambda, int theta);

/// Time-averaged estimation error under threshold theta, in closed form via
/// the discounted Lyapunov solutions S_Pbar and S_Q.
/// Requires rho^2(A)(1 - lambda) < 1.
double threshold_est_error(const SteadyState& ss, int theta);

/// Everything the threshold policy analysis yields for one sensor.
struct ThresholdAnalytics {
    int theta = 0;
    double comm_rate = 0.0;
    double est_error = 0.0;
    StationaryDistribution stationary;
};

ThresholdAnalytics threshold_analytics(const SteadyState& ss, int theta, int tau_limit);

/// Closed-form Whittle index
///   w(tau) = lambda (lambda tau + 1) / (1 - lambda)
///            * [ (tau+1) J_e(tau) - sum_{t<=tau} c_e(t) ] - c_c.
/// Throws PerfectChannel at lambda == 1 and SpectralConditionViolated when
/// the channel cannot keep the process's error bounded.
double whittle_index(const SteadyState& ss, int tau);

/// Independent check of whittle_index: bisects the transmission penalty w
/// until the optimal threshold of the decoupled problem
///   g(theta; w) = J_e(theta) + (c_c + w) / (lambda theta + 1)
/// transitions from <= tau to >= tau+1. Thresholds are scanned over
/// 0..4*tau_cap; the bracket is [-c_c - 1e6, 1e9], bisected to width 1e-8.
double whittle_index_oracle(const SteadyState& ss, int tau, int tau_cap);

/// Limit-equivalent ranking score for perfect channels, where the index
/// formula is singular: lambda (lambda tau + 1) [ (tau+1) J_e(tau) -
/// sum_{t<=tau} c_e(t) ]. Only the ordering is meaningful.
double whittle_fallback_score(const SteadyState& ss, int tau);

/// Per-sensor index table over tau = 0..tau_cap-1.
struct IndexTable {
    int sensor_id = 0;
    std::vector<double> values;
};

/// Tables for all sensors. Per-sensor failures are aggregated into a single
/// Error naming the offending sensor ids. A decreasing step inside a table
/// is reported as a diagnostic on stderr, not an error.
std::vector<IndexTable> build_index_tables(std::span<const SteadyState> sensors,
                                           int tau_cap);

/// Grows a table to cover tau = 0..new_size-1 with closed-form values,
/// advancing the Lyapunov solutions by one step per entry instead of
/// re-summing the series, so long extensions stay O(new_size).
void extend_index_table(const SteadyState& ss, IndexTable& table, int new_size);

/// Lagrangian lower bound on the optimal average cost: maximizes over a
/// common multiplier w >= 0 the sum of decoupled threshold optima minus w*m,
/// by golden-section search on [0, max_i w_i(tau_cap)]. For stable sensors
/// the never-transmit policy is included as a threshold candidate.
double relaxed_lower_bound(std::span<const SteadyState> sensors, int m, int tau_cap);

}  // namespace schedlab
