#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "schedlab/estimation.hpp"

namespace schedlab {

struct TransitionBranch {
    int next_tau;
    double prob;
};

/// Per-sensor holding-time transition law on the truncated range
/// [0, tau_cap): a scheduled sensor resets to 0 with probability lambda and
/// grows otherwise; an idle sensor grows with probability one. Growth clamps
/// at tau_cap - 1 (self-loop at the cap).
std::vector<TransitionBranch> transition_dist(int tau, int action, double lambda,
                                              int tau_cap);

/// Truncated joint scheduling MDP: per-sensor holding times in [0, tau_cap)
/// and all action vectors with at most m transmissions. Actions are
/// enumerated by popcount, then lexicographically on the bit vector
/// (sensor 0 first), so tables are byte-stable across runs.
struct MdpProblem {
    std::vector<SteadyState> sensors;
    int m = 0;
    int tau_cap = 0;
    std::vector<std::uint32_t> actions;

    int n() const { return static_cast<int>(sensors.size()); }
    long state_count() const;
};

MdpProblem build_mdp(std::vector<SteadyState> sensors, int m, int tau_cap);

/// Deterministic stationary policy with its relative value function.
/// Joint states are flat-indexed row-major with sensor 0 most significant.
struct PolicyTable {
    int n = 0;
    int tau_cap = 0;
    int m = 0;
    std::vector<std::uint32_t> actions;
    std::vector<int> policy;     // flat state -> index into actions
    std::vector<double> values;  // relative values, values[0] == 0
    double avg_cost = 0.0;
    long iterations = 0;
    bool converged = false;

    long state_count() const { return static_cast<long>(policy.size()); }
    long index_of(std::span<const int> tau) const;
    void state_of(long index, std::span<int> tau) const;
    std::uint32_t action_bits(long state_index) const { return actions[policy[state_index]]; }
};

/// Sum over sensors of holding cost plus transmission cost.
double stage_cost(const MdpProblem& problem, std::span<const int> tau,
                  std::uint32_t action_bits);

/// Relative value iteration with reference state all-zeros and span-seminorm
/// stopping rule. Ties in the policy improvement step break toward the
/// earliest action in enumeration order (fewest transmissions first).
/// On hitting max_iter the table is returned with converged = false.
PolicyTable relative_value_iteration(const MdpProblem& problem, double tol = 1e-8,
                                     long max_iter = 100000);

/// Same fixed point as relative_value_iteration, but each sweep first
/// restricts the minimization at state s to actions that keep every sensor
/// bit already committed this sweep at some s' <= s (monotone structure),
/// falling back to the full minimization when no action qualifies.
PolicyTable monotone_rvi(const MdpProblem& problem, double tol = 1e-8,
                         long max_iter = 100000);

struct MonotoneViolation {
    long state;
    int sensor;
};

/// Empty iff whenever the policy transmits for sensor i at state s, it also
/// transmits for i at the state with tau_i one larger (below the cap).
std::vector<MonotoneViolation> verify_monotone(const PolicyTable& table);

}  // namespace schedlab
