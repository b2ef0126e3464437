#include "schedlab/mdp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "schedlab/feasibility.hpp"

namespace schedlab {

namespace {

constexpr long kMaxStates = 20000000;

// Lexicographic key on the action bit vector with sensor 0 most significant.
std::uint64_t lex_key(std::uint32_t bits, int n) {
    std::uint64_t key = 0;
    for (int i = 0; i < n; ++i)
        if (bits & (1u << i)) key |= 1ull << (n - 1 - i);
    return key;
}

std::vector<long> make_strides(int n, int tau_cap) {
    std::vector<long> strides(n);
    long s = 1;
    for (int i = n - 1; i >= 0; --i) {
        strides[i] = s;
        s *= tau_cap;
    }
    return strides;
}

}  // namespace

std::vector<TransitionBranch> transition_dist(int tau, int action, double lambda,
                                              int tau_cap) {
    if (tau < 0 || tau >= tau_cap) throw Error("transition_dist: tau outside [0, tau_cap)");
    const int grown = std::min(tau + 1, tau_cap - 1);
    if (action == 0) return {{grown, 1.0}};
    return {{0, lambda}, {grown, 1.0 - lambda}};
}

long MdpProblem::state_count() const {
    long count = 1;
    for (int i = 0; i < n(); ++i) {
        count *= tau_cap;
        if (count > kMaxStates)
            throw Error("MdpProblem: state space exceeds " + std::to_string(kMaxStates));
    }
    return count;
}

MdpProblem build_mdp(std::vector<SteadyState> sensors, int m, int tau_cap) {
    const int n = static_cast<int>(sensors.size());
    if (n == 0 || n > 31) throw Error("build_mdp: need 1..31 sensors");
    if (tau_cap < 2) throw Error("build_mdp: tau_cap must be >= 2");
    if (m < 0) throw Error("build_mdp: m must be >= 0");

    MdpProblem problem{std::move(sensors), m, tau_cap, {}};
    for (std::uint32_t bits = 0; bits < (1u << n); ++bits)
        if (std::popcount(bits) <= m) problem.actions.push_back(bits);
    std::sort(problem.actions.begin(), problem.actions.end(),
              [n](std::uint32_t a, std::uint32_t b) {
                  const int pa = std::popcount(a), pb = std::popcount(b);
                  if (pa != pb) return pa < pb;
                  return lex_key(a, n) < lex_key(b, n);
              });
    problem.state_count();  // size guard

    std::vector<ProcessModel> models;
    models.reserve(problem.sensors.size());
    for (const auto& ss : problem.sensors) models.push_back(ss.model());
    if (!existence_check(models, m))
        std::fprintf(stderr,
                     "schedlab: warning: no deterministic stationary optimal policy is "
                     "guaranteed for m=%d channels; solving the truncated chain anyway\n",
                     m);
    return problem;
}

long PolicyTable::index_of(std::span<const int> tau) const {
    const auto strides = make_strides(n, tau_cap);
    long index = 0;
    for (int i = 0; i < n; ++i) {
        if (tau[i] < 0 || tau[i] >= tau_cap) throw Error("PolicyTable: tau out of range");
        index += tau[i] * strides[i];
    }
    return index;
}

void PolicyTable::state_of(long index, std::span<int> tau) const {
    for (int i = n - 1; i >= 0; --i) {
        tau[i] = static_cast<int>(index % tau_cap);
        index /= tau_cap;
    }
}

double stage_cost(const MdpProblem& problem, std::span<const int> tau,
                  std::uint32_t action_bits) {
    if (static_cast<int>(tau.size()) != problem.n())
        throw DimensionMismatch("stage_cost: state dimension != sensor count");
    double cost = 0.0;
    for (int i = 0; i < problem.n(); ++i) {
        cost += problem.sensors[i].error_cost(tau[i]);
        if (action_bits & (1u << i)) cost += problem.sensors[i].model().comm_cost;
    }
    return cost;
}

namespace {

PolicyTable rvi_impl(const MdpProblem& problem, double tol, long max_iter,
                     bool monotone_accel) {
    const int n = problem.n();
    const int cap = problem.tau_cap;
    const long S = problem.state_count();
    const int na = static_cast<int>(problem.actions.size());
    const auto strides = make_strides(n, cap);

    std::vector<double> lam(n), loss(n);
    for (int i = 0; i < n; ++i) {
        lam[i] = problem.sensors[i].model().lambda;
        loss[i] = 1.0 - lam[i];
    }
    std::vector<double> action_cost(na, 0.0);
    for (int a = 0; a < na; ++a)
        for (int i = 0; i < n; ++i)
            if (problem.actions[a] & (1u << i))
                action_cost[a] += problem.sensors[i].model().comm_cost;

    // Per-state precomputation: holding cost, and the flat-index contribution
    // of each sensor growing one step (clamped at the cap).
    std::vector<double> base_err(S);
    std::vector<long> hold_sum(S);
    std::vector<long> hold_part(static_cast<size_t>(S) * n);
    {
        std::vector<int> tau(n, 0);
        for (long s = 0; s < S; ++s) {
            double err = 0.0;
            long sum = 0;
            for (int i = 0; i < n; ++i) {
                err += problem.sensors[i].error_cost(tau[i]);
                const long part = std::min(tau[i] + 1, cap - 1) * strides[i];
                hold_part[s * n + i] = part;
                sum += part;
            }
            base_err[s] = err;
            hold_sum[s] = sum;
            for (int i = n - 1; i >= 0; --i) {  // odometer
                if (++tau[i] < cap) break;
                tau[i] = 0;
            }
        }
    }

    std::vector<double> v_prev(S, 0.0), v_raw(S, 0.0);
    std::vector<int> policy(S, 0);

    PolicyTable table;
    table.n = n;
    table.tau_cap = cap;
    table.m = problem.m;
    table.actions = problem.actions;

    const auto expected_value = [&](long s, std::uint32_t act) {
        double ev = 0.0;
        // Enumerate success subsets of the scheduled set.
        std::uint32_t sub = act;
        while (true) {
            double prob = 1.0;
            long idx = hold_sum[s];
            for (std::uint32_t rest = act; rest != 0; rest &= rest - 1) {
                const int i = std::countr_zero(rest);
                if (sub & (1u << i)) {
                    prob *= lam[i];
                    idx -= hold_part[s * n + i];  // success resets tau_i to 0
                } else {
                    prob *= loss[i];
                }
            }
            ev += prob * v_prev[idx];
            if (sub == 0) break;
            sub = (sub - 1) & act;
        }
        return ev;
    };

    double avg = 0.0;
    bool converged = false;
    long iter = 0;
    while (iter < max_iter) {
        ++iter;
        for (long s = 0; s < S; ++s) {
            std::uint32_t forced = 0;
            if (monotone_accel) {
                long rem = s;
                for (int i = 0; i < n; ++i) {
                    const long digit = rem / strides[i];
                    rem -= digit * strides[i];
                    if (digit > 0 &&
                        (problem.actions[policy[s - strides[i]]] & (1u << i)))
                        forced |= 1u << i;
                }
            }
            double best = std::numeric_limits<double>::infinity();
            int best_action = -1;
            for (int a = 0; a < na; ++a) {
                const std::uint32_t act = problem.actions[a];
                if ((act & forced) != forced) continue;
                const double q = base_err[s] + action_cost[a] + expected_value(s, act);
                if (q < best) {
                    best = q;
                    best_action = a;
                }
            }
            if (best_action < 0) {  // forced set unsatisfiable; fall back
                for (int a = 0; a < na; ++a) {
                    const double q = base_err[s] + action_cost[a] +
                                     expected_value(s, problem.actions[a]);
                    if (q < best) {
                        best = q;
                        best_action = a;
                    }
                }
            }
            v_raw[s] = best;
            policy[s] = best_action;
        }

        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (long s = 0; s < S; ++s) {
            const double d = v_raw[s] - v_prev[s];
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        avg = v_raw[0];  // reference state: all holding times zero
        const double shift = v_raw[0];
        for (long s = 0; s < S; ++s) v_prev[s] = v_raw[s] - shift;
        if (hi - lo < tol) {
            converged = true;
            break;
        }
    }

    table.policy = std::move(policy);
    table.values = std::move(v_prev);
    table.avg_cost = avg;
    table.iterations = iter;
    table.converged = converged;
    return table;
}

}  // namespace

PolicyTable relative_value_iteration(const MdpProblem& problem, double tol,
                                     long max_iter) {
    return rvi_impl(problem, tol, max_iter, false);
}

PolicyTable monotone_rvi(const MdpProblem& problem, double tol, long max_iter) {
    return rvi_impl(problem, tol, max_iter, true);
}

std::vector<MonotoneViolation> verify_monotone(const PolicyTable& table) {
    std::vector<MonotoneViolation> violations;
    const auto strides = make_strides(table.n, table.tau_cap);
    std::vector<int> tau(table.n, 0);
    for (long s = 0; s < table.state_count(); ++s) {
        const std::uint32_t bits = table.action_bits(s);
        for (int i = 0; i < table.n; ++i) {
            if (!(bits & (1u << i))) continue;
            if (tau[i] + 1 >= table.tau_cap) continue;
            if (!(table.action_bits(s + strides[i]) & (1u << i)))
                violations.push_back({s, i});
        }
        for (int i = table.n - 1; i >= 0; --i) {
            if (++tau[i] < table.tau_cap) break;
            tau[i] = 0;
        }
    }
    return violations;
}

}  // namespace schedlab
