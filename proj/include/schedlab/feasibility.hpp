#pragma once

#include <span>
#include <vector>

#include "schedlab/process_model.hpp"

namespace schedlab {

/// Result of the stabilizable-grouping feasibility check.
struct FeasibilityReport {
    bool assumption1_ok = false;
    std::vector<std::vector<int>> groups;  // ids of unstable processes only
    int group_count = 0;
    int m = 0;
    bool feasible_for_m = false;
};

/// True iff max_i rho^2(A_i)(1 - lambda_i) < 1, the necessary condition for
/// a bounded-cost schedule to exist at all.
bool check_assumption1(std::span<const ProcessModel> models);

/// Greedy first-fit grouping of the unstable processes (rho >= 1) in
/// ascending id order: a process joins the first group G whose joint
/// condition max rho^2 * max (1 - lambda) < 1 still holds, else opens a new
/// group. group_count groups can be served by group_count channels, so the
/// schedule is feasible when group_count <= m.
FeasibilityReport run_algorithm1(std::span<const ProcessModel> models, int m);

/// True iff a deterministic stationary optimal policy is guaranteed to
/// exist for m channels (grouping count <= m under Assumption 1).
bool existence_check(std::span<const ProcessModel> models, int m);

}  // namespace schedlab
