#include "schedlab/feasibility.hpp"

#include <algorithm>

namespace schedlab {

bool check_assumption1(std::span<const ProcessModel> models) {
    for (const auto& model : models) {
        const double rho = spectral_radius(model.A);
        if (rho * rho * (1.0 - model.lambda) >= 1.0) return false;
    }
    return true;
}

FeasibilityReport run_algorithm1(std::span<const ProcessModel> models, int m) {
    FeasibilityReport report;
    report.m = m;
    report.assumption1_ok = check_assumption1(models);
    if (!report.assumption1_ok) return report;  // infeasible regardless of grouping

    struct Unstable {
        int id;
        double rho2;
        double loss;  // 1 - lambda
    };
    std::vector<Unstable> unstable;
    for (const auto& model : models) {
        const double rho = spectral_radius(model.A);
        if (rho >= 1.0)
            unstable.push_back({model.id, rho * rho, 1.0 - model.lambda});
    }
    std::sort(unstable.begin(), unstable.end(),
              [](const Unstable& a, const Unstable& b) { return a.id < b.id; });

    struct Group {
        std::vector<int> ids;
        double max_rho2 = 0.0;
        double max_loss = 0.0;
    };
    std::vector<Group> groups;
    for (const auto& proc : unstable) {
        bool placed = false;
        for (auto& group : groups) {
            const double rho2 = std::max(group.max_rho2, proc.rho2);
            const double loss = std::max(group.max_loss, proc.loss);
            if (rho2 * loss < 1.0) {
                group.ids.push_back(proc.id);
                group.max_rho2 = rho2;
                group.max_loss = loss;
                placed = true;
                break;
            }
        }
        if (!placed) groups.push_back({{proc.id}, proc.rho2, proc.loss});
    }

    for (auto& group : groups) report.groups.push_back(std::move(group.ids));
    report.group_count = static_cast<int>(report.groups.size());
    report.feasible_for_m = report.group_count <= m;
    return report;
}

bool existence_check(std::span<const ProcessModel> models, int m) {
    return run_algorithm1(models, m).feasible_for_m;
}

}  // namespace schedlab
