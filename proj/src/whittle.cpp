#include "schedlab/whittle.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

namespace schedlab {

namespace {

constexpr double kBisectWidth = 1e-8;

double checked_lambda(const SteadyState& ss) {
    const double lambda = ss.model().lambda;
    if (lambda >= 1.0)
        throw PerfectChannel("whittle_index: lambda == 1 makes the index singular; "
                             "rank by whittle_fallback_score instead");
    return lambda;
}

double cost_prefix_sum(const SteadyState& ss, int last_tau) {
    double sum = 0.0;
    for (int t = 0; t <= last_tau; ++t) sum += ss.error_cost(t);
    return sum;
}

// J_e(theta) and the transmission rate for theta = 0..theta_max, plus the
// model's communication cost. J_e values reuse the identity
// S_{h(X)} = A S_X A' + S_Q to avoid re-summing the series per theta.
struct DecoupledCurve {
    std::vector<double> je;
    std::vector<double> rate;
    double comm_cost = 0.0;
};

DecoupledCurve build_curve(const SteadyState& ss, int theta_max) {
    const auto& model = ss.model();
    const double lambda = model.lambda;
    DecoupledCurve curve;
    curve.comm_cost = model.comm_cost;
    curve.je.resize(theta_max + 1);
    curve.rate.resize(theta_max + 1);

    const Eigen::MatrixXd s_q = discounted_lyapunov_solve(model, model.Q);
    Eigen::MatrixXd s_theta = discounted_lyapunov_solve(model, ss.p_bar());
    const double tr_sq = s_q.trace();

    curve.je[0] = lambda * s_theta.trace() + (1.0 - lambda) * tr_sq;
    curve.rate[0] = 1.0;
    double prefix = 0.0;  // sum of c_e(t) for t < theta
    for (int theta = 1; theta <= theta_max; ++theta) {
        s_theta = model.A * s_theta * model.A.transpose() + s_q;
        prefix += ss.error_cost(theta - 1);
        curve.rate[theta] = 1.0 / (lambda * theta + 1.0);
        curve.je[theta] =
            (s_theta.trace() + (1.0 - lambda) / lambda * tr_sq + prefix) *
            lambda * curve.rate[theta];
    }
    return curve;
}

// argmin over theta in [lo, hi] of je[theta] + (comm_cost + w) * rate[theta],
// ties toward the smallest theta.
int inner_argmin(const DecoupledCurve& curve, double w, int lo, int hi) {
    int best_theta = lo;
    double best = std::numeric_limits<double>::infinity();
    for (int theta = lo; theta <= hi; ++theta) {
        const double g = curve.je[theta] + (curve.comm_cost + w) * curve.rate[theta];
        if (g < best) {
            best = g;
            best_theta = theta;
        }
    }
    return best_theta;
}

double inner_min_value(const DecoupledCurve& curve, double w) {
    const int hi = static_cast<int>(curve.je.size()) - 1;
    const int theta = inner_argmin(curve, w, 0, hi);
    const double scan = curve.je[theta] + (curve.comm_cost + w) * curve.rate[theta];
    // The scan cannot represent arbitrarily large thresholds; je[hi] lower
    // bounds every cost beyond the range, which keeps the dual a valid bound
    // even when the true minimizer lies past the scan.
    return std::min(scan, curve.je[hi]);
}

}  // namespace

StationaryDistribution stationary_distribution(double lambda, int theta, int tau_limit) {
    if (!(lambda > 0.0 && lambda <= 1.0))
        throw Error("stationary_distribution: lambda outside (0, 1]");
    if (theta < 0 || tau_limit < 0)
        throw Error("stationary_distribution: negative theta or tau_limit");
    const double base = lambda / (lambda * theta + 1.0);
    StationaryDistribution dist;
    dist.probs.resize(tau_limit + 1);
    for (int t = 0; t <= tau_limit; ++t)
        dist.probs[t] = t <= theta ? base : base * std::pow(1.0 - lambda, t - theta);
    if (tau_limit >= theta)
        dist.tail_mass = std::pow(1.0 - lambda, tau_limit - theta + 1) /
                         (lambda * theta + 1.0);
    else
        dist.tail_mass = ((theta - tau_limit) * lambda + (1.0 - lambda)) /
                         (lambda * theta + 1.0);
    return dist;
}

double threshold_comm_rate(double lambda, int theta) {
    if (!(lambda > 0.0 && lambda <= 1.0))
        throw Error("threshold_comm_rate: lambda outside (0, 1]");
    if (theta < 0) throw Error("threshold_comm_rate: negative theta");
    return 1.0 / (lambda * theta + 1.0);
}

double threshold_est_error(const SteadyState& ss, int theta) {
    if (theta < 0) throw Error("threshold_est_error: negative theta");
    const auto& model = ss.model();
    const double lambda = model.lambda;
    const Eigen::MatrixXd s_q = discounted_lyapunov_solve(model, model.Q);
    if (theta == 0) {
        const Eigen::MatrixXd s_p = discounted_lyapunov_solve(model, ss.p_bar());
        return lambda * s_p.trace() + (1.0 - lambda) * s_q.trace();
    }
    const Eigen::MatrixXd s_h =
        discounted_lyapunov_solve(model, lyapunov_apply(model, ss.p_bar(), theta));
    return (s_h.trace() + (1.0 - lambda) / lambda * s_q.trace() +
            cost_prefix_sum(ss, theta - 1)) *
           lambda / (lambda * theta + 1.0);
}

ThresholdAnalytics threshold_analytics(const SteadyState& ss, int theta, int tau_limit) {
    ThresholdAnalytics analytics;
    analytics.theta = theta;
    analytics.comm_rate = threshold_comm_rate(ss.model().lambda, theta);
    analytics.est_error = threshold_est_error(ss, theta);
    analytics.stationary = stationary_distribution(ss.model().lambda, theta, tau_limit);
    return analytics;
}

double whittle_index(const SteadyState& ss, int tau) {
    if (tau < 0) throw Error("whittle_index: negative tau");
    const double lambda = checked_lambda(ss);
    const double je = threshold_est_error(ss, tau);
    const double prefix = cost_prefix_sum(ss, tau);
    return lambda * (lambda * tau + 1.0) / (1.0 - lambda) *
               ((tau + 1.0) * je - prefix) -
           ss.model().comm_cost;
}

double whittle_fallback_score(const SteadyState& ss, int tau) {
    if (tau < 0) throw Error("whittle_fallback_score: negative tau");
    const double lambda = ss.model().lambda;
    const double je = threshold_est_error(ss, tau);
    const double prefix = cost_prefix_sum(ss, tau);
    return lambda * (lambda * tau + 1.0) * ((tau + 1.0) * je - prefix);
}

double whittle_index_oracle(const SteadyState& ss, int tau, int tau_cap) {
    checked_lambda(ss);
    const int theta_max = 4 * tau_cap;
    if (tau < 0 || tau + 1 > theta_max)
        throw Error("whittle_index_oracle: tau outside the threshold scan range");
    const DecoupledCurve curve = build_curve(ss, theta_max);

    const auto prefers_idle = [&](double w) {
        return inner_argmin(curve, w, 0, theta_max) >= tau + 1;
    };

    double lo = -ss.model().comm_cost - 1e6;
    double hi = 1e9;
    if (prefers_idle(lo) || !prefers_idle(hi))
        throw BracketFailure("whittle_index_oracle: no threshold transition in bracket");
    while (hi - lo >= kBisectWidth) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // one-ulp bracket; cannot narrow further
        (prefers_idle(mid) ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<IndexTable> build_index_tables(std::span<const SteadyState> sensors,
                                           int tau_cap) {
    std::vector<IndexTable> tables;
    tables.reserve(sensors.size());
    std::string failures;
    for (const auto& ss : sensors) {
        IndexTable table;
        table.sensor_id = ss.model().id;
        try {
            table.values.reserve(tau_cap);
            for (int tau = 0; tau < tau_cap; ++tau)
                table.values.push_back(whittle_index(ss, tau));
        } catch (const Error& e) {
            failures += (failures.empty() ? "" : "; ") + std::string("sensor ") +
                        std::to_string(ss.model().id) + ": " + e.what();
            continue;
        }
        // Monitored assumption: indices never decrease in tau. Exact plateaus
        // are an analytic feature of fast-mixing stable processes (constant
        // cost tail), so only a genuine decrease is flagged.
        for (size_t tau = 1; tau < table.values.size(); ++tau) {
            const double scale = std::max(1.0, std::abs(table.values[tau - 1]));
            if (table.values[tau] < table.values[tau - 1] - 1e-9 * scale) {
                std::fprintf(stderr,
                             "schedlab: index table for sensor %d decreases at "
                             "tau = %zu (numerical fault?)\n",
                             table.sensor_id, tau);
                break;
            }
        }
        tables.push_back(std::move(table));
    }
    if (!failures.empty()) throw Error("build_index_tables: " + failures);
    return tables;
}

void extend_index_table(const SteadyState& ss, IndexTable& table, int new_size) {
    if (static_cast<int>(table.values.size()) >= new_size) return;
    const auto& model = ss.model();
    const double lambda = checked_lambda(ss);
    const int theta0 = static_cast<int>(table.values.size());

    const Eigen::MatrixXd s_q = discounted_lyapunov_solve(model, model.Q);
    Eigen::MatrixXd s_theta =
        discounted_lyapunov_solve(model, lyapunov_apply(model, ss.p_bar(), theta0));
    const double tr_sq = s_q.trace();
    double prefix = cost_prefix_sum(ss, theta0 - 1);  // sum of c_e(t), t < theta0

    table.values.reserve(new_size);
    for (int theta = theta0; theta < new_size; ++theta) {
        const double je =
            theta == 0
                ? lambda * s_theta.trace() + (1.0 - lambda) * tr_sq
                : (s_theta.trace() + (1.0 - lambda) / lambda * tr_sq + prefix) *
                      lambda / (lambda * theta + 1.0);
        const double c_theta = ss.error_cost(theta);
        table.values.push_back(lambda * (lambda * theta + 1.0) / (1.0 - lambda) *
                                   ((theta + 1.0) * je - (prefix + c_theta)) -
                               model.comm_cost);
        prefix += c_theta;
        s_theta = model.A * s_theta * model.A.transpose() + s_q;
    }
}

double relaxed_lower_bound(std::span<const SteadyState> sensors, int m, int tau_cap) {
    if (sensors.empty()) return 0.0;
    const int theta_max = 4 * tau_cap;
    std::vector<DecoupledCurve> curves;
    curves.reserve(sensors.size());
    double w_hi = 0.0;
    for (const auto& ss : sensors) {
        curves.push_back(build_curve(ss, theta_max));
        w_hi = std::max(w_hi, whittle_index(ss, tau_cap));
    }
    w_hi = std::max(w_hi, 1e-9);

    const auto dual = [&](double w) {
        double value = -w * m;
        for (const auto& curve : curves) value += inner_min_value(curve, w);
        return value;
    };

    // Golden-section maximization of the concave dual on [0, w_hi]. The
    // iteration count alone drives the interval below any useful width even
    // when an unstable sensor makes w_hi astronomically large.
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 0.0, b = w_hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = dual(c), fd = dual(d);
    for (int it = 0; it < 400; ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = dual(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = dual(d);
        }
    }
    return dual(0.5 * (a + b));
}

}  // namespace schedlab
