#pragma once

#include <mutex>
#include <vector>

#include <Eigen/Dense>

#include "schedlab/process_model.hpp"

namespace schedlab {

/// Steady-state Kalman quantities for one process: the posterior error
/// covariance fixed point Pbar and a memoized table of open-loop error costs
/// Tr(h^tau(Pbar)), where h(X) = A X A' + Q.
///
/// Immutable apart from the cost memo, which only ever grows and is guarded
/// by a mutex, so instances can be shared read-only across threads.
class SteadyState {
public:
    SteadyState(ProcessModel model, Eigen::MatrixXd p_bar, int initial_table = 64);

    SteadyState(const SteadyState& other);
    SteadyState& operator=(const SteadyState& other);

    const ProcessModel& model() const { return model_; }
    const Eigen::MatrixXd& p_bar() const { return p_bar_; }

    /// Tr(h^tau(Pbar)); extends the memo on demand.
    /// Throws CostOverflow once the trace exceeds 1e300.
    double error_cost(int tau) const;

    int table_size() const;

private:
    void extend_locked(int tau) const;

    ProcessModel model_;
    Eigen::MatrixXd p_bar_;
    mutable std::mutex mutex_;
    mutable std::vector<double> costs_;
    mutable Eigen::MatrixXd frontier_;  // h^{costs_.size()-1}(p_bar_)
};

/// Fixed point of the posterior Riccati recursion (predict with A, Q; update
/// with C, R), iterated from Q until the successive Frobenius difference
/// drops below 1e-10. Throws NoConvergence after 1e5 iterations.
SteadyState steady_state_covariance(const ProcessModel& model);

/// h^times(X) with h(X) = A X A' + Q; times = 0 is the identity.
Eigen::MatrixXd lyapunov_apply(const ProcessModel& model,
                               const Eigen::Ref<const Eigen::MatrixXd>& X,
                               int times);

/// Tr(h^tau(Pbar)), memoized.
inline double error_cost(const SteadyState& ss, int tau) { return ss.error_cost(tau); }

/// Unique S with S = discount * A S A' + X, computed by the series
/// S = sum_t discount^t A^t X (A')^t truncated when a term's Frobenius norm
/// falls below 1e-12. Requires rho^2(A) * discount < 1.
Eigen::MatrixXd lyapunov_series_solve(const Eigen::Ref<const Eigen::MatrixXd>& A,
                                      const Eigen::Ref<const Eigen::MatrixXd>& X,
                                      double discount);

/// Unique S with S = (1-lambda) A S A' + X for the model's channel.
/// Throws SpectralConditionViolated if rho^2(A)(1-lambda) >= 1.
Eigen::MatrixXd discounted_lyapunov_solve(const ProcessModel& model,
                                          const Eigen::Ref<const Eigen::MatrixXd>& X);

}  // namespace schedlab
