#include "schedlab/estimation.hpp"

#include <string>

namespace schedlab {

namespace {

constexpr double kRiccatiTol = 1e-10;
constexpr long kRiccatiMaxIter = 100000;
constexpr double kSeriesTol = 1e-12;
constexpr long kSeriesMaxIter = 10000000;
constexpr double kTraceBudget = 1e300;

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& X) {
    return 0.5 * (X + X.transpose());
}

}  // namespace

SteadyState::SteadyState(ProcessModel model, Eigen::MatrixXd p_bar, int initial_table)
    : model_(std::move(model)), p_bar_(std::move(p_bar)) {
    costs_.reserve(initial_table);
    costs_.push_back(p_bar_.trace());
    frontier_ = p_bar_;
    if (initial_table > 1) extend_locked(initial_table - 1);
}

SteadyState::SteadyState(const SteadyState& other) : model_(other.model_) {
    std::scoped_lock lock(other.mutex_);
    p_bar_ = other.p_bar_;
    costs_ = other.costs_;
    frontier_ = other.frontier_;
}

SteadyState& SteadyState::operator=(const SteadyState& other) {
    if (this == &other) return *this;
    SteadyState copy(other);
    std::scoped_lock lock(mutex_);
    model_ = std::move(copy.model_);
    p_bar_ = std::move(copy.p_bar_);
    costs_ = std::move(copy.costs_);
    frontier_ = std::move(copy.frontier_);
    return *this;
}

void SteadyState::extend_locked(int tau) const {
    while (static_cast<int>(costs_.size()) <= tau) {
        frontier_ = symmetrize(model_.A * frontier_ * model_.A.transpose() + model_.Q);
        const double trace = frontier_.trace();
        if (!(trace <= kTraceBudget))
            throw CostOverflow("error_cost: trace exceeded 1e300 at tau = " +
                               std::to_string(costs_.size()));
        costs_.push_back(trace);
    }
}

double SteadyState::error_cost(int tau) const {
    if (tau < 0) throw Error("error_cost: tau must be >= 0");
    std::scoped_lock lock(mutex_);
    if (static_cast<int>(costs_.size()) <= tau) extend_locked(tau);
    return costs_[tau];
}

int SteadyState::table_size() const {
    std::scoped_lock lock(mutex_);
    return static_cast<int>(costs_.size());
}

SteadyState steady_state_covariance(const ProcessModel& model) {
    const auto n = model.A.rows();
    if (model.A.cols() != n || model.Q.rows() != n || model.C.cols() != n)
        throw DimensionMismatch("steady_state_covariance: incompatible shapes");

    Eigen::MatrixXd post = symmetrize(model.Q);
    for (long iter = 0; iter < kRiccatiMaxIter; ++iter) {
        const Eigen::MatrixXd prior =
            symmetrize(model.A * post * model.A.transpose() + model.Q);
        const Eigen::MatrixXd cp = model.C * prior;  // C P-
        const Eigen::MatrixXd innov = cp * model.C.transpose() + model.R;
        const Eigen::MatrixXd next =
            symmetrize(prior - cp.transpose() * innov.ldlt().solve(cp));
        const double delta = (next - post).norm();
        post = next;
        if (delta < kRiccatiTol) return SteadyState(model, post);
    }
    throw NoConvergence("steady_state_covariance: no fixed point after " +
                        std::to_string(kRiccatiMaxIter) +
                        " iterations (near-undetectable pair?)");
}

Eigen::MatrixXd lyapunov_apply(const ProcessModel& model,
                               const Eigen::Ref<const Eigen::MatrixXd>& X,
                               int times) {
    if (X.rows() != model.A.rows() || X.cols() != model.A.cols())
        throw DimensionMismatch("lyapunov_apply: X shape != state dim");
    if (times < 0) throw Error("lyapunov_apply: times must be >= 0");
    Eigen::MatrixXd result = X;
    for (int t = 0; t < times; ++t)
        result = symmetrize(model.A * result * model.A.transpose() + model.Q);
    return result;
}

Eigen::MatrixXd lyapunov_series_solve(const Eigen::Ref<const Eigen::MatrixXd>& A,
                                      const Eigen::Ref<const Eigen::MatrixXd>& X,
                                      double discount) {
    if (A.rows() != A.cols() || X.rows() != A.rows() || X.cols() != A.cols())
        throw DimensionMismatch("lyapunov_series_solve: incompatible shapes");
    // Block-doubled summation of sum_t discount^t A^t X (A^t)': with
    // W = sqrt(discount) A (spectral radius < 1 on the solvable domain),
    //   S_{k+1} = S_k + W_k S_k W_k',   W_{k+1} = W_k^2
    // doubles the summed range per step, so even spectral ratios within
    // 1e-12 of 1 settle in ~50 steps.
    Eigen::MatrixXd sum = X;
    Eigen::MatrixXd w = std::sqrt(discount) * A;
    for (int k = 0; k < 128; ++k) {
        const Eigen::MatrixXd block = w * sum * w.transpose();
        if (block.norm() < kSeriesTol) return symmetrize(sum);
        sum += block;
        w = (w * w).eval();
    }
    throw NoConvergence("lyapunov_series_solve: series did not settle");
}

Eigen::MatrixXd discounted_lyapunov_solve(const ProcessModel& model,
                                          const Eigen::Ref<const Eigen::MatrixXd>& X) {
    const double rho = spectral_radius(model.A);
    const double ratio = rho * rho * (1.0 - model.lambda);
    if (ratio >= 1.0)
        throw SpectralConditionViolated(
            "discounted_lyapunov_solve: rho^2(A)(1-lambda) = " + std::to_string(ratio));
    return lyapunov_series_solve(model.A, X, 1.0 - model.lambda);
}

}  // namespace schedlab
