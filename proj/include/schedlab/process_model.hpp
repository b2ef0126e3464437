#pragma once

#include <Eigen/Dense>

#include "schedlab/errors.hpp"

namespace schedlab {

/// One discrete-time linear process observed by one sensor that transmits
/// local state estimates over a lossy channel.
struct ProcessModel {
    int id = 0;
    Eigen::MatrixXd A;  // state transition, n x n
    Eigen::MatrixXd C;  // observation, p x n
    Eigen::MatrixXd Q;  // process noise covariance, symmetric PSD
    Eigen::MatrixXd R;  // measurement noise covariance, symmetric PD
    double lambda = 1.0;     // channel success probability, in (0, 1]
    double comm_cost = 0.0;  // energy cost per transmission, >= 0

    int state_dim() const { return static_cast<int>(A.rows()); }
    int obs_dim() const { return static_cast<int>(C.rows()); }
};

/// Largest eigenvalue modulus of a square matrix.
double spectral_radius(const Eigen::Ref<const Eigen::MatrixXd>& A);

/// Symmetric PSD square root via eigendecomposition; tiny negative
/// eigenvalues from rounding are clipped to zero.
Eigen::MatrixXd symmetric_sqrt(const Eigen::Ref<const Eigen::MatrixXd>& X);

/// PBH rank test: (A, C) is detectable iff [A - mu I; C] has full column
/// rank at every eigenvalue mu of A with |mu| >= 1.
bool is_detectable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C);

/// PBH rank test: (A, B) is stabilizable iff [A - mu I, B] has full row
/// rank at every eigenvalue mu of A with |mu| >= 1.
bool is_stabilizable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// Checks every construction invariant; throws ModelInvariant or
/// DimensionMismatch on violation.
void validate(const ProcessModel& model);

/// Builds and validates a model in one step.
ProcessModel make_process_model(int id, Eigen::MatrixXd A, Eigen::MatrixXd C,
                                Eigen::MatrixXd Q, Eigen::MatrixXd R,
                                double lambda, double comm_cost);

}  // namespace schedlab
