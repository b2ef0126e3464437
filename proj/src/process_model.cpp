#include "schedlab/process_model.hpp"

#include <complex>
#include <string>

#include <Eigen/Eigenvalues>

namespace schedlab {

namespace {

constexpr double kSymmetryTol = 1e-10;
constexpr double kPsdTol = 1e-10;

bool is_symmetric(const Eigen::MatrixXd& X, double tol) {
    return (X - X.transpose()).cwiseAbs().maxCoeff() <= tol;
}

double min_eigenvalue(const Eigen::MatrixXd& X) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (X + X.transpose()),
                                                      Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

long complex_rank(const Eigen::MatrixXcd& M) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(M);
    return cod.rank();
}

}  // namespace

double spectral_radius(const Eigen::Ref<const Eigen::MatrixXd>& A) {
    if (A.rows() != A.cols()) throw DimensionMismatch("spectral_radius: matrix not square");
    if (A.rows() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd symmetric_sqrt(const Eigen::Ref<const Eigen::MatrixXd>& X) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (X + X.transpose()));
    Eigen::VectorXd d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

bool is_detectable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C) {
    const long n = A.rows();
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
    for (long k = 0; k < n; ++k) {
        const std::complex<double> mu = es.eigenvalues()(k);
        if (std::abs(mu) < 1.0 - 1e-9) continue;
        Eigen::MatrixXcd M(n + C.rows(), n);
        M.topRows(n) = A.cast<std::complex<double>>();
        M.topRows(n).diagonal().array() -= mu;
        M.bottomRows(C.rows()) = C.cast<std::complex<double>>();
        if (complex_rank(M) < n) return false;
    }
    return true;
}

bool is_stabilizable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    const long n = A.rows();
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
    for (long k = 0; k < n; ++k) {
        const std::complex<double> mu = es.eigenvalues()(k);
        if (std::abs(mu) < 1.0 - 1e-9) continue;
        Eigen::MatrixXcd M(n, n + B.cols());
        M.leftCols(n) = A.cast<std::complex<double>>();
        M.leftCols(n).diagonal().array() -= mu;
        M.rightCols(B.cols()) = B.cast<std::complex<double>>();
        if (complex_rank(M) < n) return false;
    }
    return true;
}

void validate(const ProcessModel& model) {
    const auto n = model.A.rows();
    const auto tag = [&](const std::string& what) {
        return "model " + std::to_string(model.id) + ": " + what;
    };
    if (model.A.cols() != n) throw DimensionMismatch(tag("A not square"));
    if (model.C.cols() != n) throw DimensionMismatch(tag("C column count != state dim"));
    if (model.Q.rows() != n || model.Q.cols() != n)
        throw DimensionMismatch(tag("Q shape != state dim"));
    if (model.R.rows() != model.C.rows() || model.R.cols() != model.C.rows())
        throw DimensionMismatch(tag("R shape != observation dim"));

    if (!is_symmetric(model.Q, kSymmetryTol)) throw ModelInvariant(tag("Q not symmetric"));
    if (!is_symmetric(model.R, kSymmetryTol)) throw ModelInvariant(tag("R not symmetric"));
    if (min_eigenvalue(model.Q) < -kPsdTol)
        throw ModelInvariant(tag("Q not positive semidefinite"));
    if (min_eigenvalue(model.R) <= 0.0)
        throw ModelInvariant(tag("R not positive definite"));
    if (!(model.lambda > 0.0 && model.lambda <= 1.0))
        throw ModelInvariant(tag("lambda outside (0, 1]"));
    if (!(model.comm_cost >= 0.0)) throw ModelInvariant(tag("comm_cost negative"));

    if (!is_detectable(model.A, model.C)) throw ModelInvariant(tag("(A, C) not detectable"));
    if (!is_stabilizable(model.A, symmetric_sqrt(model.Q)))
        throw ModelInvariant(tag("(A, sqrt(Q)) not stabilizable"));
}

ProcessModel make_process_model(int id, Eigen::MatrixXd A, Eigen::MatrixXd C,
                                Eigen::MatrixXd Q, Eigen::MatrixXd R,
                                double lambda, double comm_cost) {
    ProcessModel model{id, std::move(A), std::move(C), std::move(Q), std::move(R),
                       lambda, comm_cost};
    validate(model);
    return model;
}

}  // namespace schedlab
