#include <cmath>

#include <doctest.h>

#include "helpers.hpp"
#include "schedlab/estimation.hpp"

using namespace schedlab;
using namespace schedlab::testing;

TEST_CASE("static process: one-step update of the prior Q") {
    const auto ss = steady_state_covariance(scalar_model(0.0, 1.0, 1.0, 1.0, 1.0, 0.0));
    CHECK(ss.p_bar()(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("scalar steady state solves the posterior quadratic") {
    // p = (a^2 p + q) r / ((a^2 p + q) + r) => a^2 p^2 + (q + r - a^2 r) p - q r = 0
    const double a = 1.2, q = 1.0, r = 1.0;
    const double b = q + r - a * a * r;
    const double root = (-b + std::sqrt(b * b + 4.0 * a * a * q * r)) / (2.0 * a * a);
    const auto ss = steady_state_covariance(scalar_model(a, 1.0, q, r, 0.8, 0.0));
    CHECK(ss.p_bar()(0, 0) == doctest::Approx(root).epsilon(1e-9));
}

TEST_CASE("matrix steady state matches a long Kalman recursion from zero") {
    for (const auto& model : two_sensor_models()) {
        // Oracle: 1e4 predict/update steps starting from Sigma_0 = 0.
        Eigen::MatrixXd post = Eigen::MatrixXd::Zero(2, 2);
        for (int k = 0; k < 10000; ++k) {
            const Eigen::MatrixXd prior =
                model.A * post * model.A.transpose() + model.Q;
            const Eigen::MatrixXd innov =
                model.C * prior * model.C.transpose() + model.R;
            post = prior - prior * model.C.transpose() * innov.inverse() * model.C *
                               prior;
        }
        const auto ss = steady_state_covariance(model);
        CHECK(ss.p_bar().trace() == doctest::Approx(post.trace()).epsilon(1e-8));
    }
}

TEST_CASE("steady state is symmetric PSD and a Riccati fixed point") {
    auto models = two_sensor_models();
    for (const auto& model : three_sensor_models()) models.push_back(model);
    for (const auto& model : models) {
        const auto ss = steady_state_covariance(model);
        const Eigen::MatrixXd& p = ss.p_bar();
        CHECK((p - p.transpose()).norm() < 1e-9);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p);
        CHECK(es.eigenvalues().minCoeff() > -1e-9);

        const Eigen::MatrixXd prior = model.A * p * model.A.transpose() + model.Q;
        const Eigen::MatrixXd innov = model.C * prior * model.C.transpose() + model.R;
        const Eigen::MatrixXd next =
            prior - prior * model.C.transpose() * innov.inverse() * model.C * prior;
        CHECK((next - p).norm() < 1e-8);
    }
}

TEST_CASE("riccati iteration reports no convergence for an unobserved random walk") {
    ProcessModel raw;  // bypasses validation on purpose
    raw.id = 99;
    raw.A = scalar(1.0);
    raw.C = scalar(0.0);
    raw.Q = scalar(1.0);
    raw.R = scalar(1.0);
    raw.lambda = 1.0;
    CHECK_THROWS_AS((void)steady_state_covariance(raw), NoConvergence);
}

TEST_CASE("lyapunov_apply") {
    const auto model = scalar_model(2.0, 1.0, 3.0, 1.0, 1.0, 0.0);
    const Eigen::MatrixXd x = scalar(1.0);
    CHECK(lyapunov_apply(model, x, 0)(0, 0) == 1.0);
    CHECK(lyapunov_apply(model, x, 1)(0, 0) == doctest::Approx(7.0));
    CHECK(lyapunov_apply(model, x, 3)(0, 0) == doctest::Approx(127.0));
    CHECK_THROWS_AS((void)lyapunov_apply(model, Eigen::MatrixXd::Identity(2, 2), 1),
                    DimensionMismatch);
}

TEST_CASE("error_cost: hand-iterated scalar value and monotonicity") {
    const auto model = scalar_model(1.2, 1.0, 1.0, 1.0, 0.8, 0.0);
    const SteadyState ss(model, scalar(0.5));
    CHECK(ss.error_cost(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(ss.error_cost(2) == doctest::Approx(3.4768).epsilon(1e-12));

    for (const auto& m : two_sensor_models()) {
        const auto s = steady_state_covariance(m);
        CHECK(s.error_cost(0) == doctest::Approx(s.p_bar().trace()));
        for (int tau = 1; tau <= 200; ++tau)
            CHECK(s.error_cost(tau) >= s.error_cost(tau - 1));
    }
}

TEST_CASE("error_cost flags overflow for an unstable process at huge tau") {
    const auto ss = steady_state_covariance(scalar_model(2.0, 1.0, 1.0, 1.0, 0.8, 0.0));
    CHECK_THROWS_AS((void)ss.error_cost(600), CostOverflow);
}

TEST_CASE("discounted lyapunov solve: closed forms and residual") {
    // lambda = 1 leaves only the t = 0 term.
    const auto perfect = scalar_model(1.2, 1.0, 1.0, 1.0, 1.0, 0.0);
    CHECK(discounted_lyapunov_solve(perfect, scalar(3.0))(0, 0) == doctest::Approx(3.0));

    // Geometric series: S = X / (1 - (1-lambda) a^2).
    const auto unit = scalar_model(1.0, 1.0, 1.0, 1.0, 0.75, 0.0);
    CHECK(discounted_lyapunov_solve(unit, scalar(1.0))(0, 0) ==
          doctest::Approx(4.0 / 3.0).epsilon(1e-10));
    const auto growing = scalar_model(1.2, 1.0, 1.0, 1.0, 0.8, 0.0);
    CHECK(discounted_lyapunov_solve(growing, scalar(2.0))(0, 0) ==
          doctest::Approx(2.0 / (1.0 - 0.288)).epsilon(1e-10));

    for (const auto& model : two_sensor_models()) {
        const auto ss = steady_state_covariance(model);
        const Eigen::MatrixXd s = discounted_lyapunov_solve(model, ss.p_bar());
        const Eigen::MatrixXd residual =
            s - (1.0 - model.lambda) * model.A * s * model.A.transpose() - ss.p_bar();
        CHECK(residual.norm() < 1e-9);
    }
}

TEST_CASE("discounted lyapunov solve rejects a diverging series") {
    const auto model = scalar_model(2.0, 1.0, 1.0, 1.0, 0.5, 0.0);
    CHECK_THROWS_AS((void)discounted_lyapunov_solve(model, scalar(1.0)),
                    SpectralConditionViolated);
}

TEST_CASE("spectral radius") {
    CHECK(spectral_radius(Eigen::MatrixXd::Identity(2, 2)) == doctest::Approx(1.0));
    Eigen::MatrixXd upper(2, 2), rotation(2, 2);
    upper << 1.1, 1, 0, 1;
    rotation << 0, 1, -1, 0;
    CHECK(spectral_radius(upper) == doctest::Approx(1.1));
    CHECK(spectral_radius(rotation) == doctest::Approx(1.0));
    CHECK_THROWS_AS((void)spectral_radius(Eigen::MatrixXd::Zero(2, 3)),
                    DimensionMismatch);
}

TEST_CASE("model validation rejects broken inputs") {
    CHECK_THROWS_AS((void)scalar_model(1.0, 1.0, 1.0, 0.0, 0.9, 0.0), ModelInvariant);
    CHECK_THROWS_AS((void)scalar_model(1.0, 1.0, 1.0, 1.0, 0.0, 0.0), ModelInvariant);
    CHECK_THROWS_AS((void)scalar_model(1.0, 1.0, 1.0, 1.0, 1.5, 0.0), ModelInvariant);
    CHECK_THROWS_AS((void)scalar_model(1.0, 1.0, 1.0, 1.0, 0.9, -1.0), ModelInvariant);
    // Unstable and unobserved: the PBH test must fail.
    CHECK_THROWS_AS((void)scalar_model(2.0, 0.0, 1.0, 1.0, 0.9, 0.0), ModelInvariant);
    // Unstable and undriven is fine; unstable and unstabilizable is not
    // reachable for scalars with q > 0, so check the asymmetric-Q gate.
    Eigen::MatrixXd bad_q(2, 2);
    bad_q << 1, 0.5, 0, 1;
    CHECK_THROWS_AS((void)make_process_model(0, Eigen::MatrixXd::Identity(2, 2) * 0.5,
                                             Eigen::MatrixXd::Identity(2, 2), bad_q,
                                             Eigen::MatrixXd::Identity(2, 2), 0.9, 0.0),
                    ModelInvariant);
}
