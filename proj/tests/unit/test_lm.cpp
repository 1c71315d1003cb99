#include <cmath>

#include <gtest/gtest.h>

#include "fuzzreg/error.hpp"
#include "fuzzreg/lm_solver.hpp"

using namespace fuzzreg;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd x(v.size());
    int i = 0;
    for (double d : v) x[i++] = d;
    return x;
}

}  // namespace

TEST(FdJacobian, Linear) {
    const auto J = fd_jacobian([](const Eigen::VectorXd& t) { return t; }, vec({0.7}));
    EXPECT_NEAR(J(0, 0), 1.0, 1e-9);
}

TEST(FdJacobian, Quadratic) {
    const auto J = fd_jacobian([](const Eigen::VectorXd& t) { return Eigen::VectorXd(t.array().square()); }, vec({3.0}));
    EXPECT_NEAR(J(0, 0), 6.0, 1e-6);
}

TEST(FdJacobian, NonFiniteThrows) {
    const auto f = [](const Eigen::VectorXd& t) { return Eigen::VectorXd(t.array().log()); };
    EXPECT_THROW(fd_jacobian(f, vec({0.0})), NumericalFailure);
}

TEST(Lm, LinearResidual) {
    LeastSquaresProblem p;
    p.residuals = [](const Eigen::VectorXd& t) { return Eigen::VectorXd(t.array() - 3.0); };
    LmConfig cfg;
    cfg.jacobian_mode = JacobianMode::FiniteDifference;
    const auto r = lm_minimize(p, vec({0.0}), cfg);
    EXPECT_NEAR(r.theta[0], 3.0, 1e-8);
    EXPECT_TRUE(r.ok());
}

TEST(Lm, Rosenbrock) {
    LeastSquaresProblem p;
    p.residuals = [](const Eigen::VectorXd& t) { return vec({10.0 * (t[1] - t[0] * t[0]), 1.0 - t[0]}); };
    p.residuals_and_jacobian = [&](const Eigen::VectorXd& t, Eigen::VectorXd& r, Eigen::MatrixXd& J) {
        r = p.residuals(t);
        J.resize(2, 2);
        J << -20.0 * t[0], 10.0, -1.0, 0.0;
    };
    LmConfig cfg;
    cfg.max_iters = 500;
    const auto r = lm_minimize(p, vec({-1.2, 1.0}), cfg);
    EXPECT_NEAR(r.theta[0], 1.0, 1e-6);
    EXPECT_NEAR(r.theta[1], 1.0, 1e-6);

    cfg.jacobian_mode = JacobianMode::FiniteDifference;
    const auto rf = lm_minimize(p, vec({-1.2, 1.0}), cfg);
    EXPECT_NEAR(rf.theta[0], 1.0, 1e-6);
    EXPECT_NEAR(rf.theta[1], 1.0, 1e-6);
}

TEST(Lm, EnergyTraceDecreases) {
    LeastSquaresProblem p;
    p.residuals = [](const Eigen::VectorXd& t) {
        return vec({std::sin(t[0]) + 0.5 * t[1], t[1] * t[1] - 0.2, std::cos(t[0] * t[1])});
    };
    LmConfig cfg;
    cfg.jacobian_mode = JacobianMode::FiniteDifference;
    const auto r = lm_minimize(p, vec({1.0, 1.0}), cfg);
    ASSERT_FALSE(r.energy_trace.empty());
    for (std::size_t i = 1; i < r.energy_trace.size(); ++i) EXPECT_LT(r.energy_trace[i], r.energy_trace[i - 1]);
    EXPECT_LE(r.final_energy, r.initial_energy);
    EXPECT_EQ(r.energy_trace.size(), r.accepted_steps + 1);
}

TEST(Lm, ZeroResidualAtStart) {
    LeastSquaresProblem p;
    p.residuals = [](const Eigen::VectorXd& t) { return Eigen::VectorXd(t.array() - 2.0); };
    LmConfig cfg;
    cfg.jacobian_mode = JacobianMode::FiniteDifference;
    const auto r = lm_minimize(p, vec({2.0}), cfg);
    EXPECT_EQ(r.status, LmStatus::Converged);
    EXPECT_EQ(r.theta[0], 2.0);
}

TEST(Lm, ConfigValidation) {
    LmConfig c;
    c.lambda_up = 1.0;
    EXPECT_THROW(c.validate(), InvalidParameter);
    c = LmConfig{};
    c.max_iters = 0;
    EXPECT_THROW(c.validate(), InvalidParameter);
    c = LmConfig{};
    c.lambda0 = -1.0;
    EXPECT_THROW(c.validate(), InvalidParameter);
}

TEST(Lm, StatusNames) {
    EXPECT_EQ(to_string(LmStatus::Converged), "converged");
    EXPECT_NE(to_string(LmStatus::Stalled), to_string(LmStatus::Failed));
}
