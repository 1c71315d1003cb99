#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fuzzreg {

enum class JacobianMode { FiniteDifference, Analytic };

struct LmConfig {
    double lambda0 = 1e-3;  // initial damping, multiplies diag(J^T J)
    double lambda_up = 10.0;
    double lambda_down = 10.0;
    std::size_t max_iters = 100;
    double step_tol = 1e-10;
    double energy_tol = 1e-12;
    JacobianMode jacobian_mode = JacobianMode::Analytic;

    void validate() const;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
// Writes residuals and Jacobian at the given parameters.
using ResidualJacobianFn = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd&)>;

struct LeastSquaresProblem {
    ResidualFn residuals;
    ResidualJacobianFn residuals_and_jacobian;  // may be empty; finite differences are used then
};

struct FdStepPolicy {
    double h0 = 1e-6;  // per-parameter step h_l = h0 * (1 + |theta_l|)
};

// Central-difference Jacobian. Throws NumericalFailure on non-finite residuals.
Eigen::MatrixXd fd_jacobian(const ResidualFn& residual_fn, const Eigen::VectorXd& theta,
                            const FdStepPolicy& policy = {});

enum class LmStatus {
    Converged,       // step, energy or gradient tolerance reached
    MaxIterations,
    Stalled,         // no decreasing step found before the damping limit
    Failed,          // damped normal matrix singular past the damping limit
};

std::string to_string(LmStatus status);

struct LmResult {
    Eigen::VectorXd theta;  // best accepted parameters
    LmStatus status = LmStatus::Converged;
    std::size_t iterations = 0;      // Jacobian evaluations
    std::size_t accepted_steps = 0;
    std::size_t residual_evals = 0;
    double initial_energy = 0.0;
    double final_energy = 0.0;
    double final_lambda = 0.0;
    std::vector<double> energy_trace;  // initial energy, then each accepted energy

    bool ok() const { return status != LmStatus::Failed; }
};

LmResult lm_minimize(const LeastSquaresProblem& problem, const Eigen::VectorXd& theta0, const LmConfig& cfg);

}  // namespace fuzzreg
