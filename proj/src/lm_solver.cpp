#include "fuzzreg/lm_solver.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "fuzzreg/error.hpp"

namespace fuzzreg {

namespace {

constexpr double kLambdaLimit = 1e12;

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

void LmConfig::validate() const {
    if (!(lambda0 > 0.0)) throw InvalidParameter("lambda0 must be positive");
    if (!(lambda_up > 1.0) || !(lambda_down > 1.0)) throw InvalidParameter("lambda factors must exceed 1");
    if (max_iters == 0) throw InvalidParameter("max_iters must be at least 1");
    if (!(step_tol > 0.0) || !(energy_tol > 0.0)) throw InvalidParameter("tolerances must be positive");
}

std::string to_string(LmStatus status) {
    switch (status) {
        case LmStatus::Converged: return "converged";
        case LmStatus::MaxIterations: return "max-iterations";
        case LmStatus::Stalled: return "stalled";
        case LmStatus::Failed: return "failed";
    }
    return "unknown";
}

Eigen::MatrixXd fd_jacobian(const ResidualFn& residual_fn, const Eigen::VectorXd& theta,
                            const FdStepPolicy& policy) {
    Eigen::MatrixXd jac;
    for (Eigen::Index l = 0; l < theta.size(); ++l) {
        const double h = policy.h0 * (1.0 + std::abs(theta(l)));
        Eigen::VectorXd plus = theta, minus = theta;
        plus(l) += h;
        minus(l) -= h;
        const Eigen::VectorXd ep = residual_fn(plus);
        const Eigen::VectorXd em = residual_fn(minus);
        if (!all_finite(ep) || !all_finite(em)) throw NumericalFailure("non-finite residuals in finite differences");
        if (l == 0) jac.resize(ep.size(), theta.size());
        // divide by the realized step to cancel representation error in theta +- h
        jac.col(l) = (ep - em) / (plus(l) - minus(l));
    }
    return jac;
}

LmResult lm_minimize(const LeastSquaresProblem& problem, const Eigen::VectorXd& theta0, const LmConfig& cfg) {
    cfg.validate();
    if (!problem.residuals) throw InvalidParameter("least-squares problem needs a residual function");

    const bool analytic = cfg.jacobian_mode == JacobianMode::Analytic && problem.residuals_and_jacobian;
    LmResult res;
    res.theta = theta0;

    Eigen::VectorXd e;
    Eigen::MatrixXd jac;
    const auto linearize = [&](const Eigen::VectorXd& x) {
        if (analytic) {
            problem.residuals_and_jacobian(x, e, jac);
        } else {
            e = problem.residuals(x);
            jac = fd_jacobian(problem.residuals, x);
        }
        ++res.residual_evals;
        ++res.iterations;
        if (!all_finite(e) || !jac.allFinite()) throw NumericalFailure("non-finite residuals or Jacobian");
    };

    linearize(res.theta);
    double energy = e.squaredNorm();
    res.initial_energy = energy;
    res.energy_trace.push_back(energy);
    double lambda = cfg.lambda0;

    for (;;) {
        if (energy == 0.0) {
            res.status = LmStatus::Converged;
            break;
        }
        const Eigen::MatrixXd normal = jac.transpose() * jac;
        const Eigen::VectorXd grad = jac.transpose() * e;
        if (grad.cwiseAbs().maxCoeff() == 0.0) {
            res.status = LmStatus::Converged;
            break;
        }
        // floor the diagonal so parameters with zero sensitivity stay damped
        const double mean_diag = normal.diagonal().mean();
        const Eigen::VectorXd diag =
            normal.diagonal().cwiseMax(1e-12 * (mean_diag > 0.0 ? mean_diag : 1.0));

        bool accepted = false;
        bool done = false;
        while (!accepted) {
            Eigen::MatrixXd damped = normal;
            damped.diagonal() += lambda * diag;
            const Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
            Eigen::VectorXd step;
            bool solved = ldlt.info() == Eigen::Success && ldlt.isPositive();
            if (solved) {
                step = ldlt.solve(-grad);
                solved = all_finite(step);
            }
            if (!solved) {
                lambda *= cfg.lambda_up;
                if (lambda > kLambdaLimit) {
                    res.status = LmStatus::Failed;
                    done = true;
                    break;
                }
                continue;
            }
            if (step.norm() < cfg.step_tol) {
                res.status = LmStatus::Converged;
                done = true;
                break;
            }

            const Eigen::VectorXd candidate = res.theta + step;
            const Eigen::VectorXd e_new = problem.residuals(candidate);
            ++res.residual_evals;
            const double energy_new = all_finite(e_new) ? e_new.squaredNorm() : INFINITY;
            if (energy_new < energy) {
                const double rel = (energy - energy_new) / energy;
                res.theta = candidate;
                energy = energy_new;
                res.energy_trace.push_back(energy);
                ++res.accepted_steps;
                lambda /= cfg.lambda_down;
                accepted = true;
                if (rel < cfg.energy_tol) {
                    res.status = LmStatus::Converged;
                    done = true;
                }
            } else {
                lambda *= cfg.lambda_up;
                if (lambda > kLambdaLimit) {
                    res.status = LmStatus::Stalled;
                    done = true;
                    break;
                }
            }
        }
        if (done) break;
        if (res.iterations >= cfg.max_iters) {
            res.status = LmStatus::MaxIterations;
            break;
        }
        linearize(res.theta);
    }

    res.final_energy = energy;
    res.final_lambda = lambda;
    return res;
}

}  // namespace fuzzreg
