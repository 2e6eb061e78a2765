#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace qdent::optim {

/// Objective returning f(x); fills `grad` when it is non-null.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct BfgsOptions {
    int max_iterations = 1000;
    double f_rel_tol = 1e-12;  ///< relative change of f between iterations
    double grad_tol = 1e-10;   ///< infinity norm of the gradient
};

struct BfgsResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string message;
};

/// Quasi-Newton minimisation with a strong-Wolfe line search.
BfgsResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const BfgsOptions& options = {});

/// Wraps a value-only function with a central-difference gradient.
Objective with_numeric_gradient(std::function<double(const Eigen::VectorXd&)> f, double step = 1e-6);

using Residuals = std::function<Eigen::VectorXd(const Eigen::VectorXd& x)>;

struct LeastSquaresOptions {
    int max_iterations = 200;
    double rel_tol = 1e-12;
};

struct LeastSquaresResult {
    Eigen::VectorXd x;
    Eigen::MatrixXd covariance; ///< (J^T J)^-1 scaled by the residual variance
    double chi2 = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Levenberg-Marquardt with a forward-difference Jacobian.
LeastSquaresResult levenberg_marquardt(const Residuals& r, Eigen::VectorXd x0,
                                       const LeastSquaresOptions& options = {});

} // namespace qdent::optim
