#pragma once

#include <Eigen/Dense>
#include <functional>

namespace cbfmt::opt {

// returns f(x) and writes the gradient
using ValueGrad = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;
// writes c(x); fills the Jacobian when J is non-null
using ConstraintFn = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd*)>;

struct MinimizeOptions {
    int max_iter = 3000;
    double gtol = 1e-9;
    double ftol = 1e-15;  // relative decrease considered stalled
};

struct MinimizeResult {
    Eigen::VectorXd x;
    double f = 0.0;
    double max_violation = 0.0;
    int iterations = 0;
    bool converged = false;
};

MinimizeResult minimize_bfgs(const ValueGrad& fun, Eigen::VectorXd x0, const MinimizeOptions& opts = {});

struct ConstrainedOptions {
    MinimizeOptions inner;
    int max_outer = 40;
    double feas_tol = 1e-11;
    double rho0 = 10.0;
    double rho_max = 1e10;
    int polish_steps = 30;
};

// min f(x) s.t. c(x) = 0, augmented Lagrangian with BFGS inner solves and a
// final Gauss-Newton projection onto c(x) = 0
MinimizeResult minimize_augmented_lagrangian(const ValueGrad& fun, const ConstraintFn& cons,
                                             Eigen::VectorXd x0, const ConstrainedOptions& opts = {});

// forward differences, for objectives without an analytic gradient
ValueGrad with_forward_differences(std::function<double(const Eigen::VectorXd&)> f, double h = 1e-6);

} // namespace cbfmt::opt
