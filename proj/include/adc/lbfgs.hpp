#pragma once

#include <Eigen/Core>

#include <deque>
#include <functional>
#include <string>
#include <vector>

namespace adc {

struct LbfgsOptions {
    int memory = 10;
    int max_iterations = 500;
    /// Stop when ||grad||_inf <= rtol * max(1, ||grad_0||_inf).
    double rtol = 1e-6;
    int max_halvings = 50;
    double armijo = 1e-4;
};

struct LbfgsReport {
    Eigen::VectorXd x;
    double value = 0.0;
    std::vector<double> value_history;          ///< f at x_0 and every accepted iterate
    std::vector<double> gradient_norm_history;  ///< ||grad||_inf, same indexing
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    std::string message;
};

/// Value-and-gradient callback: returns f(x) and writes grad f(x).
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

/// Optional hook called after every accepted iterate; returning false stops the run.
using IterationHook = std::function<bool(int iteration, const Eigen::VectorXd& x, double value)>;

/// Limited-memory BFGS with Armijo backtracking (step halving).
///
/// Curvature pairs with s'y <= 0 are skipped. If backtracking fails with a
/// quasi-Newton direction the memory is cleared and steepest descent is tried
/// once before giving up.
LbfgsReport minimize_lbfgs(const Objective& objective, Eigen::VectorXd x0, const LbfgsOptions& options,
                           const IterationHook& hook = {});

} // namespace adc
