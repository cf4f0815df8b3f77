#pragma once

#include <cstddef>
#include <functional>

#include <Eigen/Dense>

namespace embeval {

/// Returns f(x) and writes the gradient into `grad` (already sized).
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsOptions {
  std::size_t max_iterations = 500;
  double gradient_tolerance = 1e-5;  // on the l2 norm
  std::size_t history = 10;
};

struct OptimResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double gradient_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Full-batch L-BFGS with a backtracking Armijo line search. Deterministic:
/// no randomness, fixed evaluation order.
OptimResult minimize_lbfgs(const Objective& objective, Eigen::VectorXd x0,
                           const LbfgsOptions& options);

}  // namespace embeval
