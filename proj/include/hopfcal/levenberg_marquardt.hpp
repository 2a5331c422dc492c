#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>

namespace hopfcal {

struct LmOptions {
  double initial_damping = 1e-3;
  double damping_increase = 10.0;
  double damping_decrease = 10.0;
  double max_damping = 1e16;
  double relative_step_tolerance = 1e-8;
  int max_iterations = 200;
};

// Weighted residuals r(p) and their Jacobian dr/dp at the same point.
// Returning nullopt marks p as infeasible; the step is then rejected.
struct LmEvaluation {
  Eigen::VectorXd residuals;
  Eigen::MatrixXd jacobian;
};
using LmProblem = std::function<std::optional<LmEvaluation>(const Eigen::VectorXd&)>;

struct LmResult {
  Eigen::VectorXd parameters;
  Eigen::MatrixXd jacobian;  // at the final parameters
  Eigen::VectorXd residuals;
  double cost = 0.0;  // sum of squared residuals
  int iterations = 0;
  bool converged = false;
  std::string message;
};

// Marquardt-scaled damping: (J^T J + lambda diag(J^T J)) dp = -J^T r.
LmResult levenberg_marquardt(const LmProblem& problem, Eigen::VectorXd start, const LmOptions& opts = {});

// (J^T J)^{-1}, via a pseudo-inverse when J^T J is singular.
Eigen::MatrixXd lm_covariance(const Eigen::MatrixXd& jacobian);

}  // namespace hopfcal
