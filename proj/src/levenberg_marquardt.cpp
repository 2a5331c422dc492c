#include "hopfcal/levenberg_marquardt.hpp"

#include <cmath>
#include <limits>

#include "hopfcal/errors.hpp"

namespace hopfcal {

namespace {

bool finite(const LmEvaluation& e) { return e.residuals.allFinite() && e.jacobian.allFinite(); }

}  // namespace

LmResult levenberg_marquardt(const LmProblem& problem, Eigen::VectorXd start, const LmOptions& opts) {
  auto current = problem(start);
  if (!current || !finite(*current)) throw NumericError("levenberg_marquardt: model not finite at the starting point");
  if (current->jacobian.rows() != current->residuals.size() || current->jacobian.cols() != start.size())
    throw NumericError("levenberg_marquardt: Jacobian has the wrong shape");

  LmResult out;
  out.parameters = std::move(start);
  double cost = current->residuals.squaredNorm();
  double lambda = opts.initial_damping;

  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    out.iterations = iter;
    const Eigen::MatrixXd& J = current->jacobian;
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd grad = J.transpose() * current->residuals;
    Eigen::VectorXd scale = JtJ.diagonal();
    for (Eigen::Index i = 0; i < scale.size(); ++i)
      if (!(scale[i] > 0.0)) scale[i] = 1.0;

    bool accepted = false;
    while (lambda <= opts.max_damping) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal() += lambda * scale;
      const Eigen::VectorXd step = A.ldlt().solve(-grad);
      if (!step.allFinite()) {
        lambda *= opts.damping_increase;
        continue;
      }
      const Eigen::VectorXd trial = out.parameters + step;
      auto eval = problem(trial);
      const double trial_cost = (eval && finite(*eval)) ? eval->residuals.squaredNorm()
                                                         : std::numeric_limits<double>::infinity();
      if (trial_cost <= cost) {
        const double rel = step.norm() / std::max(out.parameters.norm(), 1e-300);
        out.parameters = trial;
        current = std::move(eval);
        cost = trial_cost;
        lambda /= opts.damping_decrease;
        accepted = true;
        if (rel < opts.relative_step_tolerance) {
          out.converged = true;
          out.message = "relative parameter change below tolerance";
        }
        break;
      }
      lambda *= opts.damping_increase;
    }
    if (out.converged) break;
    if (!accepted) {
      // No downhill step at any damping: the cost is at a minimum to working precision.
      out.converged = true;
      out.message = "no further decrease at maximum damping";
      break;
    }
  }
  if (!out.converged && out.message.empty()) out.message = "iteration limit reached";
  out.jacobian = current->jacobian;
  out.residuals = current->residuals;
  out.cost = cost;
  return out;
}

Eigen::MatrixXd lm_covariance(const Eigen::MatrixXd& jacobian) {
  const Eigen::MatrixXd JtJ = jacobian.transpose() * jacobian;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(JtJ);
  if (lu.isInvertible()) return lu.inverse();
  return JtJ.completeOrthogonalDecomposition().pseudoInverse();
}

}  // namespace hopfcal
