#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace ensweight::qp {

/// Separable concave quadratic program in canonical "maximize" form:
///
///   maximize    linear . w - sum_k quadratic[k] * w[k]^2
///   subject to  eq_matrix   * w == eq_rhs
///               ineq_matrix * w >= ineq_rhs
///               w >= 0
///
/// Row labels are optional; when present they name constraints in
/// infeasibility certificates.
struct QpProblem {
  Eigen::VectorXd quadratic;
  Eigen::VectorXd linear;
  Eigen::MatrixXd eq_matrix;
  Eigen::VectorXd eq_rhs;
  Eigen::MatrixXd ineq_matrix;
  Eigen::VectorXd ineq_rhs;
  std::vector<std::string> eq_labels;
  std::vector<std::string> ineq_labels;

  /// Empty problem over `size` variables with no constraints.
  static QpProblem Unconstrained(int size);

  int size() const { return static_cast<int>(linear.size()); }
  int num_eq() const { return static_cast<int>(eq_rhs.size()); }
  int num_ineq() const { return static_cast<int>(ineq_rhs.size()); }

  void add_eq(const Eigen::VectorXd& row, double rhs, std::string label = {});
  void add_ineq(const Eigen::VectorXd& row, double rhs, std::string label = {});

  double objective(const Eigen::VectorXd& w) const;

  /// Largest violation of any constraint (equalities, inequalities, bounds).
  double max_violation(const Eigen::VectorXd& w) const;

  /// Throws ShapeError on inconsistent dimensions and DomainError on
  /// non-finite data or a negative quadratic coefficient (non-convex).
  void validate() const;
};

enum class QpStatus { Optimal, Infeasible, MaxIterations };

const char* to_string(QpStatus status);

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;

  double max() const;
};

struct QpSolution {
  Eigen::VectorXd w;
  double objective = 0.0;
  QpStatus status = QpStatus::MaxIterations;
  KktResiduals kkt;
  /// Multipliers satisfying
  ///   2*quadratic.*w - linear = eq^T eq_duals + ineq^T ineq_duals + bound_duals
  /// with ineq_duals >= 0 and bound_duals >= 0 at an optimum.
  Eigen::VectorXd eq_duals;
  Eigen::VectorXd ineq_duals;
  Eigen::VectorXd bound_duals;
  int iterations = 0;
  /// Labels (or "eq[k]" / "ineq[k]") of constraints the feasibility phase
  /// could not satisfy. Only set when status is Infeasible.
  std::vector<std::string> certificate;
};

struct QpOptions {
  double tol = 1e-8;
  int max_iterations = 200;
  /// Try an active-set polish of the interior-point solution.
  bool polish = true;
};

/// Primal-dual interior point (Mehrotra predictor-corrector) on the problem in
/// slack form, preceded by a phase-1 feasibility LP and followed by an
/// active-set polish that solves the KKT system on the identified active set.
QpSolution solve_qp(const QpProblem& problem, const QpOptions& options);
QpSolution solve_qp(const QpProblem& problem, double tol = 1e-8);

/// Recomputes KKT residuals of (w, duals) against the problem from scratch.
KktResiduals kkt_residuals(const QpProblem& problem, const Eigen::VectorXd& w,
                           const Eigen::VectorXd& eq_duals,
                           const Eigen::VectorXd& ineq_duals,
                           const Eigen::VectorXd& bound_duals);

/// Exhaustive grid search used to cross-check solve_qp.
///
/// Every variable ranges over {0, step, 2*step, ...} up to `upper`.
/// Equality rows are solved for one dependent variable each where the row
/// structure allows it, so equalities hold exactly; every other constraint is
/// accepted within a tolerance of `step`. Variables that are linked only
/// through inequality rows spanning several equality blocks are searched block
/// by block; if the combined block optima violate such a row, the search falls
/// back to a joint enumeration.
///
/// Throws DomainError when the enumeration would exceed `max_points` grid
/// points.
QpSolution grid_oracle(const QpProblem& problem, double step, double upper = 1.0,
                       double max_points = 5e7);

}  // namespace ensweight::qp
