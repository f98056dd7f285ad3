#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ensweight/core.hpp"
#include "ensweight/qp.hpp"

namespace ensweight {

/// Diagnostics for one evaluated classifier subset.
struct SubsetResult {
  std::vector<int> members;
  qp::QpStatus status = qp::QpStatus::Infeasible;
  /// Total ensemble objective; NaN unless status is Optimal.
  double objective = 0.0;
};

struct MipSolution {
  SelectionVector selection;
  WeightMatrix weights;
  ObjectiveBreakdown objective;
  std::vector<SubsetResult> subset_rank;
};

/// Thrown when no classifier subset admits weights satisfying every
/// constraint, e.g. a single classifier or identical accuracies per class.
class AllSubsetsInfeasible : public InfeasibleError {
 public:
  AllSubsetsInfeasible(std::string what, std::vector<SubsetResult> subsets)
      : InfeasibleError(std::move(what)), subsets_(std::move(subsets)) {}
  const std::vector<SubsetResult>& subsets() const { return subsets_; }

 private:
  std::vector<SubsetResult> subsets_;
};

enum class SearchMethod {
  /// Solve the weight QP for every C(n, K) subset.
  Enumerate,
  /// Best-first branch and bound on the selection, bounded by the QP with
  /// the selection flags relaxed to [0, 1].
  BranchAndBound,
};

struct SolveOptions {
  SearchMethod method = SearchMethod::Enumerate;
  /// 0 uses the available hardware parallelism.
  int workers = 1;
  double tol = 1e-8;
};

/// Lexicographic enumeration of the K-element subsets of {0, ..., n-1}.
class SubsetEnumerator {
 public:
  SubsetEnumerator(int n, int K);

  /// Current subset, or std::nullopt once exhausted.
  const std::optional<std::vector<int>>& current() const { return current_; }
  void advance();

  static std::uint64_t count(int n, int K);

 private:
  int n_;
  std::optional<std::vector<int>> current_;
};

/// All C(n, K) selections in lexicographic order. Requires 0 < K <= n <= 30.
std::vector<SelectionVector> enumerate_subsets(int n, int K);

/// Weight QP for a fixed selection. Variables are the weights of the selected
/// classifiers, laid out row-major (selected position, class). The linear
/// coefficients are v/m only: the L1 penalty is the constant lambda*alpha*m
/// once every class column sums to one, so it does not shape the optimum.
qp::QpProblem build_subset_qp(const AccuracyMatrix& V, const HyperParams& params,
                              std::span<const int> members);

/// Scatters a subset QP solution into a full n x m weight matrix.
WeightMatrix expand_subset_weights(const AccuracyMatrix& V,
                                   std::span<const int> members,
                                   const Eigen::VectorXd& w);

/// Selects exactly K classifiers and their per-class weights maximizing the
/// elastic-net regularized ensemble accuracy. Throws AllSubsetsInfeasible if
/// no subset is feasible.
MipSolution solve_weighting(const AccuracyMatrix& V, const HyperParams& params,
                            const SolveOptions& options = {});

struct ConstraintCheck {
  int id = 0;  // 2..9
  std::string name;
  bool satisfied = true;
  double worst_violation = 0.0;
  std::string location;
};

struct ConstraintReport {
  std::vector<ConstraintCheck> checks;
  double tolerance = 0.0;

  bool conformant() const;
  const ConstraintCheck& check(int id) const;
};

/// Literal check of the eight constraint families, including the big-M form
/// of the selected-classifier floor. Never throws on violations.
ConstraintReport validate_constraints(const AccuracyMatrix& V, const WeightMatrix& W,
                                      const SelectionVector& X,
                                      const HyperParams& params, double tol);

using TuneScore = std::function<double(const MipSolution&, const HyperParams&)>;

struct TuneResult {
  double lambda = 0.0;
  double alpha = 0.0;
  double score = 0.0;
  MipSolution solution;
  int evaluations = 0;
};

/// Coordinate-wise hill climb over (lambda, alpha): for lambda then alpha,
/// step in the + direction while the score strictly improves, otherwise try
/// the - direction the same way. Lambda stays >= 0 and alpha in [0, 1].
TuneResult tune_hyperparams(const AccuracyMatrix& V, const HyperParams& start,
                            double lambda_step, double alpha_step,
                            const TuneScore& score, const SolveOptions& options = {},
                            int max_moves = 1000);

}  // namespace ensweight
