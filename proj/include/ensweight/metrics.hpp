#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ensweight/core.hpp"

namespace ensweight {

/// m x m counts; entry (t, p) counts instances of true class t predicted as p.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int m);
  ConfusionMatrix(int m, std::vector<std::int64_t> row_major_counts);

  static ConfusionMatrix FromLabels(std::span<const int> truth,
                                    std::span<const int> predicted, int m);

  int size() const { return m_; }
  std::int64_t operator()(int t, int p) const { return counts_[index(t, p)]; }
  void add(int t, int p, std::int64_t count = 1);

  std::int64_t total() const;
  std::int64_t row_sum(int t) const;
  std::int64_t col_sum(int p) const;

 private:
  std::size_t index(int t, int p) const;

  int m_;
  std::vector<std::int64_t> counts_;
};

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;
  /// True when no instance was predicted as this class, so precision was
  /// set to zero by convention.
  bool precision_undefined = false;
};

struct PrfResult {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<ClassScores> per_class;
};

/// Mean per-class recall. Throws DomainError if a true class has no instances.
double balanced_accuracy(const ConfusionMatrix& cm);

/// Macro-averaged precision, recall and F1. Throws DomainError if a true
/// class has no instances.
PrfResult macro_prf(const ConfusionMatrix& cm);

/// Area under the precision-recall curve for one binary problem.
///
/// Thresholds are the distinct scores; an instance is predicted positive when
/// its score is at least the threshold, so tied scores enter together. The
/// curve starts at recall 0 with the precision of the highest threshold and is
/// integrated over recall with the trapezoidal rule. Throws DomainError when
/// there are no positives.
double auprc(std::span<const double> scores, std::span<const bool> positive);

struct AuprcResult {
  double macro = 0.0;
  /// Per class; empty for classes absent from the truth.
  std::vector<std::optional<double>> per_class;
  std::vector<int> skipped_classes;
};

/// One-vs-rest AUPRC of each column of `scores` (instances x classes),
/// averaged over the classes present in `truth`.
AuprcResult macro_auprc(const Eigen::MatrixXd& scores, std::span<const int> truth);

/// Same, on the weighted ensemble scores sum_i w_ij p_i(j).
AuprcResult macro_auprc(const PredictionSet& preds, const WeightMatrix& W);

/// 100 * (ours - other) / other. Throws DomainError unless other > 0.
double improvement_pct(double ours, double other);

struct ClassReport {
  std::string name;
  ClassScores scores;
  std::optional<double> auprc;
};

struct MetricsReport {
  double balanced_accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::optional<double> macro_auprc;
  std::vector<ClassReport> per_class;
  std::int64_t instances = 0;
  std::int64_t ties = 0;
  std::vector<std::string> warnings;
};

}  // namespace ensweight
