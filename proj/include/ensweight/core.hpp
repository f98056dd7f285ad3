#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ensweight {

// Error hierarchy. Every failure surfaced by the library derives from Error so
// callers (the CLI in particular) can map categories onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

enum class ClassKind { Normal, Abnormal };

/// Ordered, uniquely named classifiers. Order is the row order of every matrix.
class ClassifierSet {
 public:
  explicit ClassifierSet(std::vector<std::string> names);

  /// Names "C1".."Cn".
  static ClassifierSet Numbered(int n);

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(int i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<int> index_of(const std::string& name) const;

  bool operator==(const ClassifierSet&) const = default;

 private:
  std::vector<std::string> names_;
};

/// Ordered, uniquely named classes, each tagged normal or abnormal.
class ClassSet {
 public:
  /// All classes default to Normal when `kinds` is empty.
  explicit ClassSet(std::vector<std::string> names,
                    std::vector<ClassKind> kinds = {});

  /// Names "E1".."Em".
  static ClassSet Numbered(int m);

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(int j) const { return names_.at(j); }
  const std::vector<std::string>& names() const { return names_; }
  ClassKind kind(int j) const { return kinds_.at(j); }
  const std::vector<ClassKind>& kinds() const { return kinds_; }
  std::optional<int> index_of(const std::string& name) const;
  std::vector<int> indices_of(ClassKind kind) const;

  bool operator==(const ClassSet&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<ClassKind> kinds_;
};

/// Mean validation accuracy per (classifier, class) pair. Entries are checked
/// to be finite and inside [0, 1] on construction; nothing is clamped.
class AccuracyMatrix {
 public:
  AccuracyMatrix(ClassifierSet classifiers, ClassSet classes,
                 Eigen::MatrixXd values);

  /// Numbered classifier and class names.
  explicit AccuracyMatrix(Eigen::MatrixXd values);

  int n() const { return classifiers_.size(); }
  int m() const { return classes_.size(); }
  double operator()(int i, int j) const { return values_(i, j); }
  const Eigen::MatrixXd& values() const { return values_; }
  const ClassifierSet& classifiers() const { return classifiers_; }
  const ClassSet& classes() const { return classes_; }

  /// Rows restricted to `rows` (in the given order).
  AccuracyMatrix subset(std::span<const int> rows) const;

 private:
  ClassifierSet classifiers_;
  ClassSet classes_;
  Eigen::MatrixXd values_;
};

struct HyperParams {
  int K = 1;
  double lambda = 0.95;
  double alpha = 0.85;
  double epsilon = 1e-6;
  double big_m = 1e6;

  /// Throws DomainError unless 1 <= K <= n, lambda >= 0, alpha in [0,1],
  /// 0 < epsilon <= 1e-3 and big_m >= 1e3.
  void validate(int n) const;

  /// Coefficient of the squared-weight penalty, lambda * (1 - alpha) / 2.
  double l2_coefficient() const { return lambda * (1.0 - alpha) / 2.0; }
};

/// Per-classifier selection flags. Flags are stored as integers so that a
/// hand-edited weight file with a non-binary flag can still be loaded and
/// reported by the constraint validator.
class SelectionVector {
 public:
  SelectionVector() = default;
  explicit SelectionVector(std::vector<int> flags) : flags_(std::move(flags)) {}

  static SelectionVector FromIndices(int n, std::span<const int> selected);
  static SelectionVector All(int n);

  int size() const { return static_cast<int>(flags_.size()); }
  int operator[](int i) const { return flags_.at(i); }
  bool selected(int i) const { return flags_.at(i) == 1; }
  int count() const;
  bool is_binary() const;
  std::vector<int> indices() const;
  const std::vector<int>& flags() const { return flags_; }

  bool operator==(const SelectionVector&) const = default;

 private:
  std::vector<int> flags_;
};

/// n x m classifier-class weights, addressed (classifier row, class column).
struct WeightMatrix {
  Eigen::MatrixXd values;

  WeightMatrix() = default;
  explicit WeightMatrix(Eigen::MatrixXd v) : values(std::move(v)) {}
  static WeightMatrix Zero(int n, int m) {
    return WeightMatrix(Eigen::MatrixXd::Zero(n, m));
  }

  int n() const { return static_cast<int>(values.rows()); }
  int m() const { return static_cast<int>(values.cols()); }
  double operator()(int i, int j) const { return values(i, j); }
  double& operator()(int i, int j) { return values(i, j); }
  Eigen::VectorXd column_sums() const { return values.colwise().sum().transpose(); }
  double total() const { return values.sum(); }
};

struct PredictionRecord {
  std::string instance_id;
  int true_class = 0;
  /// n x m per-classifier class scores; hard votes are one-hot rows.
  Eigen::MatrixXd scores;
};

class PredictionSet {
 public:
  PredictionSet(ClassifierSet classifiers, ClassSet classes,
                std::vector<PredictionRecord> records);

  int n() const { return classifiers_.size(); }
  int m() const { return classes_.size(); }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const PredictionRecord& operator[](std::size_t k) const { return records_[k]; }
  const std::vector<PredictionRecord>& records() const { return records_; }
  const ClassifierSet& classifiers() const { return classifiers_; }
  const ClassSet& classes() const { return classes_; }

 private:
  ClassifierSet classifiers_;
  ClassSet classes_;
  std::vector<PredictionRecord> records_;
};

class ClassDistribution {
 public:
  explicit ClassDistribution(std::vector<std::int64_t> counts);

  int size() const { return static_cast<int>(counts_.size()); }
  std::int64_t operator[](int j) const { return counts_.at(j); }
  const std::vector<std::int64_t>& counts() const { return counts_; }
  std::int64_t total() const { return total_; }

  /// Counts of each label in 0..m-1.
  static ClassDistribution FromLabels(std::span<const int> labels, int m);

 private:
  std::vector<std::int64_t> counts_;
  std::int64_t total_ = 0;
};

/// Decomposition of the ensemble objective:
/// total = accuracy_term - lambda * (alpha * l1_term + (1 - alpha) / 2 * l2_term).
struct ObjectiveBreakdown {
  double accuracy_term = 0.0;
  double l1_term = 0.0;
  double l2_term = 0.0;
  double total = 0.0;
};

ObjectiveBreakdown objective_value(const AccuracyMatrix& V,
                                   const WeightMatrix& W,
                                   const HyperParams& params);

/// Majority count over minority count. Throws DomainError on any zero count.
double imbalance_ratio(const ClassDistribution& d);

}  // namespace ensweight
