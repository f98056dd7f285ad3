#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ensweight/core.hpp"
#include "ensweight/metrics.hpp"
#include "ensweight/optimizer.hpp"

namespace ensweight::io {

// All tabular files are comma separated with a header row. Blank lines and
// lines starting with '#' are ignored on read, which is where writers put the
// optional timestamp line.

/// Header `classifier,<class1>,...,<classm>`, then one row per classifier.
AccuracyMatrix parse_accuracy_matrix(std::istream& in, const std::string& source = "<input>");
AccuracyMatrix read_accuracy_matrix(const std::string& path);
void write_accuracy_matrix(std::ostream& out, const AccuracyMatrix& V);

struct WeightFile {
  ClassifierSet classifiers;
  ClassSet classes;
  WeightMatrix weights;
  SelectionVector selection;
};

/// Same layout as the accuracy matrix plus a trailing `selected` column
/// holding 1 or 0. Values are written with 17 significant digits so a
/// round trip is exact.
void write_weight_matrix(std::ostream& out, const ClassifierSet& classifiers,
                         const ClassSet& classes, const WeightMatrix& W,
                         const SelectionVector& X);
WeightFile parse_weight_matrix(std::istream& in, const std::string& source = "<input>");
WeightFile read_weight_matrix(const std::string& path);

/// Header `instance_id,true_class,` followed either by n*m soft score columns
/// named `<classifier>:<class>` or by one column per classifier holding a
/// predicted class name, which is expanded to a one-hot row. When `classes` is
/// given, class names are resolved against it; otherwise classes are taken in
/// order of first appearance (header first, then values).
PredictionSet parse_predictions(std::istream& in, const std::string& source = "<input>",
                                const std::optional<ClassSet>& classes = std::nullopt);
PredictionSet read_predictions(const std::string& path,
                               const std::optional<ClassSet>& classes = std::nullopt);
void write_predictions(std::ostream& out, const PredictionSet& preds);

struct LabelFile {
  std::vector<std::string> instance_ids;
  std::vector<int> labels;
  ClassSet classes;
};

/// A header row with a `label` (or `true_class`) column and an optional
/// `instance_id` column. Without `classes`, class order is first appearance.
LabelFile parse_labels(std::istream& in, const std::string& source = "<input>",
                       const std::optional<ClassSet>& classes = std::nullopt);
LabelFile read_labels(const std::string& path,
                      const std::optional<ClassSet>& classes = std::nullopt);

/// `x` with 17 significant digits, enough to parse back to exactly `x`.
std::string format_double(double x);

// JSON renderings used by the command reports and the Python bindings.
std::string to_json(const MetricsReport& report, int indent = 2);
std::string to_json(const ConstraintReport& report, int indent = 2);

}  // namespace ensweight::io
