#include "ensweight/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace ensweight {

namespace {

void require_unique(const std::vector<std::string>& names, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& name : names) {
    if (name.empty()) {
      throw DomainError(std::string(what) + " names must be non-empty");
    }
    if (!seen.insert(name).second) {
      throw DomainError(std::string("duplicate ") + what + " name '" + name + "'");
    }
  }
}

std::optional<int> find_name(const std::vector<std::string>& names,
                             const std::string& name) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<int>(it - names.begin());
}

}  // namespace

ClassifierSet::ClassifierSet(std::vector<std::string> names)
    : names_(std::move(names)) {
  if (names_.empty()) throw DomainError("classifier set must not be empty");
  require_unique(names_, "classifier");
}

ClassifierSet ClassifierSet::Numbered(int n) {
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back("C" + std::to_string(i + 1));
  return ClassifierSet(std::move(names));
}

std::optional<int> ClassifierSet::index_of(const std::string& name) const {
  return find_name(names_, name);
}

ClassSet::ClassSet(std::vector<std::string> names, std::vector<ClassKind> kinds)
    : names_(std::move(names)), kinds_(std::move(kinds)) {
  if (names_.empty()) throw DomainError("class set must not be empty");
  require_unique(names_, "class");
  if (kinds_.empty()) kinds_.assign(names_.size(), ClassKind::Normal);
  if (kinds_.size() != names_.size()) {
    throw ShapeError("class kinds do not match class count");
  }
}

ClassSet ClassSet::Numbered(int m) {
  std::vector<std::string> names;
  for (int j = 0; j < m; ++j) names.push_back("E" + std::to_string(j + 1));
  return ClassSet(std::move(names));
}

std::optional<int> ClassSet::index_of(const std::string& name) const {
  return find_name(names_, name);
}

std::vector<int> ClassSet::indices_of(ClassKind kind) const {
  std::vector<int> out;
  for (int j = 0; j < size(); ++j) {
    if (kinds_[j] == kind) out.push_back(j);
  }
  return out;
}

AccuracyMatrix::AccuracyMatrix(ClassifierSet classifiers, ClassSet classes,
                               Eigen::MatrixXd values)
    : classifiers_(std::move(classifiers)),
      classes_(std::move(classes)),
      values_(std::move(values)) {
  if (values_.rows() != classifiers_.size() || values_.cols() != classes_.size()) {
    std::ostringstream os;
    os << "accuracy matrix is " << values_.rows() << "x" << values_.cols()
       << " but there are " << classifiers_.size() << " classifiers and "
       << classes_.size() << " classes";
    throw ShapeError(os.str());
  }
  for (int i = 0; i < n(); ++i) {
    for (int j = 0; j < m(); ++j) {
      const double v = values_(i, j);
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        std::ostringstream os;
        os << "accuracy for classifier '" << classifiers_.name(i) << "', class '"
           << classes_.name(j) << "' is " << v << ", outside [0, 1]";
        throw DomainError(os.str());
      }
    }
  }
}

AccuracyMatrix::AccuracyMatrix(Eigen::MatrixXd values)
    : AccuracyMatrix(ClassifierSet::Numbered(static_cast<int>(values.rows())),
                     ClassSet::Numbered(static_cast<int>(values.cols())),
                     values) {}

AccuracyMatrix AccuracyMatrix::subset(std::span<const int> rows) const {
  std::vector<std::string> names;
  Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), m());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    names.push_back(classifiers_.name(rows[r]));
    sub.row(static_cast<Eigen::Index>(r)) = values_.row(rows[r]);
  }
  return AccuracyMatrix(ClassifierSet(std::move(names)), classes_, std::move(sub));
}

void HyperParams::validate(int n) const {
  std::ostringstream os;
  if (K < 1 || K > n) {
    os << "ensemble size K=" << K << " must lie in [1, " << n << "]";
  } else if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    os << "lambda=" << lambda << " must be finite and >= 0";
  } else if (!(alpha >= 0.0 && alpha <= 1.0)) {
    os << "alpha=" << alpha << " must lie in [0, 1]";
  } else if (!(epsilon > 0.0 && epsilon <= 1e-3)) {
    os << "epsilon=" << epsilon << " must lie in (0, 1e-3]";
  } else if (!(big_m >= 1e3) || !std::isfinite(big_m)) {
    os << "big-M=" << big_m << " must be finite and >= 1e3";
  } else {
    return;
  }
  throw DomainError(os.str());
}

SelectionVector SelectionVector::FromIndices(int n, std::span<const int> selected) {
  std::vector<int> flags(static_cast<std::size_t>(n), 0);
  for (int i : selected) {
    if (i < 0 || i >= n) throw ShapeError("selected index out of range");
    flags[static_cast<std::size_t>(i)] = 1;
  }
  return SelectionVector(std::move(flags));
}

SelectionVector SelectionVector::All(int n) {
  return SelectionVector(std::vector<int>(static_cast<std::size_t>(n), 1));
}

int SelectionVector::count() const {
  return static_cast<int>(std::count(flags_.begin(), flags_.end(), 1));
}

bool SelectionVector::is_binary() const {
  return std::all_of(flags_.begin(), flags_.end(),
                     [](int f) { return f == 0 || f == 1; });
}

std::vector<int> SelectionVector::indices() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    if (flags_[static_cast<std::size_t>(i)] == 1) out.push_back(i);
  }
  return out;
}

PredictionSet::PredictionSet(ClassifierSet classifiers, ClassSet classes,
                             std::vector<PredictionRecord> records)
    : classifiers_(std::move(classifiers)),
      classes_(std::move(classes)),
      records_(std::move(records)) {
  for (const auto& rec : records_) {
    if (rec.true_class < 0 || rec.true_class >= m()) {
      throw DomainError("instance '" + rec.instance_id + "' has unknown true class");
    }
    if (rec.scores.rows() != n() || rec.scores.cols() != m()) {
      throw ShapeError("instance '" + rec.instance_id +
                       "' score block does not match classifier x class shape");
    }
    if (!rec.scores.allFinite()) {
      throw DomainError("instance '" + rec.instance_id + "' has non-finite scores");
    }
  }
}

ClassDistribution::ClassDistribution(std::vector<std::int64_t> counts)
    : counts_(std::move(counts)) {
  if (counts_.empty()) throw DomainError("class distribution must not be empty");
  for (auto c : counts_) {
    if (c < 0) throw DomainError("class counts must be non-negative");
  }
  total_ = std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
  if (total_ <= 0) throw DomainError("class distribution total must be positive");
}

ClassDistribution ClassDistribution::FromLabels(std::span<const int> labels, int m) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(m), 0);
  for (int label : labels) {
    if (label < 0 || label >= m) throw DomainError("label out of range");
    ++counts[static_cast<std::size_t>(label)];
  }
  return ClassDistribution(std::move(counts));
}

ObjectiveBreakdown objective_value(const AccuracyMatrix& V, const WeightMatrix& W,
                                   const HyperParams& params) {
  if (W.n() != V.n() || W.m() != V.m()) {
    throw ShapeError("weight matrix shape does not match accuracy matrix");
  }
  if (!W.values.allFinite()) throw DomainError("weight matrix has non-finite entries");

  ObjectiveBreakdown out;
  // Fixed row-major summation order keeps results bitwise reproducible.
  double weighted = 0.0;
  for (int i = 0; i < V.n(); ++i) {
    for (int j = 0; j < V.m(); ++j) {
      const double w = W(i, j);
      weighted += w * V(i, j);
      out.l1_term += w;
      out.l2_term += w * w;
    }
  }
  out.accuracy_term = weighted / V.m();
  out.total = out.accuracy_term -
              params.lambda * (params.alpha * out.l1_term +
                               (1.0 - params.alpha) / 2.0 * out.l2_term);
  return out;
}

double imbalance_ratio(const ClassDistribution& d) {
  const auto [lo, hi] = std::minmax_element(d.counts().begin(), d.counts().end());
  if (*lo == 0) throw DomainError("imbalance ratio undefined: a class has zero instances");
  return static_cast<double>(*hi) / static_cast<double>(*lo);
}

}  // namespace ensweight
