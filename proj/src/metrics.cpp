#include "ensweight/metrics.hpp"

#include <algorithm>
#include <memory>
#include <numeric>

#include "ensweight/ensemble.hpp"

namespace ensweight {

ConfusionMatrix::ConfusionMatrix(int m)
    : m_(m), counts_(static_cast<std::size_t>(m > 0 ? m * m : 0), 0) {
  if (m < 1) throw DomainError("confusion matrix needs at least one class");
}

ConfusionMatrix::ConfusionMatrix(int m, std::vector<std::int64_t> row_major_counts)
    : ConfusionMatrix(m) {
  if (row_major_counts.size() != counts_.size()) {
    throw ShapeError("confusion matrix needs m*m counts");
  }
  for (auto c : row_major_counts) {
    if (c < 0) throw DomainError("confusion matrix counts must be non-negative");
  }
  counts_ = std::move(row_major_counts);
}

ConfusionMatrix ConfusionMatrix::FromLabels(std::span<const int> truth,
                                            std::span<const int> predicted, int m) {
  if (truth.size() != predicted.size()) {
    throw ShapeError("truth and prediction label counts differ");
  }
  ConfusionMatrix cm(m);
  for (std::size_t k = 0; k < truth.size(); ++k) cm.add(truth[k], predicted[k]);
  return cm;
}

std::size_t ConfusionMatrix::index(int t, int p) const {
  if (t < 0 || t >= m_ || p < 0 || p >= m_) throw DomainError("class index out of range");
  return static_cast<std::size_t>(t) * static_cast<std::size_t>(m_) +
         static_cast<std::size_t>(p);
}

void ConfusionMatrix::add(int t, int p, std::int64_t count) {
  if (count < 0) throw DomainError("cannot add a negative count");
  counts_[index(t, p)] += count;
}

std::int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::row_sum(int t) const {
  std::int64_t s = 0;
  for (int p = 0; p < m_; ++p) s += (*this)(t, p);
  return s;
}

std::int64_t ConfusionMatrix::col_sum(int p) const {
  std::int64_t s = 0;
  for (int t = 0; t < m_; ++t) s += (*this)(t, p);
  return s;
}

PrfResult macro_prf(const ConfusionMatrix& cm) {
  const int m = cm.size();
  PrfResult out;
  out.per_class.resize(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    ClassScores& c = out.per_class[static_cast<std::size_t>(j)];
    c.support = cm.row_sum(j);
    if (c.support == 0) {
      throw DomainError("class " + std::to_string(j) +
                        " has no true instances; recall is undefined");
    }
    const auto tp = static_cast<double>(cm(j, j));
    const std::int64_t predicted = cm.col_sum(j);
    c.recall = tp / static_cast<double>(c.support);
    if (predicted == 0) {
      c.precision = 0.0;
      c.precision_undefined = true;
    } else {
      c.precision = tp / static_cast<double>(predicted);
    }
    c.f1 = c.precision + c.recall > 0.0
               ? 2.0 * c.precision * c.recall / (c.precision + c.recall)
               : 0.0;
    out.precision += c.precision;
    out.recall += c.recall;
    out.f1 += c.f1;
  }
  out.precision /= m;
  out.recall /= m;
  out.f1 /= m;
  return out;
}

double balanced_accuracy(const ConfusionMatrix& cm) {
  double s = 0.0;
  for (int j = 0; j < cm.size(); ++j) {
    const std::int64_t support = cm.row_sum(j);
    if (support == 0) {
      throw DomainError("class " + std::to_string(j) +
                        " has no true instances; recall is undefined");
    }
    s += static_cast<double>(cm(j, j)) / static_cast<double>(support);
  }
  return s / cm.size();
}

double auprc(std::span<const double> scores, std::span<const bool> positive) {
  if (scores.size() != positive.size()) throw ShapeError("scores and labels differ in length");
  const auto total_pos = std::count(positive.begin(), positive.end(), true);
  if (total_pos == 0) throw DomainError("AUPRC is undefined without positive instances");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double area = 0.0;
  double prev_recall = 0.0;
  double prev_precision = -1.0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double threshold = scores[order[k]];
    while (k < order.size() && scores[order[k]] == threshold) {
      positive[order[k]] ? ++tp : ++fp;
      ++k;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (prev_precision < 0.0) prev_precision = precision;
    area += (recall - prev_recall) * (precision + prev_precision) / 2.0;
    prev_recall = recall;
    prev_precision = precision;
  }
  return area;
}

AuprcResult macro_auprc(const Eigen::MatrixXd& scores, std::span<const int> truth) {
  if (static_cast<std::size_t>(scores.rows()) != truth.size()) {
    throw ShapeError("score rows and truth labels differ in count");
  }
  const int m = static_cast<int>(scores.cols());
  AuprcResult out;
  out.per_class.resize(static_cast<std::size_t>(m));
  std::vector<double> column(truth.size());
  std::unique_ptr<bool[]> positive(new bool[truth.size()]);
  double sum = 0.0;
  int used = 0;
  for (int j = 0; j < m; ++j) {
    bool any = false;
    for (std::size_t k = 0; k < truth.size(); ++k) {
      column[k] = scores(static_cast<Eigen::Index>(k), j);
      positive[k] = truth[k] == j;
      any = any || positive[k];
    }
    if (!any) {
      out.skipped_classes.push_back(j);
      continue;
    }
    const double a = auprc(column, std::span<const bool>(positive.get(), truth.size()));
    out.per_class[static_cast<std::size_t>(j)] = a;
    sum += a;
    ++used;
  }
  if (used == 0) throw DomainError("no class occurs in the truth labels");
  out.macro = sum / used;
  return out;
}

AuprcResult macro_auprc(const PredictionSet& preds, const WeightMatrix& W) {
  Eigen::MatrixXd scores(static_cast<Eigen::Index>(preds.size()), preds.m());
  std::vector<int> truth(preds.size());
  for (std::size_t k = 0; k < preds.size(); ++k) {
    scores.row(static_cast<Eigen::Index>(k)) = class_scores(W, preds[k].scores).transpose();
    truth[k] = preds[k].true_class;
  }
  return macro_auprc(scores, truth);
}

double improvement_pct(double ours, double other) {
  if (!(other > 0.0)) throw DomainError("improvement is undefined for a non-positive baseline");
  return 100.0 * (ours - other) / other;
}

}  // namespace ensweight
