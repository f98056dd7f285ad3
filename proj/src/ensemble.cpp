#include "ensweight/ensemble.hpp"

#include <cmath>

#include "parallel.hpp"

namespace ensweight {

namespace {

// Scores this close to the maximum, relative to its magnitude, count as tied.
constexpr double kTieTolerance = 1e-12;

}  // namespace

Eigen::VectorXd class_scores(const WeightMatrix& W, const Eigen::MatrixXd& scores) {
  if (scores.rows() != W.n() || scores.cols() != W.m()) {
    throw ShapeError("score block does not match the weight matrix shape");
  }
  Eigen::VectorXd s = Eigen::VectorXd::Zero(W.m());
  for (int j = 0; j < W.m(); ++j) {
    double acc = 0.0;
    for (int i = 0; i < W.n(); ++i) acc += W(i, j) * scores(i, j);
    s[j] = acc;
  }
  return s;
}

EnsembleOutput predict(const WeightMatrix& W, const Eigen::MatrixXd& scores) {
  if (scores.size() > 0 && scores.minCoeff() < 0.0) {
    throw DomainError("classifier scores must be non-negative");
  }
  EnsembleOutput out;
  out.scores = class_scores(W, scores);
  const double top = out.scores.maxCoeff();
  const double slack = kTieTolerance * std::abs(top);
  int winners = 0;
  for (int j = 0; j < W.m(); ++j) {
    if (out.scores[j] >= top - slack) {
      if (winners == 0) out.predicted = j;
      ++winners;
    }
  }
  out.tie = winners > 1;
  return out;
}

std::vector<EnsembleOutput> predict_all(const WeightMatrix& W, const PredictionSet& preds,
                                        int workers) {
  if (W.n() != preds.n() || W.m() != preds.m()) {
    throw ShapeError("weight matrix does not match the prediction set shape");
  }
  std::vector<EnsembleOutput> out(preds.size());
  detail::parallel_for(preds.size(), detail::resolve_workers(workers, preds.size()),
                       [&](std::size_t k) { out[k] = predict(W, preds[k].scores); });
  return out;
}

MetricsReport evaluate(const WeightMatrix& W, const PredictionSet& preds, int workers) {
  if (preds.empty()) throw DomainError("cannot evaluate an empty prediction set");
  const std::vector<EnsembleOutput> outputs = predict_all(W, preds, workers);
  const int m = preds.m();

  ConfusionMatrix cm(m);
  Eigen::MatrixXd scores(static_cast<Eigen::Index>(outputs.size()), m);
  std::vector<int> truth(outputs.size());
  MetricsReport report;
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    truth[k] = preds[k].true_class;
    cm.add(truth[k], outputs[k].predicted);
    scores.row(static_cast<Eigen::Index>(k)) = outputs[k].scores.transpose();
    if (outputs[k].tie) ++report.ties;
  }
  report.instances = static_cast<std::int64_t>(outputs.size());

  const PrfResult prf = macro_prf(cm);
  report.balanced_accuracy = balanced_accuracy(cm);
  report.macro_precision = prf.precision;
  report.macro_recall = prf.recall;
  report.macro_f1 = prf.f1;

  const AuprcResult pr = macro_auprc(scores, truth);
  report.macro_auprc = pr.macro;
  for (int j = 0; j < m; ++j) {
    ClassReport c;
    c.name = preds.classes().name(j);
    c.scores = prf.per_class[static_cast<std::size_t>(j)];
    c.auprc = pr.per_class[static_cast<std::size_t>(j)];
    if (c.scores.precision_undefined) {
      report.warnings.push_back("class '" + c.name +
                                "' was never predicted; its precision is reported as 0");
    }
    report.per_class.push_back(std::move(c));
  }
  for (int j : pr.skipped_classes) {
    report.warnings.push_back("class '" + preds.classes().name(j) +
                              "' is absent from the truth; skipped in macro AUPRC");
  }
  if (report.ties > 0) {
    report.warnings.push_back(std::to_string(report.ties) +
                              " instance(s) tied between classes; lowest class index chosen");
  }
  return report;
}

}  // namespace ensweight
