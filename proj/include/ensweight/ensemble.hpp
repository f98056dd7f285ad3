#pragma once

#include <vector>

#include <Eigen/Core>

#include "ensweight/core.hpp"
#include "ensweight/metrics.hpp"

namespace ensweight {

struct EnsembleOutput {
  Eigen::VectorXd scores;
  int predicted = 0;
  /// Several classes shared the top score; the lowest index was chosen.
  bool tie = false;
};

/// s_j = sum_i w_ij * p_i(j), summed in classifier order.
Eigen::VectorXd class_scores(const WeightMatrix& W, const Eigen::MatrixXd& scores);

/// Weighted vote over an n x m block of per-classifier class scores. Hard
/// votes are one-hot rows. Throws ShapeError on a shape mismatch and
/// DomainError on negative scores.
EnsembleOutput predict(const WeightMatrix& W, const Eigen::MatrixXd& scores);

std::vector<EnsembleOutput> predict_all(const WeightMatrix& W, const PredictionSet& preds,
                                        int workers = 1);

/// Predicts every instance and computes the full metric set, including
/// one-vs-rest macro AUPRC on the ensemble scores.
MetricsReport evaluate(const WeightMatrix& W, const PredictionSet& preds, int workers = 1);

}  // namespace ensweight
