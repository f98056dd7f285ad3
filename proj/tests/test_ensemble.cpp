#include <doctest.h>

#include <random>
#include <vector>

#include "ensweight/ensemble.hpp"

using namespace ensweight;
using Eigen::MatrixXd;

namespace {

MatrixXd random_scores(std::mt19937_64& rng, int n, int m) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MatrixXd s(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) s(i, j) = u(rng);
    s.row(i) /= s.row(i).sum();
  }
  return s;
}

WeightMatrix random_weights(std::mt19937_64& rng, int n, int m) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  WeightMatrix W = WeightMatrix::Zero(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) W(i, j) = u(rng);
  }
  return W;
}

PredictionSet random_set(std::mt19937_64& rng, int n, int m, int size) {
  std::uniform_int_distribution<int> cls(0, m - 1);
  std::vector<PredictionRecord> records;
  for (int k = 0; k < size; ++k) {
    records.push_back({"i" + std::to_string(k), k < m ? k : cls(rng), random_scores(rng, n, m)});
  }
  return PredictionSet(ClassifierSet::Numbered(n), ClassSet::Numbered(m), std::move(records));
}

}  // namespace

TEST_CASE("a single classifier with unit weights predicts its own argmax") {
  const WeightMatrix W(MatrixXd::Ones(1, 3));
  const auto out = predict(W, (MatrixXd(1, 3) << 0.2, 0.5, 0.3).finished());
  CHECK(out.predicted == 1);
  CHECK_FALSE(out.tie);
}

TEST_CASE("the heavier hard vote wins") {
  WeightMatrix W((MatrixXd(2, 2) << 0.7, 0.7, 0.3, 0.3).finished());
  const MatrixXd votes = (MatrixXd(2, 2) << 0, 1, 1, 0).finished();
  const auto out = predict(W, votes);
  CHECK(out.predicted == 1);
  CHECK(out.scores[0] == doctest::Approx(0.3));
  CHECK(out.scores[1] == doctest::Approx(0.7));
}

TEST_CASE("ensemble scores equal a direct weighted sum") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const WeightMatrix W = random_weights(rng, 3, 3);
    const MatrixXd p = random_scores(rng, 3, 3);
    const auto out = predict(W, p);
    double best = -1.0;
    int arg = -1;
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int i = 0; i < 3; ++i) s += W(i, j) * p(i, j);
      CHECK(out.scores[j] == doctest::Approx(s).epsilon(1e-14));
      if (s > best) {
        best = s;
        arg = j;
      }
    }
    CHECK(out.predicted == arg);
  }
}

TEST_CASE("ties go to the lowest class index and are flagged") {
  const WeightMatrix W(MatrixXd::Ones(2, 3));
  const auto zero = predict(W, MatrixXd::Zero(2, 3));
  CHECK(zero.tie);
  CHECK(zero.predicted == 0);
  const auto pair = predict(W, (MatrixXd(2, 3) << 0.1, 0.4, 0.4, 0.1, 0.1, 0.1).finished());
  CHECK(pair.tie);
  CHECK(pair.predicted == 1);
}

TEST_CASE("prediction input validation") {
  const WeightMatrix W(MatrixXd::Ones(2, 2));
  CHECK_THROWS_AS(predict(W, MatrixXd::Ones(3, 2)), ShapeError);
  CHECK_THROWS_AS(predict(W, (MatrixXd(2, 2) << 0.5, -0.1, 0.2, 0.3).finished()),
                  DomainError);
}

TEST_CASE("scaling the weights changes no prediction or tie flag") {
  std::mt19937_64 rng(21);
  const PredictionSet preds = random_set(rng, 4, 3, 200);
  const WeightMatrix W = random_weights(rng, 4, 3);
  WeightMatrix scaled = W;
  scaled.values *= 3.7;
  const auto a = predict_all(W, preds);
  const auto b = predict_all(scaled, preds);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].predicted == b[k].predicted);
    CHECK(a[k].tie == b[k].tie);
  }
}

TEST_CASE("a zero-weight classifier can be removed without effect") {
  std::mt19937_64 rng(22);
  const PredictionSet preds = random_set(rng, 3, 4, 150);
  WeightMatrix W = random_weights(rng, 3, 4);
  W.values.row(1).setZero();

  std::vector<PredictionRecord> reduced;
  for (const auto& rec : preds.records()) {
    MatrixXd s(2, 4);
    s.row(0) = rec.scores.row(0);
    s.row(1) = rec.scores.row(2);
    reduced.push_back({rec.instance_id, rec.true_class, s});
  }
  const PredictionSet smaller(ClassifierSet({"C1", "C3"}), preds.classes(), reduced);
  WeightMatrix W2 = WeightMatrix::Zero(2, 4);
  W2.values.row(0) = W.values.row(0);
  W2.values.row(1) = W.values.row(2);

  const auto a = evaluate(W, preds);
  const auto b = evaluate(W2, smaller);
  CHECK(a.balanced_accuracy == b.balanced_accuracy);
  CHECK(a.macro_f1 == b.macro_f1);
  CHECK(a.macro_auprc == b.macro_auprc);
}

TEST_CASE("evaluation with perfect predictions") {
  std::vector<PredictionRecord> records;
  for (int k = 0; k < 9; ++k) {
    MatrixXd s = MatrixXd::Zero(2, 3);
    s(0, k % 3) = 1.0;
    s(1, k % 3) = 0.6;
    s(1, (k + 1) % 3) = 0.4;
    records.push_back({"i" + std::to_string(k), k % 3, s});
  }
  const PredictionSet preds(ClassifierSet::Numbered(2), ClassSet::Numbered(3), records);
  const auto report = evaluate(WeightMatrix(MatrixXd::Constant(2, 3, 0.5)), preds);
  CHECK(report.balanced_accuracy == 1.0);
  CHECK(report.macro_f1 == 1.0);
  REQUIRE(report.macro_auprc.has_value());
  CHECK(*report.macro_auprc == 1.0);
  CHECK(report.instances == 9);
  CHECK(report.ties == 0);
}

TEST_CASE("evaluation of a two-class set with a known confusion matrix") {
  // One hard-voting classifier. Truth: 4 of class 0, 2 of class 1.
  // Predictions: 3 of the class-0 instances right, both class-1 right.
  const std::vector<int> truth = {0, 0, 0, 0, 1, 1};
  const std::vector<int> voted = {0, 0, 0, 1, 1, 1};
  std::vector<PredictionRecord> records;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    MatrixXd s = MatrixXd::Zero(1, 2);
    s(0, voted[k]) = 1.0;
    records.push_back({"i" + std::to_string(k), truth[k], s});
  }
  const PredictionSet preds(ClassifierSet::Numbered(1), ClassSet({"neg", "pos"}), records);
  const auto report = evaluate(WeightMatrix(MatrixXd::Ones(1, 2)), preds);
  // recall (3/4, 1), precision (1, 2/3)
  CHECK(report.balanced_accuracy == doctest::Approx(0.875));
  CHECK(report.macro_recall == doctest::Approx(0.875));
  CHECK(report.macro_precision == doctest::Approx(5.0 / 6.0));
  const double f1_neg = 2 * 0.75 / 1.75;
  const double f1_pos = 2 * (2.0 / 3.0) / (5.0 / 3.0);
  CHECK(report.macro_f1 == doctest::Approx((f1_neg + f1_pos) / 2.0));
  REQUIRE(report.per_class.size() == 2);
  CHECK(report.per_class[1].name == "pos");
  CHECK(report.per_class[0].scores.support == 4);
}

TEST_CASE("evaluation warns about ties and classes never predicted") {
  std::vector<PredictionRecord> records;
  for (int k = 0; k < 6; ++k) {
    MatrixXd s = MatrixXd::Zero(1, 3);
    s(0, 0) = 0.5;
    s(0, 1) = k == 0 ? 0.5 : 0.1;
    records.push_back({"i" + std::to_string(k), k % 3, s});
  }
  const PredictionSet preds(ClassifierSet::Numbered(1), ClassSet::Numbered(3), records);
  const auto report = evaluate(WeightMatrix(MatrixXd::Ones(1, 3)), preds);
  CHECK(report.ties == 1);
  REQUIRE(report.warnings.size() >= 2);
  CHECK(report.per_class[2].scores.precision_undefined);
}

TEST_CASE("evaluation does not depend on the worker count") {
  std::mt19937_64 rng(23);
  const PredictionSet preds = random_set(rng, 5, 4, 500);
  const WeightMatrix W = random_weights(rng, 5, 4);
  const auto a = evaluate(W, preds, 1);
  const auto b = evaluate(W, preds, 6);
  CHECK(a.balanced_accuracy == b.balanced_accuracy);
  CHECK(a.macro_precision == b.macro_precision);
  CHECK(a.macro_auprc == b.macro_auprc);
  CHECK(a.ties == b.ties);
}
