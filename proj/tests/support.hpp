#pragma once

#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ensweight/core.hpp"

namespace testing {

inline ensweight::AccuracyMatrix reference_matrix() {
  Eigen::MatrixXd v(8, 5);
  v << 0.96, 0.92, 0.86, 0.99, 0.95,  //
      0.89, 0.78, 0.85, 0.90, 0.90,   //
      0.90, 0.74, 0.78, 0.89, 0.96,   //
      0.76, 0.86, 0.80, 0.98, 0.73,   //
      0.90, 0.92, 0.81, 0.71, 0.79,   //
      0.76, 0.73, 0.89, 0.76, 0.94,   //
      0.90, 0.85, 0.81, 0.71, 0.73,   //
      0.90, 0.72, 0.75, 0.74, 0.71;
  return ensweight::AccuracyMatrix(
      ensweight::ClassifierSet({"MLR", "J48", "JRIP", "REPTree", "MLP", "SVM", "GNB", "IBk"}),
      ensweight::ClassSet({"N1", "A1", "A2", "A3", "A4"}), v);
}

constexpr int kSvm = 5;

inline ensweight::AccuracyMatrix random_accuracy(std::mt19937_64& rng, int n, int m) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd v(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) v(i, j) = u(rng);
  }
  return ensweight::AccuracyMatrix(v);
}

inline std::string fixture(const std::string& name) {
  return std::string(ENSWEIGHT_FIXTURE_DIR) + "/" + name;
}

}  // namespace testing
