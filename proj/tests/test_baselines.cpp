#include <doctest.h>

#include <bit>
#include <cmath>
#include <random>
#include <vector>

#include "ensweight/baselines.hpp"
#include "support.hpp"

using namespace ensweight;
using Eigen::MatrixXd;

namespace {

bool all_equal(const WeightMatrix& W, double value, double tol = 1e-15) {
  return (W.values.array() - value).abs().maxCoeff() <= tol;
}

void check_columns_sum_to_one(const WeightMatrix& W) {
  for (int j = 0; j < W.m(); ++j) CHECK(std::abs(W.column_sums()[j] - 1.0) <= 1e-12);
}

}  // namespace

TEST_CASE("uniform per classifier") {
  CHECK(all_equal(uw_pc(8, 5), 0.125));
  CHECK(all_equal(uw_pc(1, 3), 1.0));
  const auto W = uw_pc(4, 2);
  CHECK(W.n() == 4);
  CHECK(W.m() == 2);
  CHECK(all_equal(W, 0.25));
}

TEST_CASE("uniform per classifier and class") {
  CHECK(all_equal(uw_pcc(8, 5), 0.025));
  CHECK(all_equal(uw_pcc(1, 1), 1.0));
  CHECK(all_equal(uw_pcc(2, 2), 0.25));
  CHECK_THROWS_AS(uw_pcc(0, 2), DomainError);
  CHECK_THROWS_AS(uw_pc(2, 0), DomainError);
}

TEST_CASE("accuracy-weighted per classifier") {
  const auto W = wa_pc(AccuracyMatrix((MatrixXd(2, 2) << 1, 1, 0, 0).finished()));
  CHECK(W(0, 0) == 1.0);
  CHECK(W(0, 1) == 1.0);
  CHECK(W(1, 0) == 0.0);
  CHECK(W(1, 1) == 0.0);

  const auto V = testing::reference_matrix();
  const auto T = wa_pc(V);
  const double svm_mean = V.values().row(testing::kSvm).mean();
  double total = 0.0;
  for (int i = 0; i < V.n(); ++i) total += V.values().row(i).mean();
  CHECK(svm_mean == doctest::Approx(0.816).epsilon(1e-12));
  CHECK(total == doctest::Approx(6.686).epsilon(1e-12));
  for (int j = 0; j < V.m(); ++j) {
    CHECK(std::abs(T(testing::kSvm, j) - 0.122) <= 0.002);
    CHECK(T(testing::kSvm, j) == doctest::Approx(svm_mean / total).epsilon(1e-12));
  }
  check_columns_sum_to_one(T);

  MatrixXd same(3, 2);
  same << 0.4, 0.6, 0.4, 0.6, 0.4, 0.6;
  CHECK(all_equal(wa_pc(AccuracyMatrix(same)), 1.0 / 3.0, 1e-15));
  CHECK_THROWS_AS(wa_pc(AccuracyMatrix(MatrixXd::Zero(2, 2))), DomainError);
}

TEST_CASE("accuracy-weighted per classifier and class") {
  const auto V = testing::reference_matrix();
  const auto W = wa_pcc(V);
  const double expected[] = {0.0227, 0.0218, 0.0266, 0.0227, 0.0281};
  const double rounded[] = {0.02, 0.02, 0.03, 0.02, 0.03};
  for (int j = 0; j < 5; ++j) {
    CHECK(std::abs(W(testing::kSvm, j) - expected[j]) <= 1e-4);
    CHECK(std::round(W(testing::kSvm, j) * 100.0) / 100.0 == doctest::Approx(rounded[j]));
  }
  CHECK(std::abs(W.total() - 1.0) <= 1e-12);
  CHECK(all_equal(wa_pcc(AccuracyMatrix((MatrixXd(1, 1) << 1.0).finished())), 1.0));
  CHECK(all_equal(wa_pcc(AccuracyMatrix(MatrixXd::Constant(3, 4, 0.6))), 1.0 / 12.0,
                  1e-15));
  CHECK_THROWS_AS(wa_pcc(AccuracyMatrix(MatrixXd::Zero(2, 2))), DomainError);
}

TEST_CASE("per-class posterior weights") {
  const auto V = testing::reference_matrix();
  const auto W = bma_weights(V);
  const double expected[] = {0.022, 0.022, 0.027, 0.023, 0.028};
  for (int j = 0; j < 5; ++j) {
    const double column = V.values().col(j).sum();
    CHECK(W(testing::kSvm, j) ==
          doctest::Approx(V(testing::kSvm, j) / column / 5.0).epsilon(1e-12));
    CHECK(std::abs(W(testing::kSvm, j) - expected[j]) <= 5e-4);
  }
  CHECK(std::abs(W.total() - 1.0) <= 1e-12);
  CHECK(all_equal(bma_weights(AccuracyMatrix(MatrixXd::Constant(4, 2, 0.3))), 0.125,
                  1e-15));
  const auto two = bma_weights(AccuracyMatrix((MatrixXd(2, 1) << 1.0, 0.0).finished()));
  CHECK(two(0, 0) == 1.0);
  CHECK(two(1, 0) == 0.0);
  CHECK_THROWS_AS(bma_weights(AccuracyMatrix((MatrixXd(2, 2) << 1, 0, 1, 0).finished())),
                  DomainError);
}

TEST_CASE("mass conventions, non-negativity and scale invariance") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> scale(0.1, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 6;
    const int m = 1 + trial % 4;
    const AccuracyMatrix V = testing::random_accuracy(rng, n, m);
    check_columns_sum_to_one(uw_pc(n, m));
    check_columns_sum_to_one(wa_pc(V));
    DeParams de;
    de.max_generations = 20;
    check_columns_sum_to_one(de_weights(V, de));
    CHECK(std::abs(uw_pcc(n, m).total() - 1.0) <= 1e-12);
    CHECK(std::abs(wa_pcc(V).total() - 1.0) <= 1e-12);
    CHECK(std::abs(bma_weights(V).total() - 1.0) <= 1e-12);
    for (Scheme s : kAllSchemes) CHECK(run_scheme(s, V, de).values.minCoeff() >= 0.0);

    const AccuracyMatrix scaled(V.values() * scale(rng));
    CHECK((wa_pc(V).values - wa_pc(scaled).values).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((wa_pcc(V).values - wa_pcc(scaled).values).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((bma_weights(V).values - bma_weights(scaled).values).cwiseAbs().maxCoeff() <=
          1e-12);
  }
}

TEST_CASE("permuting classifiers permutes every scheme's rows") {
  std::mt19937_64 rng(3);
  const AccuracyMatrix V = testing::random_accuracy(rng, 5, 3);
  const std::vector<int> perm = {3, 0, 4, 2, 1};
  const AccuracyMatrix P = V.subset(perm);
  for (Scheme s : {Scheme::UwPc, Scheme::UwPcc, Scheme::WaPc, Scheme::WaPcc, Scheme::Bma}) {
    const auto a = run_scheme(s, V);
    const auto b = run_scheme(s, P);
    for (int r = 0; r < 5; ++r) {
      CHECK((a.values.row(perm[r]) - b.values.row(r)).cwiseAbs().maxCoeff() <= 1e-15);
    }
  }
  // The search is driven by the population state, so a permuted run follows
  // a different trajectory; both must still reach the same optimum.
  const auto a = differential_evolution(V, {});
  const auto b = differential_evolution(P, {});
  CHECK(a.fitness == doctest::Approx(b.fitness).epsilon(1e-6));
}

TEST_CASE("differential evolution examples") {
  const auto V = testing::reference_matrix();
  CHECK(weighted_accuracy(V, uw_pc(8, 5)) == doctest::Approx(0.8358).epsilon(0.0005));
  CHECK(std::abs(weighted_accuracy(V, uw_pc(8, 5)) - 33.43 / 40.0) <= 1e-12);

  const AccuracyMatrix extreme((MatrixXd(2, 2) << 1, 1, 0, 0).finished());
  DeParams params;
  params.rng_seed = 42;
  const auto r = differential_evolution(extreme, params);
  CHECK(std::abs(r.weights[0] - 1.0) <= 1e-3);
  CHECK(std::abs(r.weights[1]) <= 1e-3);

  const AccuracyMatrix one((MatrixXd(1, 3) << 0.2, 0.5, 0.9).finished());
  for (std::uint64_t seed : {1ull, 42ull, 999ull}) {
    params.rng_seed = seed;
    CHECK(all_equal(de_weights(one, params), 1.0));
  }
}

TEST_CASE("differential evolution is reproducible and monotone") {
  std::mt19937_64 rng(9);
  const AccuracyMatrix V = testing::random_accuracy(rng, 6, 4);
  const auto a = differential_evolution(V, {});
  const auto b = differential_evolution(V, {});
  CHECK(a.weights == b.weights);
  CHECK(a.fitness == b.fitness);
  CHECK(a.best_history == b.best_history);
  REQUIRE(a.best_history.size() == 201);
  for (std::size_t g = 1; g < a.best_history.size(); ++g) {
    CHECK(a.best_history[g] >= a.best_history[g - 1]);
  }
  CHECK(a.fitness == a.best_history.back());
  CHECK(std::abs(a.weights.sum() - 1.0) <= 1e-12);
  CHECK(a.weights.minCoeff() >= 0.0);

  const auto W = de_weights(V);
  for (int j = 1; j < V.m(); ++j) CHECK(W.values.col(j) == W.values.col(0));

  DeParams bad;
  bad.population_size = 3;
  CHECK_THROWS_AS(differential_evolution(V, bad), DomainError);
  bad = {};
  bad.differential_weight = 0.0;
  CHECK_THROWS_AS(differential_evolution(V, bad), DomainError);
  bad = {};
  bad.crossover_rate = 1.5;
  CHECK_THROWS_AS(differential_evolution(V, bad), DomainError);
}

TEST_CASE("simplex projection") {
  const Eigen::Vector3d inside(0.2, 0.3, 0.5);
  CHECK((project_to_simplex(inside) - inside).norm() <= 1e-15);
  const auto p = project_to_simplex(Eigen::Vector3d(2.0, 0.0, 0.0));
  CHECK(p == Eigen::Vector3d(1.0, 0.0, 0.0));
  const auto q = project_to_simplex(Eigen::Vector2d(0.5, 0.7));
  CHECK(q[0] == doctest::Approx(0.4));
  CHECK(q[1] == doctest::Approx(0.6));
}

TEST_CASE("scheme names round trip") {
  for (Scheme s : kAllSchemes) CHECK(parse_scheme(to_string(s)) == s);
  CHECK(to_string(Scheme::WaPcc) == "wa-pcc");
  CHECK_THROWS_AS(parse_scheme("mip"), ParseError);
}

TEST_CASE("selection with K equal to n is the plain scheme") {
  const auto V = testing::reference_matrix();
  for (Scheme s : kAllSchemes) {
    const auto [X, W] = baseline_with_selection(s, V, V.n());
    CHECK(X == SelectionVector::All(V.n()));
    CHECK(W.values == run_scheme(s, V).values);
  }
}

TEST_CASE("selection picks the only useful classifier") {
  const AccuracyMatrix V((MatrixXd(3, 2) << 1, 1, 0, 0, 0, 0).finished());
  for (Scheme s : kAllSchemes) {
    const auto [X, W] = baseline_with_selection(s, V, 1);
    CHECK(X.indices() == std::vector<int>{0});
    CHECK(W.values.bottomRows(2).isZero(0.0));
  }
}

TEST_CASE("selection matches exhaustive search over subsets") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    const AccuracyMatrix V = testing::random_accuracy(rng, 5, 3);
    for (Scheme s : {Scheme::UwPc, Scheme::WaPc, Scheme::Bma}) {
      double best = -1.0;
      std::vector<int> best_rows;
      for (unsigned mask = 0; mask < 32; ++mask) {
        if (std::popcount(mask) != 2) continue;
        std::vector<int> rows;
        for (int i = 0; i < 5; ++i) {
          if (mask & (1u << i)) rows.push_back(i);
        }
        const AccuracyMatrix sub = V.subset(rows);
        const double score = weighted_accuracy(sub, run_scheme(s, sub));
        if (score > best + 1e-12 || (std::abs(score - best) <= 1e-12 && rows < best_rows)) {
          best = score;
          best_rows = rows;
        }
      }
      const auto [X, W] = baseline_with_selection(s, V, 2);
      CHECK(X.indices() == best_rows);
      CHECK(weighted_accuracy(V, W) == doctest::Approx(best).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(baseline_with_selection(Scheme::UwPc, testing::reference_matrix(), 9), DomainError);
}
