#include <doctest.h>

#include <random>

#include "ensweight/optimizer.hpp"
#include "ensweight/qp.hpp"
#include "support.hpp"

using namespace ensweight;
using namespace ensweight::qp;
using Eigen::VectorXd;

namespace {

VectorXd ones(int n) { return VectorXd::Ones(n); }

// Random concave QP over the simplex with an extra covering row that cuts
// off part of it.
QpProblem random_problem(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  QpProblem p = QpProblem::Unconstrained(n);
  for (int k = 0; k < n; ++k) {
    p.linear[k] = u(rng);
    p.quadratic[k] = 0.5 * u(rng);
  }
  p.add_eq(ones(n), 1.0);
  VectorXd row(n);
  for (int k = 0; k < n; ++k) row[k] = u(rng);
  p.add_ineq(row, row.mean());
  return p;
}

}  // namespace

TEST_CASE("single variable on the simplex") {
  QpProblem p = QpProblem::Unconstrained(1);
  p.linear[0] = 1.0;
  p.add_eq(ones(1), 1.0);
  const auto s = solve_qp(p, 1e-8);
  REQUIRE(s.status == QpStatus::Optimal);
  CHECK(s.w[0] == doctest::Approx(1.0).epsilon(1e-12));
  const auto g = grid_oracle(p, 0.01);
  REQUIRE(g.status == QpStatus::Optimal);
  CHECK(g.w[0] == doctest::Approx(1.0));
}

TEST_CASE("best classifier takes all mass except the floor") {
  const AccuracyMatrix V((Eigen::MatrixXd(2, 1) << 1.0, 0.0).finished());
  HyperParams params;
  params.K = 2;
  params.lambda = 0.0;
  const std::vector<int> members = {0, 1};
  const QpProblem p = build_subset_qp(V, params, members);
  const auto s = solve_qp(p, 1e-8);
  REQUIRE(s.status == QpStatus::Optimal);
  CHECK(std::abs(s.w[0] - (1.0 - 1e-6)) <= 1e-10);
  CHECK(std::abs(s.w[1] - 1e-6) <= 1e-10);

  const auto g = grid_oracle(p, 1e-3);
  REQUIRE(g.status == QpStatus::Optimal);
  CHECK(std::abs(g.objective - s.objective) <= 1e-3);
}

TEST_CASE("contradictory constraints are reported infeasible with a certificate") {
  QpProblem p = QpProblem::Unconstrained(2);
  p.linear << 1.0, 0.5;
  p.add_eq(ones(2), 1.0, "sum is one");
  p.add_ineq(ones(2), 2.0, "sum at least two");
  const auto s = solve_qp(p, 1e-8);
  CHECK(s.status == QpStatus::Infeasible);
  REQUIRE_FALSE(s.certificate.empty());
  for (const auto& label : s.certificate) {
    CHECK((label == "sum is one" || label == "sum at least two"));
  }
  CHECK(grid_oracle(p, 0.01).status == QpStatus::Infeasible);
}

TEST_CASE("pure linear objectives are solved to a vertex") {
  QpProblem p = QpProblem::Unconstrained(3);
  p.linear << 0.2, 0.9, 0.4;
  p.add_eq(ones(3), 1.0);
  const auto s = solve_qp(p, 1e-8);
  REQUIRE(s.status == QpStatus::Optimal);
  CHECK(s.w[1] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(s.objective == doctest::Approx(0.9).epsilon(1e-9));
}

TEST_CASE("unconstrained separable maximum") {
  QpProblem p = QpProblem::Unconstrained(2);
  p.linear << 1.0, -1.0;
  p.quadratic << 0.5, 0.5;
  const auto s = solve_qp(p, 1e-8);
  REQUIRE(s.status == QpStatus::Optimal);
  // argmax of w - 0.5 w^2 is 1; the second variable sits at its bound.
  CHECK(s.w[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::abs(s.w[1]) <= 1e-8);
}

TEST_CASE("random 3x2 weighting instance agrees with the grid oracle") {
  std::mt19937_64 rng(314);
  const AccuracyMatrix V = testing::random_accuracy(rng, 3, 2);
  HyperParams params;
  params.K = 3;
  params.lambda = 0.5;
  params.alpha = 0.4;
  const std::vector<int> members = {0, 1, 2};
  const QpProblem p = build_subset_qp(V, params, members);
  const auto s = solve_qp(p, 1e-8);
  const auto g = grid_oracle(p, 0.01);
  REQUIRE(s.status == g.status);
  if (s.status == QpStatus::Optimal) {
    CHECK(std::abs(s.objective - g.objective) <= 1e-3);
  }
}

TEST_CASE("solver matches the grid oracle on random problems with up to six variables") {
  std::mt19937_64 rng(2718);
  int compared = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 5;
    // Coarser grids for more variables keep the enumeration small.
    const double step = n <= 4 ? 0.01 : (n == 5 ? 0.02 : 0.04);
    const QpProblem p = random_problem(rng, n);
    const auto s = solve_qp(p, 1e-8);
    const auto g = grid_oracle(p, step);
    REQUIRE(s.status == QpStatus::Optimal);
    REQUIRE(g.status == QpStatus::Optimal);
    // The oracle accepts points violating inequalities by up to `step`, so its
    // value is bracketed by the exact optimum (minus grid rounding) and the
    // optimum of the problem with every inequality loosened by `step`.
    QpProblem loose = p;
    loose.ineq_rhs.array() -= step;
    const auto l = solve_qp(loose, 1e-8);
    REQUIRE(l.status == QpStatus::Optimal);
    CHECK(g.objective >= s.objective - std::max(1e-3, 2 * step));
    CHECK(g.objective <= l.objective + 1e-6);
    CHECK(p.max_violation(g.w) <= step + 1e-12);
    ++compared;
  }
  CHECK(compared == 30);
}

TEST_CASE("KKT residuals of optimal solutions are within tolerance on re-evaluation") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const QpProblem p = random_problem(rng, 3 + trial % 6);
    const auto s = solve_qp(p, 1e-8);
    REQUIRE(s.status == QpStatus::Optimal);
    const auto r = kkt_residuals(p, s.w, s.eq_duals, s.ineq_duals, s.bound_duals);
    CHECK(r.stationarity <= 1e-8);
    CHECK(r.max() <= 1e-8);
    CHECK(p.max_violation(s.w) <= 1e-8);
  }
}

TEST_CASE("solutions are bitwise reproducible") {
  std::mt19937_64 rng(7);
  const QpProblem p = random_problem(rng, 6);
  const auto a = solve_qp(p, 1e-8);
  const auto b = solve_qp(p, 1e-8);
  CHECK(a.w == b.w);
  CHECK(a.objective == b.objective);
}

TEST_CASE("a stronger quadratic penalty never increases the sum of squared weights") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 10; ++trial) {
    const AccuracyMatrix V = testing::random_accuracy(rng, 4, 3);
    HyperParams params;
    params.K = 4;
    params.alpha = 0.0;
    const std::vector<int> members = {0, 1, 2, 3};
    double previous = std::numeric_limits<double>::infinity();
    for (double lambda : {0.01, 0.05, 0.2, 1.0, 5.0}) {
      params.lambda = lambda;
      const auto s = solve_qp(build_subset_qp(V, params, members), 1e-8);
      if (s.status != QpStatus::Optimal) break;
      const double sq = s.w.squaredNorm();
      CHECK(sq <= previous + 1e-9);
      previous = sq;
    }
  }
}

TEST_CASE("problem validation") {
  QpProblem p = QpProblem::Unconstrained(2);
  p.quadratic[0] = -1.0;
  CHECK_THROWS_AS(solve_qp(p, 1e-8), DomainError);
  p.quadratic[0] = 0.0;
  CHECK_THROWS_AS(p.add_eq(ones(3), 1.0), ShapeError);
  p.linear.resize(3);
  CHECK_THROWS_AS(solve_qp(p, 1e-8), ShapeError);
  QpProblem q = QpProblem::Unconstrained(1);
  CHECK_THROWS_AS(solve_qp(q, 0.0), DomainError);
}

TEST_CASE("the grid oracle refuses enumerations beyond its point budget") {
  QpProblem p = QpProblem::Unconstrained(12);
  p.linear.setOnes();
  VectorXd row = VectorXd::Zero(12);
  row.head(6).setOnes();
  VectorXd row2 = VectorXd::Zero(12);
  row2.tail(6).setOnes();
  // Inequalities only: no variable can be eliminated.
  p.add_ineq(-row, -1.0);
  p.add_ineq(-row2, -1.0);
  CHECK_THROWS_AS(grid_oracle(p, 0.01, 1.0, 1e6), DomainError);
}

TEST_CASE("an optimum pinned to the epsilon floor is found at tight tolerance") {
  // The second classifier is dominated in every class, so its weight sits
  // exactly on the epsilon lower bound of its row.
  const AccuracyMatrix V((Eigen::MatrixXd(2, 2) << 0.84736565704855371, 0.94220810370017372,
                          0.18326420381997566, 0.53200116400449526)
                             .finished());
  HyperParams p;
  p.K = 2;
  const std::vector<int> both = {0, 1};
  const QpProblem problem = build_subset_qp(V, p, both);
  for (double tol : {1e-8, 1e-9, 1e-10}) {
    const QpSolution s = solve_qp(problem, tol);
    REQUIRE(s.status == QpStatus::Optimal);
    CHECK(problem.max_violation(s.w) <= tol);
    CHECK(s.w[2] + s.w[3] == doctest::Approx(p.epsilon).epsilon(1e-6));
  }
  CHECK_NOTHROW(solve_weighting(V, p));
}

TEST_CASE("degenerate linear programs converge") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int solved = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 5;
    const int m = 2 + trial % 4;
    Eigen::MatrixXd v(n, m);
    // Coarse values produce ties and degenerate vertices.
    for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = std::round(u(rng) * 20.0) / 20.0;
    HyperParams p;
    p.K = 2;
    p.alpha = 1.0;
    p.lambda = 0.5 + u(rng);
    for (SubsetEnumerator e(n, 2); e.current(); e.advance()) {
      const QpSolution s = solve_qp(build_subset_qp(AccuracyMatrix(v), p, *e.current()), 1e-9);
      CHECK(s.status != QpStatus::MaxIterations);
      solved += s.status == QpStatus::Optimal;
    }
  }
  CHECK(solved > 0);
}
