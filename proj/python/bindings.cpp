#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>
#include <vector>

#include "ensweight/baselines.hpp"
#include "ensweight/ensemble.hpp"
#include "ensweight/metrics.hpp"
#include "ensweight/optimizer.hpp"
#include "ensweight/sampling.hpp"

namespace py = pybind11;
using namespace ensweight;

namespace {

HyperParams make_params(int K, double lambda, double alpha, double epsilon, double big_m) {
  HyperParams p;
  p.K = K;
  p.lambda = lambda;
  p.alpha = alpha;
  p.epsilon = epsilon;
  p.big_m = big_m;
  return p;
}

SearchMethod parse_method(const std::string& name) {
  if (name == "enumerate") return SearchMethod::Enumerate;
  if (name == "bnb") return SearchMethod::BranchAndBound;
  throw DomainError("unknown search method '" + name + "' (expected enumerate or bnb)");
}

py::dict objective_dict(const ObjectiveBreakdown& o) {
  py::dict d;
  d["accuracy"] = o.accuracy_term;
  d["l1"] = o.l1_term;
  d["l2"] = o.l2_term;
  d["total"] = o.total;
  return d;
}

py::dict solve(const Eigen::MatrixXd& accuracy, int K, double lambda, double alpha,
               double epsilon, double big_m, const std::string& method, int workers) {
  SolveOptions options;
  options.method = parse_method(method);
  options.workers = workers;
  MipSolution sol;
  {
    py::gil_scoped_release release;
    sol = solve_weighting(AccuracyMatrix(accuracy), make_params(K, lambda, alpha, epsilon, big_m),
                          options);
  }
  py::dict d;
  d["weights"] = sol.weights.values;
  d["selection"] = sol.selection.indices();
  d["objective"] = objective_dict(sol.objective);
  return d;
}

py::dict validate(const Eigen::MatrixXd& accuracy, const Eigen::MatrixXd& weights,
                  const std::vector<int>& selection, int K, double lambda, double alpha,
                  double epsilon, double big_m, double tol) {
  const AccuracyMatrix V(accuracy);
  const auto X = SelectionVector::FromIndices(V.n(), selection);
  const auto report = validate_constraints(V, WeightMatrix(weights), X,
                                           make_params(K, lambda, alpha, epsilon, big_m), tol);
  py::list checks;
  for (const auto& c : report.checks) {
    py::dict item;
    item["id"] = c.id;
    item["name"] = c.name;
    item["satisfied"] = c.satisfied;
    item["worst_violation"] = c.worst_violation;
    item["location"] = c.location;
    checks.append(item);
  }
  py::dict d;
  d["conformant"] = report.conformant();
  d["tolerance"] = report.tolerance;
  d["checks"] = checks;
  return d;
}

Eigen::MatrixXd baseline(const std::string& scheme, const Eigen::MatrixXd& accuracy,
                         std::uint64_t seed) {
  DeParams de;
  de.rng_seed = seed;
  return run_scheme(parse_scheme(scheme), AccuracyMatrix(accuracy), de).values;
}

py::dict confusion_metrics(const std::vector<int>& truth, const std::vector<int>& predicted,
                           int m) {
  const auto cm = ConfusionMatrix::FromLabels(truth, predicted, m);
  const auto prf = macro_prf(cm);
  py::dict d;
  d["balanced_accuracy"] = balanced_accuracy(cm);
  d["macro_precision"] = prf.precision;
  d["macro_recall"] = prf.recall;
  d["macro_f1"] = prf.f1;
  return d;
}

double auprc_of(const std::vector<double>& scores, const std::vector<bool>& positive) {
  // std::vector<bool> is packed, so copy into contiguous storage first.
  const std::unique_ptr<bool[]> flags(new bool[positive.size()]);
  for (std::size_t k = 0; k < positive.size(); ++k) flags[k] = positive[k];
  return auprc(scores, std::span<const bool>(flags.get(), positive.size()));
}

py::tuple predict_one(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& scores) {
  const auto out = predict(WeightMatrix(weights), scores);
  return py::make_tuple(out.predicted, out.tie, out.scores);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Class-specific soft-voting ensemble weighting";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<InfeasibleError>(m, "InfeasibleError", base.ptr());

  m.def("solve_weighting", &solve, py::arg("accuracy"), py::arg("K"),
        py::arg("lambda_") = 0.95, py::arg("alpha") = 0.85, py::arg("epsilon") = 1e-6,
        py::arg("big_m") = 1e6, py::arg("method") = "enumerate", py::arg("workers") = 1,
        "Select K classifiers and their class-specific weights from an n x m accuracy matrix.");
  m.def("validate_constraints", &validate, py::arg("accuracy"), py::arg("weights"),
        py::arg("selection"), py::arg("K"), py::arg("lambda_") = 0.95, py::arg("alpha") = 0.85,
        py::arg("epsilon") = 1e-6, py::arg("big_m") = 1e6, py::arg("tol") = 1e-6);
  m.def("objective", [](const Eigen::MatrixXd& accuracy, const Eigen::MatrixXd& weights, int K,
                        double lambda, double alpha) {
          return objective_dict(objective_value(AccuracyMatrix(accuracy), WeightMatrix(weights),
                                                make_params(K, lambda, alpha, 1e-6, 1e6)));
        },
        py::arg("accuracy"), py::arg("weights"), py::arg("K"), py::arg("lambda_") = 0.95,
        py::arg("alpha") = 0.85);
  m.def("baseline", &baseline, py::arg("scheme"), py::arg("accuracy"), py::arg("seed") = 42,
        "Weights of a baseline scheme: uw-pc, uw-pcc, wa-pc, wa-pcc, de or bma.");

  m.def("predict", &predict_one, py::arg("weights"), py::arg("scores"),
        "Returns (predicted class, tie flag, per-class scores) for one instance.");

  m.def("confusion_metrics", &confusion_metrics, py::arg("truth"), py::arg("predicted"),
        py::arg("m"));
  m.def("auprc", &auprc_of, py::arg("scores"), py::arg("positive"));
  m.def("improvement_pct", &improvement_pct, py::arg("ours"), py::arg("other"));

  m.def("imbalance_ratio", [](std::vector<std::int64_t> counts) {
          return imbalance_ratio(ClassDistribution(std::move(counts)));
        },
        py::arg("counts"));
  m.def("ratio_targets", [](std::vector<std::int64_t> counts, double rho) {
          return ratio_targets(ClassDistribution(std::move(counts)), rho).targets;
        },
        py::arg("counts"), py::arg("rho"));
  m.def("step_targets", [](std::int64_t total, int classes, int r, double rho) {
          return step_targets(total, classes, r, rho).targets;
        },
        py::arg("total"), py::arg("m"), py::arg("r"), py::arg("rho"));
  m.def("stratified_folds", [](const std::vector<int>& labels, int k, std::uint64_t seed) {
          return stratified_folds(labels, k, seed).folds;
        },
        py::arg("labels"), py::arg("k"), py::arg("seed") = 42);
  m.def("resample", [](const std::vector<int>& labels, std::vector<std::int64_t> targets,
                       std::uint64_t seed) {
          ResamplePlan plan;
          plan.targets = std::move(targets);
          plan.rng_seed = seed;
          return resample(labels, plan);
        },
        py::arg("labels"), py::arg("targets"), py::arg("seed") = 42);
}
