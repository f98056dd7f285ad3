#include "ensweight/commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "ensweight/ensemble.hpp"
#include "ensweight/io.hpp"
#include "ensweight/metrics.hpp"
#include "ensweight/sampling.hpp"
#include "json_report.hpp"

namespace ensweight::cli {

namespace {

using io::detail::Json;
using io::detail::number;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw Error("failed writing '" + path + "'");
}

std::string stamped_csv(const CommonOptions& c, const std::string& body) {
  return c.timestamp ? "# generated " + utc_now() + "\n" + body : body;
}

Json report_root(const CommonOptions& c, const std::string& command) {
  Json j;
  if (c.timestamp) j["generated_at"] = utc_now();
  j["command"] = command;
  return j;
}

void emit_report(const std::string& path, const Json& report, std::ostream& out) {
  const std::string text = report.dump(2) + "\n";
  if (path.empty()) {
    out << text;
  } else {
    write_file(path, text);
  }
}

std::string weights_csv(const CommonOptions& c, const ClassifierSet& classifiers,
                        const ClassSet& classes, const WeightMatrix& W,
                        const SelectionVector& X) {
  std::ostringstream os;
  io::write_weight_matrix(os, classifiers, classes, W, X);
  return stamped_csv(c, os.str());
}

Json names_of(const ClassifierSet& classifiers, const std::vector<int>& indices) {
  Json j = Json::array();
  for (int i : indices) j.push_back(classifiers.name(i));
  return j;
}

Json solution_json(const AccuracyMatrix& V, const HyperParams& params, const MipSolution& s) {
  Json j;
  j["params"] = io::detail::params_json(params);
  j["selection"] = names_of(V.classifiers(), s.selection.indices());
  j["objective"] = io::detail::objective_json(s.objective);
  j["constraints"] = io::detail::constraints_json(
      validate_constraints(V, s.weights, s.selection, params, 1e-6));
  Json subsets = Json::array();
  for (const auto& r : s.subset_rank) {
    Json e;
    e["members"] = names_of(V.classifiers(), r.members);
    e["status"] = qp::to_string(r.status);
    e["objective"] = number(r.objective);
    subsets.push_back(std::move(e));
  }
  j["subsets"] = std::move(subsets);
  return j;
}

// Reorders the classifier rows of `preds` to match `order`.
PredictionSet align(const PredictionSet& preds, const ClassifierSet& order) {
  if (preds.classifiers() == order) return preds;
  if (preds.n() != order.size()) {
    throw ShapeError("predictions cover " + std::to_string(preds.n()) +
                     " classifiers but the weights cover " + std::to_string(order.size()));
  }
  std::vector<int> source(static_cast<std::size_t>(order.size()));
  for (int i = 0; i < order.size(); ++i) {
    const auto k = preds.classifiers().index_of(order.name(i));
    if (!k) throw ShapeError("predictions have no classifier '" + order.name(i) + "'");
    source[static_cast<std::size_t>(i)] = *k;
  }
  std::vector<PredictionRecord> records;
  records.reserve(preds.size());
  for (const auto& rec : preds.records()) {
    PredictionRecord r{rec.instance_id, rec.true_class, Eigen::MatrixXd(order.size(), preds.m())};
    for (int i = 0; i < order.size(); ++i) {
      r.scores.row(i) = rec.scores.row(source[static_cast<std::size_t>(i)]);
    }
    records.push_back(std::move(r));
  }
  return PredictionSet(order, preds.classes(), std::move(records));
}

PredictionSet load_predictions(const std::string& path, const ClassifierSet& classifiers,
                               const ClassSet& classes) {
  return align(io::read_predictions(path, classes), classifiers);
}

SolveOptions solve_options(const CommonOptions& c, SearchMethod method = SearchMethod::Enumerate) {
  SolveOptions s;
  s.method = method;
  s.workers = c.effective_workers();
  return s;
}

const char* const kMetricNames[] = {"balanced_accuracy", "macro_precision", "macro_recall",
                                    "macro_f1", "macro_auprc"};

double metric(const MetricsReport& r, std::size_t k) {
  switch (k) {
    case 0: return r.balanced_accuracy;
    case 1: return r.macro_precision;
    case 2: return r.macro_recall;
    case 3: return r.macro_f1;
    default: return r.macro_auprc.value_or(std::nan(""));
  }
}

}  // namespace

int cmd_optimize(const OptimizeOptions& o, const CommonOptions& c, std::ostream& out) {
  const AccuracyMatrix V = io::read_accuracy_matrix(o.accuracy);
  const MipSolution s = solve_weighting(V, o.params, solve_options(c, o.method));
  if (!o.weights_out.empty()) {
    write_file(o.weights_out,
               weights_csv(c, V.classifiers(), V.classes(), s.weights, s.selection));
  }
  Json report = report_root(c, "optimize");
  report["accuracy"] = o.accuracy;
  report["method"] = o.method == SearchMethod::Enumerate ? "enumerate" : "branch-and-bound";
  report["solution"] = solution_json(V, o.params, s);
  if (!o.report_out.empty()) emit_report(o.report_out, report, out);

  out << "selected:";
  for (int i : s.selection.indices()) out << ' ' << V.classifiers().name(i);
  out << "\nobjective: " << io::format_double(s.objective.total) << '\n';
  if (o.weights_out.empty()) {
    io::write_weight_matrix(out, V.classifiers(), V.classes(), s.weights, s.selection);
  }
  return kOk;
}

int cmd_baselines(const BaselinesOptions& o, const CommonOptions& c, std::ostream& out) {
  const AccuracyMatrix V = io::read_accuracy_matrix(o.accuracy);
  const int K = o.K.value_or(V.n());
  DeParams de = o.de;
  de.rng_seed = c.seed;
  if (!o.out_dir.empty()) std::filesystem::create_directories(o.out_dir);

  Json report = report_root(c, "baselines");
  report["accuracy"] = o.accuracy;
  report["K"] = K;
  Json schemes = Json::object();
  for (Scheme scheme : kAllSchemes) {
    const auto [X, W] = baseline_with_selection(scheme, V, K, de);
    const std::string name = to_string(scheme);
    if (!o.out_dir.empty()) {
      write_file(o.out_dir + "/" + name + ".csv",
                 weights_csv(c, V.classifiers(), V.classes(), W, X));
    }
    Json e;
    e["selection"] = names_of(V.classifiers(), X.indices());
    e["weighted_accuracy"] = number(weighted_accuracy(V, W));
    schemes[name] = std::move(e);
    out << name << ": weighted accuracy " << io::format_double(weighted_accuracy(V, W)) << '\n';
  }
  report["schemes"] = std::move(schemes);
  if (!o.out_dir.empty()) emit_report(o.out_dir + "/baselines.json", report, out);
  return kOk;
}

int cmd_evaluate(const EvaluateOptions& o, const CommonOptions& c, std::ostream& out) {
  const io::WeightFile wf = io::read_weight_matrix(o.weights);
  const PredictionSet preds = load_predictions(o.predictions, wf.classifiers, wf.classes);
  const MetricsReport m = evaluate(wf.weights, preds, c.effective_workers());
  Json report = report_root(c, "evaluate");
  report["weights"] = o.weights;
  report["predictions"] = o.predictions;
  report["metrics"] = io::detail::metrics_json(m);
  emit_report(o.report_out, report, out);
  if (!o.report_out.empty()) {
    out << "balanced accuracy: " << io::format_double(m.balanced_accuracy) << '\n';
  }
  return kOk;
}

int cmd_resample(const ResampleOptions& o, const CommonOptions& c, std::ostream& out) {
  const io::LabelFile lf = io::read_labels(o.labels);
  const ClassDistribution before = ClassDistribution::FromLabels(lf.labels, lf.classes.size());
  ResamplePlan plan;
  if (o.mode == "ratio") {
    plan = ratio_targets(before, o.rho, c.seed);
  } else if (o.mode == "step") {
    plan = step_targets(before.total(), before.size(), o.r, o.rho, c.seed);
  } else {
    throw ParseError("unknown resample mode '" + o.mode + "' (expected ratio or step)");
  }
  const std::vector<std::size_t> picked = resample(lf.labels, plan);

  std::ostringstream csv;
  csv << "instance_index,instance_id,label\n";
  std::vector<int> new_labels;
  new_labels.reserve(picked.size());
  for (std::size_t k : picked) {
    csv << k << ',' << lf.instance_ids[k] << ',' << lf.classes.name(lf.labels[k]) << '\n';
    new_labels.push_back(lf.labels[k]);
  }
  if (!o.indices_out.empty()) write_file(o.indices_out, stamped_csv(c, csv.str()));

  const ClassDistribution after = ClassDistribution::FromLabels(new_labels, lf.classes.size());
  Json report = report_root(c, "resample");
  report["labels"] = o.labels;
  report["mode"] = o.mode;
  report["target_rho"] = o.rho;
  if (o.mode == "step") report["r"] = o.r;
  report["seed"] = c.seed;
  Json classes = Json::array();
  for (int j = 0; j < lf.classes.size(); ++j) {
    Json e;
    e["class"] = lf.classes.name(j);
    e["before"] = before[j];
    e["target"] = plan.targets[static_cast<std::size_t>(j)];
    e["after"] = after[j];
    classes.push_back(std::move(e));
  }
  report["classes"] = std::move(classes);
  report["total_before"] = before.total();
  report["total_after"] = after.total();
  const bool all_present =
      std::all_of(after.counts().begin(), after.counts().end(), [](auto n) { return n > 0; });
  report["achieved_rho"] = all_present ? number(imbalance_ratio(after)) : Json(nullptr);
  emit_report(o.report_out, report, out);
  if (o.indices_out.empty()) out << csv.str();
  return kOk;
}

int cmd_tune(const TuneOptions& o, const CommonOptions& c, std::ostream& out) {
  const AccuracyMatrix V = io::read_accuracy_matrix(o.accuracy);
  const PredictionSet preds = load_predictions(o.predictions, V.classifiers(), V.classes());
  const int workers = c.effective_workers();
  std::vector<std::pair<HyperParams, double>> trace;
  const TuneScore score = [&](const MipSolution& s, const HyperParams& p) {
    const double b = evaluate(s.weights, preds, workers).balanced_accuracy;
    trace.emplace_back(p, b);
    return b;
  };
  const TuneResult r = tune_hyperparams(V, o.start, o.lambda_step, o.alpha_step, score,
                                        solve_options(c), o.max_moves);
  HyperParams best = o.start;
  best.lambda = r.lambda;
  best.alpha = r.alpha;
  if (!o.weights_out.empty()) {
    write_file(o.weights_out, weights_csv(c, V.classifiers(), V.classes(), r.solution.weights,
                                          r.solution.selection));
  }
  Json report = report_root(c, "tune");
  report["accuracy"] = o.accuracy;
  report["predictions"] = o.predictions;
  report["lambda"] = r.lambda;
  report["alpha"] = r.alpha;
  report["score"] = number(r.score);
  report["evaluations"] = r.evaluations;
  Json steps = Json::array();
  for (const auto& [p, s] : trace) {
    steps.push_back(Json{{"lambda", p.lambda}, {"alpha", p.alpha}, {"balanced_accuracy", number(s)}});
  }
  report["trace"] = std::move(steps);
  report["solution"] = solution_json(V, best, r.solution);
  emit_report(o.report_out, report, out);
  if (!o.report_out.empty()) {
    out << "lambda " << io::format_double(r.lambda) << ", alpha " << io::format_double(r.alpha)
        << ", balanced accuracy " << io::format_double(r.score) << '\n';
  }
  return kOk;
}

int cmd_sweep(const SweepOptions& o, const CommonOptions& c, std::ostream& out) {
  const AccuracyMatrix V = io::read_accuracy_matrix(o.accuracy);
  const PredictionSet preds = load_predictions(o.predictions, V.classifiers(), V.classes());
  const int k_min = o.k_min.value_or(2);
  const int k_max = o.k_max.value_or(V.n());
  if (k_min < 2 || k_max > V.n() || k_min > k_max) {
    throw DomainError("K range [" + std::to_string(k_min) + ", " + std::to_string(k_max) +
                      "] must lie within [2, " + std::to_string(V.n()) + "]");
  }
  const int workers = c.effective_workers();
  DeParams de = o.de;
  de.rng_seed = c.seed;

  std::ostringstream table;
  table << 'K';
  for (Scheme s : kAllSchemes) table << ',' << to_string(s);
  table << '\n';

  Json report = report_root(c, "sweep");
  report["accuracy"] = o.accuracy;
  report["predictions"] = o.predictions;
  report["params"] = io::detail::params_json(o.params);
  Json rows = Json::array();
  for (int K = k_min; K <= k_max; ++K) {
    HyperParams p = o.params;
    p.K = K;
    Json row;
    row["K"] = K;
    std::optional<MetricsReport> mip;
    try {
      const MipSolution s = solve_weighting(V, p, solve_options(c));
      mip = evaluate(s.weights, preds, workers);
      row["mip"] = Json{{"selection", names_of(V.classifiers(), s.selection.indices())},
                        {"metrics", io::detail::metrics_json(*mip)}};
    } catch (const InfeasibleError& e) {
      row["mip"] = Json{{"error", e.what()}};
    }
    table << K;
    Json schemes = Json::object();
    for (Scheme scheme : kAllSchemes) {
      const auto [X, W] = baseline_with_selection(scheme, V, K, de);
      const MetricsReport m = evaluate(W, preds, workers);
      Json e;
      e["selection"] = names_of(V.classifiers(), X.indices());
      e["metrics"] = io::detail::metrics_json(m);
      Json gains = Json::object();
      for (std::size_t k = 0; k < std::size(kMetricNames); ++k) {
        const double other = metric(m, k);
        gains[kMetricNames[k]] = mip && other > 0.0
                                     ? number(improvement_pct(metric(*mip, k), other))
                                     : Json(nullptr);
      }
      table << ',';
      if (mip && m.balanced_accuracy > 0.0) {
        table << io::format_double(improvement_pct(mip->balanced_accuracy, m.balanced_accuracy));
      } else {
        table << "nan";
      }
      e["improvement_pct"] = std::move(gains);
      schemes[to_string(scheme)] = std::move(e);
    }
    table << '\n';
    row["schemes"] = std::move(schemes);
    rows.push_back(std::move(row));
  }
  report["rows"] = std::move(rows);
  if (!o.table_out.empty()) write_file(o.table_out, stamped_csv(c, table.str()));
  emit_report(o.report_out, report, out);
  if (o.table_out.empty()) out << table.str();
  return kOk;
}

int cmd_validate(const ValidateOptions& o, const CommonOptions& c, std::ostream& out) {
  const AccuracyMatrix V = io::read_accuracy_matrix(o.accuracy);
  const io::WeightFile wf = io::read_weight_matrix(o.weights);
  if (!(wf.classifiers == V.classifiers()) || !(wf.classes == V.classes())) {
    throw ShapeError("weight file classifiers or classes do not match the accuracy matrix");
  }
  HyperParams p = o.params;
  p.K = o.K.value_or(wf.selection.count());
  const ConstraintReport r = validate_constraints(V, wf.weights, wf.selection, p, o.tol);
  Json report = report_root(c, "validate");
  report["accuracy"] = o.accuracy;
  report["weights"] = o.weights;
  report["params"] = io::detail::params_json(p);
  report["constraints"] = io::detail::constraints_json(r);
  emit_report(o.report_out, report, out);
  if (r.conformant()) return kOk;
  if (o.report_out.empty()) return kValidationFailure;
  for (const auto& check : r.checks) {
    if (!check.satisfied) {
      out << "constraint (" << check.id << ") violated: " << check.name << ", worst "
          << io::format_double(check.worst_violation) << " at " << check.location << '\n';
    }
  }
  return kValidationFailure;
}

int run_guarded(const std::function<int()>& command, std::ostream& err) {
  try {
    return command();
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const ParseError& e) {
    err << "input error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ShapeError& e) {
    err << "input error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DomainError& e) {
    err << "input error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace ensweight::cli
