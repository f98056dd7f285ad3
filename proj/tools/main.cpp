#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "ensweight/commands.hpp"

namespace {

using namespace ensweight;

void add_params(CLI::App* sub, HyperParams& p, bool with_k) {
  if (with_k) sub->add_option("-K,--K", p.K, "Ensemble size")->required();
  sub->add_option("--lambda", p.lambda, "Regularisation strength")->capture_default_str();
  sub->add_option("--alpha", p.alpha, "L1/L2 mixing weight in [0, 1]")->capture_default_str();
  sub->add_option("--epsilon", p.epsilon, "Strictness margin")->capture_default_str();
  sub->add_option("--big-m", p.big_m, "Big-M constant")->capture_default_str();
}

void add_de(CLI::App* sub, DeParams& de) {
  sub->add_option("--de-population", de.population_size, "DE population size")
      ->capture_default_str();
  sub->add_option("--de-generations", de.max_generations, "DE generations")
      ->capture_default_str();
  sub->add_option("--de-f", de.differential_weight, "DE differential weight")
      ->capture_default_str();
  sub->add_option("--de-cr", de.crossover_rate, "DE crossover rate")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-class ensemble weighting with an exact mixed-integer optimizer"};
  app.set_config("--config", "", "TOML or INI file with option values");
  app.require_subcommand(1);

  cli::CommonOptions common;
  bool no_timestamp = false;
  app.add_option("--workers", common.workers, "Worker threads (0 = all cores)")
      ->capture_default_str();
  app.add_flag("--deterministic", common.deterministic, "Use a single worker");
  app.add_flag("--no-timestamp", no_timestamp, "Omit generation time from outputs");
  app.add_option("--seed", common.seed, "Random seed")->capture_default_str();

  cli::OptimizeOptions optimize;
  std::string method = "enumerate";
  auto* opt = app.add_subcommand("optimize", "Solve for the optimal selection and weights");
  opt->add_option("--accuracy", optimize.accuracy, "Accuracy matrix CSV")
      ->required()->check(CLI::ExistingFile);
  add_params(opt, optimize.params, true);
  opt->add_option("--method", method, "Search method")
      ->check(CLI::IsMember({"enumerate", "bnb"}))->capture_default_str();
  opt->add_option("--weights", optimize.weights_out, "Output weight CSV");
  opt->add_option("--report", optimize.report_out, "Output JSON report");

  cli::BaselinesOptions baselines;
  auto* base = app.add_subcommand("baselines", "Compute the six baseline weightings");
  base->add_option("--accuracy", baselines.accuracy, "Accuracy matrix CSV")
      ->required()->check(CLI::ExistingFile);
  base->add_option("-K,--K", baselines.K, "Ensemble size (default: all classifiers)");
  base->add_option("--out-dir", baselines.out_dir, "Directory for weight files")->required();
  add_de(base, baselines.de);

  cli::EvaluateOptions evaluate;
  auto* eval = app.add_subcommand("evaluate", "Evaluate a weighted ensemble on predictions");
  eval->add_option("--weights", evaluate.weights, "Weight CSV")
      ->required()->check(CLI::ExistingFile);
  eval->add_option("--predictions", evaluate.predictions, "Predictions CSV")
      ->required()->check(CLI::ExistingFile);
  eval->add_option("--report", evaluate.report_out, "Output JSON report (default: stdout)");

  cli::ResampleOptions resample;
  auto* res = app.add_subcommand("resample", "Resample labels to a target imbalance");
  res->add_option("--labels", resample.labels, "Labels CSV")
      ->required()->check(CLI::ExistingFile);
  res->add_option("--mode", resample.mode, "ratio or step")
      ->check(CLI::IsMember({"ratio", "step"}))->capture_default_str();
  res->add_option("--rho", resample.rho, "Target imbalance ratio")->required();
  res->add_option("--r", resample.r, "Minority class count for step mode")
      ->capture_default_str();
  res->add_option("--indices", resample.indices_out, "Output index CSV (default: stdout)");
  res->add_option("--report", resample.report_out, "Output JSON report (default: stdout)");

  cli::TuneOptions tune;
  auto* tun = app.add_subcommand("tune", "Hill-climb lambda and alpha on balanced accuracy");
  tun->add_option("--accuracy", tune.accuracy, "Accuracy matrix CSV")
      ->required()->check(CLI::ExistingFile);
  tun->add_option("--predictions", tune.predictions, "Predictions CSV used for scoring")
      ->required()->check(CLI::ExistingFile);
  add_params(tun, tune.start, true);
  tun->add_option("--lambda-step", tune.lambda_step, "Lambda step")->capture_default_str();
  tun->add_option("--alpha-step", tune.alpha_step, "Alpha step")->capture_default_str();
  tun->add_option("--max-moves", tune.max_moves, "Move cap per direction")
      ->capture_default_str();
  tun->add_option("--weights", tune.weights_out, "Output weight CSV");
  tun->add_option("--report", tune.report_out, "Output JSON report (default: stdout)");

  cli::SweepOptions sweep;
  auto* swp = app.add_subcommand("sweep", "Compare the optimizer with every baseline over K");
  swp->add_option("--accuracy", sweep.accuracy, "Accuracy matrix CSV")
      ->required()->check(CLI::ExistingFile);
  swp->add_option("--predictions", sweep.predictions, "Predictions CSV")
      ->required()->check(CLI::ExistingFile);
  add_params(swp, sweep.params, false);
  swp->add_option("--k-min", sweep.k_min, "Smallest K (default 2)");
  swp->add_option("--k-max", sweep.k_max, "Largest K (default n)");
  add_de(swp, sweep.de);
  swp->add_option("--table", sweep.table_out, "Output improvement CSV (default: stdout)");
  swp->add_option("--report", sweep.report_out, "Output JSON report (default: stdout)");

  cli::ValidateOptions validate;
  auto* val = app.add_subcommand("validate", "Check a weight file against every constraint");
  val->add_option("--accuracy", validate.accuracy, "Accuracy matrix CSV")
      ->required()->check(CLI::ExistingFile);
  val->add_option("--weights", validate.weights, "Weight CSV")
      ->required()->check(CLI::ExistingFile);
  add_params(val, validate.params, false);
  val->add_option("-K,--K", validate.K, "Ensemble size (default: selected count)");
  val->add_option("--tol", validate.tol, "Violation tolerance")->capture_default_str();
  val->add_option("--report", validate.report_out, "Output JSON report (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kConfigError;
  }
  common.timestamp = !no_timestamp;
  optimize.method = method == "bnb" ? SearchMethod::BranchAndBound : SearchMethod::Enumerate;

  const std::map<CLI::App*, std::function<int()>> commands = {
      {opt, [&] { return cli::cmd_optimize(optimize, common, std::cout); }},
      {base, [&] { return cli::cmd_baselines(baselines, common, std::cout); }},
      {eval, [&] { return cli::cmd_evaluate(evaluate, common, std::cout); }},
      {res, [&] { return cli::cmd_resample(resample, common, std::cout); }},
      {tun, [&] { return cli::cmd_tune(tune, common, std::cout); }},
      {swp, [&] { return cli::cmd_sweep(sweep, common, std::cout); }},
      {val, [&] { return cli::cmd_validate(validate, common, std::cout); }},
  };
  for (const auto& [sub, run] : commands) {
    if (sub->parsed()) return cli::run_guarded(run, std::cerr);
  }
  return cli::kConfigError;
}
