#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include "ensweight/baselines.hpp"
#include "ensweight/core.hpp"
#include "ensweight/optimizer.hpp"

namespace ensweight::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kInfeasible = 3,
  kValidationFailure = 4,
};

struct CommonOptions {
  /// 0 uses the available hardware parallelism.
  int workers = 0;
  /// Forces a single worker.
  bool deterministic = false;
  /// Adds a generation-time line to every output file.
  bool timestamp = true;
  std::uint64_t seed = 42;

  int effective_workers() const { return deterministic ? 1 : workers; }
};

struct OptimizeOptions {
  std::string accuracy;
  HyperParams params;
  SearchMethod method = SearchMethod::Enumerate;
  std::string weights_out;
  std::string report_out;
};

struct BaselinesOptions {
  std::string accuracy;
  std::optional<int> K;
  DeParams de;
  std::string out_dir;
};

struct EvaluateOptions {
  std::string weights;
  std::string predictions;
  std::string report_out;
};

struct ResampleOptions {
  std::string labels;
  std::string mode = "ratio";  // "ratio" or "step"
  double rho = 1.0;
  int r = 1;
  std::string indices_out;
  std::string report_out;
};

struct TuneOptions {
  std::string accuracy;
  std::string predictions;
  HyperParams start;
  double lambda_step = 0.01;
  double alpha_step = 0.01;
  int max_moves = 100;
  std::string weights_out;
  std::string report_out;
};

struct SweepOptions {
  std::string accuracy;
  std::string predictions;
  HyperParams params;
  std::optional<int> k_min;
  std::optional<int> k_max;
  DeParams de;
  std::string table_out;
  std::string report_out;
};

struct ValidateOptions {
  std::string accuracy;
  std::string weights;
  HyperParams params;
  /// Defaults to the number of selected classifiers in the weight file.
  std::optional<int> K;
  double tol = 1e-6;
  std::string report_out;
};

// Each command writes its files, prints a short summary to `out` and returns
// an exit code. Library errors propagate as exceptions; see run_guarded.
int cmd_optimize(const OptimizeOptions& o, const CommonOptions& c, std::ostream& out);
int cmd_baselines(const BaselinesOptions& o, const CommonOptions& c, std::ostream& out);
int cmd_evaluate(const EvaluateOptions& o, const CommonOptions& c, std::ostream& out);
int cmd_resample(const ResampleOptions& o, const CommonOptions& c, std::ostream& out);
int cmd_tune(const TuneOptions& o, const CommonOptions& c, std::ostream& out);
int cmd_sweep(const SweepOptions& o, const CommonOptions& c, std::ostream& out);
int cmd_validate(const ValidateOptions& o, const CommonOptions& c, std::ostream& out);

/// Runs `command`, printing any error to `err` and mapping it to an exit
/// code: infeasibility to 3, bad input or configuration to 2, anything else
/// to 1.
int run_guarded(const std::function<int()>& command, std::ostream& err);

}  // namespace ensweight::cli
