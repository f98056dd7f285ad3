#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ensweight/core.hpp"

namespace ensweight {

struct DeParams {
  int population_size = 50;
  int max_generations = 200;
  double differential_weight = 0.8;  // F
  double crossover_rate = 0.9;       // CR
  std::uint64_t rng_seed = 42;

  /// Throws DomainError unless population >= 4, F in (0, 2], CR in [0, 1]
  /// and max_generations >= 0.
  void validate() const;
};

struct DeResult {
  /// Per-classifier weights on the probability simplex.
  Eigen::VectorXd weights;
  double fitness = 0.0;
  /// Best fitness in the population after initialisation and after every
  /// generation.
  std::vector<double> best_history;
};

// Uniform 1/n per classifier; every class column sums to one.
WeightMatrix uw_pc(int n, int m);

// Uniform 1/(n*m) per classifier-class pair; total mass one.
WeightMatrix uw_pcc(int n, int m);

// Row-mean accuracy a_i normalised over classifiers, repeated in every class.
WeightMatrix wa_pc(const AccuracyMatrix& V);

// v_ij normalised over the whole matrix.
WeightMatrix wa_pcc(const AccuracyMatrix& V);

// Per-class posterior v_ij / sum_i v_ij under a uniform prior, scaled by 1/m.
WeightMatrix bma_weights(const AccuracyMatrix& V);

/// DE/rand/1/bin over per-classifier weight vectors kept on the simplex by
/// Euclidean projection. Fitness is (1/m) sum_j sum_i w_i v_ij.
DeResult differential_evolution(const AccuracyMatrix& V, const DeParams& params);

/// differential_evolution broadcast to n x m; each class column sums to one.
WeightMatrix de_weights(const AccuracyMatrix& V, const DeParams& params = {});

/// Euclidean projection onto {w >= 0, sum w = 1}.
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

enum class Scheme { UwPc, UwPcc, WaPc, WaPcc, De, Bma };

inline constexpr Scheme kAllSchemes[] = {Scheme::UwPc,  Scheme::UwPcc, Scheme::WaPc,
                                         Scheme::WaPcc, Scheme::De,    Scheme::Bma};

/// "uw-pc", "uw-pcc", "wa-pc", "wa-pcc", "de", "bma".
std::string to_string(Scheme scheme);
Scheme parse_scheme(const std::string& name);

WeightMatrix run_scheme(Scheme scheme, const AccuracyMatrix& V, const DeParams& de = {});

/// (1/m) sum_ij w_ij v_ij.
double weighted_accuracy(const AccuracyMatrix& V, const WeightMatrix& W);

/// Runs the scheme on every K-row subset of V, scores each by
/// weighted_accuracy and keeps the best; ties go to the lexicographically
/// smallest subset. Rows outside the chosen subset are zero.
std::pair<SelectionVector, WeightMatrix> baseline_with_selection(Scheme scheme,
                                                                 const AccuracyMatrix& V,
                                                                 int K,
                                                                 const DeParams& de = {});

}  // namespace ensweight
