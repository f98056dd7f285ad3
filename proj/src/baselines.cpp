#include "ensweight/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <random>

#include "ensweight/optimizer.hpp"

namespace ensweight {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void require_dims(int n, int m) {
  if (n < 1 || m < 1) throw DomainError("weighting needs n >= 1 classifiers and m >= 1 classes");
}

double de_fitness(const AccuracyMatrix& V, const VectorXd& w) {
  double s = 0.0;
  for (int j = 0; j < V.m(); ++j) {
    for (int i = 0; i < V.n(); ++i) s += w[i] * V(i, j);
  }
  return s / V.m();
}

}  // namespace

void DeParams::validate() const {
  if (population_size < 4) throw DomainError("DE population must have at least 4 members");
  if (!(differential_weight > 0.0 && differential_weight <= 2.0)) {
    throw DomainError("DE differential weight F must lie in (0, 2]");
  }
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) {
    throw DomainError("DE crossover rate must lie in [0, 1]");
  }
  if (max_generations < 0) throw DomainError("DE generation count must be non-negative");
}

WeightMatrix uw_pc(int n, int m) {
  require_dims(n, m);
  return WeightMatrix(MatrixXd::Constant(n, m, 1.0 / n));
}

WeightMatrix uw_pcc(int n, int m) {
  require_dims(n, m);
  return WeightMatrix(MatrixXd::Constant(n, m, 1.0 / (static_cast<double>(n) * m)));
}

WeightMatrix wa_pc(const AccuracyMatrix& V) {
  const VectorXd row_means = V.values().rowwise().mean();
  const double total = row_means.sum();
  if (!(total > 0.0)) throw DomainError("WA-PC needs a positive accuracy somewhere");
  MatrixXd W(V.n(), V.m());
  for (int i = 0; i < V.n(); ++i) W.row(i).setConstant(row_means[i] / total);
  return WeightMatrix(std::move(W));
}

WeightMatrix wa_pcc(const AccuracyMatrix& V) {
  const double total = V.values().sum();
  if (!(total > 0.0)) throw DomainError("WA-PCC needs a positive accuracy somewhere");
  return WeightMatrix(V.values() / total);
}

WeightMatrix bma_weights(const AccuracyMatrix& V) {
  MatrixXd W(V.n(), V.m());
  for (int j = 0; j < V.m(); ++j) {
    const double col = V.values().col(j).sum();
    if (!(col > 0.0)) {
      throw DomainError("BMA needs a positive accuracy in class '" + V.classes().name(j) + "'");
    }
    W.col(j) = V.values().col(j) / col / V.m();
  }
  return WeightMatrix(std::move(W));
}

VectorXd project_to_simplex(const VectorXd& v) {
  const auto n = v.size();
  if (n == 0) throw DomainError("cannot project an empty vector onto the simplex");
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cumulative += u[static_cast<std::size_t>(k)];
    const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (u[static_cast<std::size_t>(k)] - t > 0.0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

DeResult differential_evolution(const AccuracyMatrix& V, const DeParams& params) {
  params.validate();
  const int n = V.n();
  const int np = params.population_size;
  std::mt19937_64 rng(params.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  std::uniform_int_distribution<int> pick_member(0, np - 1);
  std::uniform_int_distribution<int> pick_gene(0, n - 1);

  // Uniform draws from the simplex.
  std::vector<VectorXd> pop(static_cast<std::size_t>(np), VectorXd(n));
  std::vector<double> fit(static_cast<std::size_t>(np));
  for (int p = 0; p < np; ++p) {
    VectorXd& x = pop[static_cast<std::size_t>(p)];
    for (int k = 0; k < n; ++k) x[k] = expo(rng);
    x /= x.sum();
    fit[static_cast<std::size_t>(p)] = de_fitness(V, x);
  }

  const auto best_index = [&] {
    return static_cast<std::size_t>(std::max_element(fit.begin(), fit.end()) - fit.begin());
  };
  DeResult out;
  out.best_history.push_back(fit[best_index()]);

  std::vector<VectorXd> next = pop;
  std::vector<double> next_fit = fit;
  VectorXd trial(n);
  for (int g = 0; g < params.max_generations; ++g) {
    for (int p = 0; p < np; ++p) {
      int r1, r2, r3;
      do { r1 = pick_member(rng); } while (r1 == p);
      do { r2 = pick_member(rng); } while (r2 == p || r2 == r1);
      do { r3 = pick_member(rng); } while (r3 == p || r3 == r1 || r3 == r2);
      const VectorXd& a = pop[static_cast<std::size_t>(r1)];
      const VectorXd& b = pop[static_cast<std::size_t>(r2)];
      const VectorXd& c = pop[static_cast<std::size_t>(r3)];
      const VectorXd& x = pop[static_cast<std::size_t>(p)];
      const int forced = pick_gene(rng);
      for (int k = 0; k < n; ++k) {
        const bool cross = unit(rng) < params.crossover_rate || k == forced;
        trial[k] = cross ? a[k] + params.differential_weight * (b[k] - c[k]) : x[k];
      }
      trial = project_to_simplex(trial);
      const double f = de_fitness(V, trial);
      if (f >= fit[static_cast<std::size_t>(p)]) {
        next[static_cast<std::size_t>(p)] = trial;
        next_fit[static_cast<std::size_t>(p)] = f;
      } else {
        next[static_cast<std::size_t>(p)] = x;
        next_fit[static_cast<std::size_t>(p)] = fit[static_cast<std::size_t>(p)];
      }
    }
    std::swap(pop, next);
    std::swap(fit, next_fit);
    out.best_history.push_back(fit[best_index()]);
  }
  const std::size_t best = best_index();
  out.weights = pop[best];
  out.fitness = fit[best];
  return out;
}

WeightMatrix de_weights(const AccuracyMatrix& V, const DeParams& params) {
  const DeResult r = differential_evolution(V, params);
  MatrixXd W(V.n(), V.m());
  for (int j = 0; j < V.m(); ++j) W.col(j) = r.weights;
  return WeightMatrix(std::move(W));
}

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::UwPc: return "uw-pc";
    case Scheme::UwPcc: return "uw-pcc";
    case Scheme::WaPc: return "wa-pc";
    case Scheme::WaPcc: return "wa-pcc";
    case Scheme::De: return "de";
    case Scheme::Bma: return "bma";
  }
  return "unknown";
}

Scheme parse_scheme(const std::string& name) {
  for (Scheme s : kAllSchemes) {
    if (to_string(s) == name) return s;
  }
  throw ParseError("unknown weighting scheme '" + name + "'");
}

WeightMatrix run_scheme(Scheme scheme, const AccuracyMatrix& V, const DeParams& de) {
  switch (scheme) {
    case Scheme::UwPc: return uw_pc(V.n(), V.m());
    case Scheme::UwPcc: return uw_pcc(V.n(), V.m());
    case Scheme::WaPc: return wa_pc(V);
    case Scheme::WaPcc: return wa_pcc(V);
    case Scheme::De: return de_weights(V, de);
    case Scheme::Bma: return bma_weights(V);
  }
  throw DomainError("unknown weighting scheme");
}

double weighted_accuracy(const AccuracyMatrix& V, const WeightMatrix& W) {
  if (W.n() != V.n() || W.m() != V.m()) {
    throw ShapeError("weight matrix shape does not match accuracy matrix");
  }
  double s = 0.0;
  for (int i = 0; i < V.n(); ++i) {
    for (int j = 0; j < V.m(); ++j) s += W(i, j) * V(i, j);
  }
  return s / V.m();
}

std::pair<SelectionVector, WeightMatrix> baseline_with_selection(Scheme scheme,
                                                                 const AccuracyMatrix& V,
                                                                 int K, const DeParams& de) {
  if (K < 1 || K > V.n()) throw DomainError("ensemble size K must lie in [1, n]");
  std::vector<int> best_members;
  WeightMatrix best_w;
  double best = -std::numeric_limits<double>::infinity();
  std::exception_ptr first_error;
  for (SubsetEnumerator e(V.n(), K); e.current(); e.advance()) {
    const std::vector<int>& members = *e.current();
    const AccuracyMatrix sub = V.subset(members);
    WeightMatrix local;
    try {
      local = run_scheme(scheme, sub, de);
    } catch (const DomainError&) {
      // A subset the scheme cannot weight (e.g. all-zero accuracies) is
      // skipped; the error surfaces only if no subset is usable.
      if (!first_error) first_error = std::current_exception();
      continue;
    }
    WeightMatrix full = WeightMatrix::Zero(V.n(), V.m());
    for (std::size_t r = 0; r < members.size(); ++r) {
      full.values.row(members[r]) = local.values.row(static_cast<Eigen::Index>(r));
    }
    const double score = weighted_accuracy(V, full);
    if (score > best) {
      best = score;
      best_members = members;
      best_w = std::move(full);
    }
  }
  if (best_members.empty()) std::rethrow_exception(first_error);
  return {SelectionVector::FromIndices(V.n(), best_members), std::move(best_w)};
}

}  // namespace ensweight
