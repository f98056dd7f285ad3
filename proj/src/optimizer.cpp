#include "ensweight/optimizer.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

namespace ensweight {

using Eigen::VectorXd;

namespace {

constexpr double kTieTolerance = 1e-9;
constexpr std::uint64_t kMaxEnumeratedSubsets = 5'000'000;

std::vector<double> class_means(const AccuracyMatrix& V) {
  std::vector<double> means(static_cast<std::size_t>(V.m()), 0.0);
  for (int j = 0; j < V.m(); ++j) {
    double s = 0.0;
    for (int i = 0; i < V.n(); ++i) s += V(i, j);
    means[static_cast<std::size_t>(j)] = s / V.n();
  }
  return means;
}

double grand_mean(const AccuracyMatrix& V) {
  double s = 0.0;
  for (int i = 0; i < V.n(); ++i) {
    for (int j = 0; j < V.m(); ++j) s += V(i, j);
  }
  return s / (static_cast<double>(V.n()) * V.m());
}

struct LeafOutcome {
  SubsetResult result;
  double qp_objective = -std::numeric_limits<double>::infinity();
};

LeafOutcome solve_leaf(const AccuracyMatrix& V, const HyperParams& params,
                       std::vector<int> members, double tol) {
  LeafOutcome out;
  const qp::QpProblem problem = build_subset_qp(V, params, members);
  const qp::QpSolution sol = qp::solve_qp(problem, tol);
  out.result.members = std::move(members);
  out.result.status = sol.status;
  out.result.objective = std::numeric_limits<double>::quiet_NaN();
  if (sol.status == qp::QpStatus::Optimal) {
    const WeightMatrix W = expand_subset_weights(V, out.result.members, sol.w);
    out.result.objective = objective_value(V, W, params).total;
    out.qp_objective = sol.objective;
  }
  return out;
}

// True when (objective, members) should replace the incumbent.
bool improves(double objective, const std::vector<int>& members, double best,
              const std::vector<int>* best_members) {
  if (best_members == nullptr) return true;
  if (objective > best + kTieTolerance) return true;
  return std::abs(objective - best) <= kTieTolerance && members < *best_members;
}

MipSolution finish(const AccuracyMatrix& V, const HyperParams& params,
                   const std::vector<int>& members, std::vector<SubsetResult> rank,
                   double tol) {
  const qp::QpSolution sol = qp::solve_qp(build_subset_qp(V, params, members), tol);
  MipSolution out;
  out.selection = SelectionVector::FromIndices(V.n(), members);
  out.weights = expand_subset_weights(V, members, sol.w);
  out.objective = objective_value(V, out.weights, params);
  out.subset_rank = std::move(rank);
  return out;
}

[[noreturn]] void throw_infeasible(const HyperParams& params, std::vector<SubsetResult> rank) {
  std::ostringstream os;
  os << "no subset of " << params.K
     << " classifiers admits weights satisfying every constraint ("
     << rank.size() << " subsets examined)";
  throw AllSubsetsInfeasible(os.str(), std::move(rank));
}

MipSolution solve_by_enumeration(const AccuracyMatrix& V, const HyperParams& params,
                                 const SolveOptions& options) {
  const std::uint64_t total = SubsetEnumerator::count(V.n(), params.K);
  if (total > kMaxEnumeratedSubsets) {
    throw DomainError("too many subsets to enumerate; use branch and bound");
  }
  std::vector<std::vector<int>> subsets;
  subsets.reserve(static_cast<std::size_t>(total));
  for (SubsetEnumerator e(V.n(), params.K); e.current(); e.advance()) {
    subsets.push_back(*e.current());
  }

  std::vector<LeafOutcome> outcomes(subsets.size());
  detail::parallel_for(subsets.size(), detail::resolve_workers(options.workers, subsets.size()),
               [&](std::size_t k) {
                 outcomes[k] = solve_leaf(V, params, subsets[k], options.tol);
               });

  std::vector<SubsetResult> rank;
  rank.reserve(outcomes.size());
  const std::vector<int>* best_members = nullptr;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& o : outcomes) {
    rank.push_back(o.result);
    if (o.result.status != qp::QpStatus::Optimal) continue;
    if (improves(o.result.objective, o.result.members, best, best_members)) {
      best = o.result.objective;
      best_members = &o.result.members;
    }
  }
  if (best_members == nullptr) throw_infeasible(params, std::move(rank));
  const std::vector<int> members = *best_members;
  return finish(V, params, members, std::move(rank), options.tol);
}

// Relaxation of the selection: variables are the weights of every classifier
// not excluded, followed by one selection flag in [0, 1] per undecided
// classifier. Dropping the big-M floor keeps the bound valid.
struct Relaxation {
  qp::QpStatus status = qp::QpStatus::Infeasible;
  double bound = 0.0;
  std::vector<double> flags;  // per undecided classifier
};

Relaxation relax(const AccuracyMatrix& V, const HyperParams& params,
                 const std::vector<int>& included, const std::vector<int>& undecided,
                 double tol) {
  std::vector<int> avail = included;
  avail.insert(avail.end(), undecided.begin(), undecided.end());
  std::sort(avail.begin(), avail.end());
  const int m = V.m();
  const int nw = static_cast<int>(avail.size()) * m;
  const int nf = static_cast<int>(undecided.size());

  qp::QpProblem p = qp::QpProblem::Unconstrained(nw + nf);
  const double q = params.l2_coefficient();
  for (std::size_t r = 0; r < avail.size(); ++r) {
    for (int j = 0; j < m; ++j) {
      const int k = static_cast<int>(r) * m + j;
      p.quadratic[k] = q;
      p.linear[k] = V(avail[r], j) / m;
    }
  }
  const auto flag_index = [&](int classifier) {
    return nw + static_cast<int>(std::find(undecided.begin(), undecided.end(), classifier) -
                                 undecided.begin());
  };

  for (int j = 0; j < m; ++j) {
    VectorXd row = VectorXd::Zero(nw + nf);
    for (std::size_t r = 0; r < avail.size(); ++r) row[static_cast<int>(r) * m + j] = 1.0;
    p.add_eq(row, 1.0);
  }
  if (nf > 0) {
    VectorXd row = VectorXd::Zero(nw + nf);
    row.tail(nf).setOnes();
    p.add_eq(row, static_cast<double>(params.K - static_cast<int>(included.size())));
  }
  for (std::size_t r = 0; r < avail.size(); ++r) {
    const int i = avail[r];
    const bool decided = std::find(included.begin(), included.end(), i) != included.end();
    VectorXd row = VectorXd::Zero(nw + nf);
    row.segment(static_cast<int>(r) * m, m).setConstant(-1.0);
    if (decided) {
      p.add_ineq(row, -static_cast<double>(m));
      p.add_ineq(-row, params.epsilon);
    } else {
      row[flag_index(i)] = m;
      p.add_ineq(row, 0.0);
      VectorXd cap = VectorXd::Zero(nw + nf);
      cap[flag_index(i)] = -1.0;
      p.add_ineq(cap, -1.0);
    }
  }
  const std::vector<double> means = class_means(V);
  VectorXd overall = VectorXd::Zero(nw + nf);
  for (int j = 0; j < m; ++j) {
    VectorXd row = VectorXd::Zero(nw + nf);
    for (std::size_t r = 0; r < avail.size(); ++r) {
      row[static_cast<int>(r) * m + j] = V(avail[r], j);
      overall[static_cast<int>(r) * m + j] = V(avail[r], j) / m;
    }
    p.add_ineq(row, means[static_cast<std::size_t>(j)] + params.epsilon);
  }
  p.add_ineq(overall, grand_mean(V) + params.epsilon);

  const qp::QpSolution sol = qp::solve_qp(p, tol);
  Relaxation out;
  out.status = sol.status;
  out.bound = sol.status == qp::QpStatus::Optimal ? sol.objective
                                                  : std::numeric_limits<double>::infinity();
  out.flags.resize(static_cast<std::size_t>(nf), 0.5);
  if (sol.status == qp::QpStatus::Optimal) {
    for (int f = 0; f < nf; ++f) out.flags[static_cast<std::size_t>(f)] = sol.w[nw + f];
  }
  return out;
}

MipSolution solve_by_branch_and_bound(const AccuracyMatrix& V, const HyperParams& params,
                                      const SolveOptions& options) {
  struct Node {
    std::vector<int> included;
    std::vector<int> excluded;
    double bound;
    std::vector<double> flags;
    std::uint64_t seq;
  };
  const auto worse = [](const Node& a, const Node& b) {
    if (a.bound != b.bound) return a.bound < b.bound;
    return a.seq > b.seq;
  };
  std::priority_queue<Node, std::vector<Node>, decltype(worse)> open(worse);
  std::uint64_t seq = 0;

  const int n = V.n();
  const int K = params.K;
  const auto undecided_of = [&](const Node& node) {
    std::vector<int> out;
    for (int i = 0; i < n; ++i) {
      if (std::find(node.included.begin(), node.included.end(), i) == node.included.end() &&
          std::find(node.excluded.begin(), node.excluded.end(), i) == node.excluded.end()) {
        out.push_back(i);
      }
    }
    return out;
  };

  std::vector<SubsetResult> rank;
  std::vector<int> best_members;
  bool have_best = false;
  double best_qp = -std::numeric_limits<double>::infinity();
  // Bounds carry solver error; keep nodes that could still tie.
  const double slack = 1e-7;

  const auto push = [&](Node node) {
    const std::vector<int> undecided = undecided_of(node);
    const int inc = static_cast<int>(node.included.size());
    if (inc > K || inc + static_cast<int>(undecided.size()) < K) return;
    const bool leaf = inc == K || inc + static_cast<int>(undecided.size()) == K;
    if (!leaf) {
      const Relaxation r = relax(V, params, node.included, undecided, options.tol);
      if (r.status == qp::QpStatus::Infeasible) return;
      node.bound = r.bound;
      node.flags = r.flags;
    }
    node.seq = seq++;
    open.push(std::move(node));
  };

  push(Node{{}, {}, std::numeric_limits<double>::infinity(), {}, 0});
  while (!open.empty()) {
    Node node = open.top();
    open.pop();
    if (have_best && node.bound < best_qp - slack) continue;
    std::vector<int> undecided = undecided_of(node);
    const int inc = static_cast<int>(node.included.size());
    if (inc == K || inc + static_cast<int>(undecided.size()) == K) {
      std::vector<int> members = node.included;
      if (inc < K) members.insert(members.end(), undecided.begin(), undecided.end());
      std::sort(members.begin(), members.end());
      LeafOutcome o = solve_leaf(V, params, members, options.tol);
      if (o.result.status == qp::QpStatus::Optimal &&
          improves(o.qp_objective, o.result.members, best_qp,
                   have_best ? &best_members : nullptr)) {
        best_qp = o.qp_objective;
        best_members = o.result.members;
        have_best = true;
      }
      rank.push_back(std::move(o.result));
      continue;
    }
    // Branch on the undecided classifier the relaxation leans on most.
    std::size_t pick = 0;
    for (std::size_t f = 1; f < undecided.size(); ++f) {
      if (node.flags[f] > node.flags[pick]) pick = f;
    }
    const int branch = undecided[pick];
    Node in{node.included, node.excluded, node.bound, {}, 0};
    in.included.push_back(branch);
    std::sort(in.included.begin(), in.included.end());
    Node out{node.included, node.excluded, node.bound, {}, 0};
    out.excluded.push_back(branch);
    std::sort(out.excluded.begin(), out.excluded.end());
    push(std::move(in));
    push(std::move(out));
  }
  if (!have_best) throw_infeasible(params, std::move(rank));
  return finish(V, params, best_members, std::move(rank), options.tol);
}

std::string classifier_location(const AccuracyMatrix& V, int i) {
  return "classifier " + V.classifiers().name(i);
}

std::string class_location(const AccuracyMatrix& V, int j) {
  return "class " + V.classes().name(j);
}

}  // namespace

SubsetEnumerator::SubsetEnumerator(int n, int K) : n_(n) {
  if (K <= 0 || n > 30) throw DomainError("subset enumeration needs 0 < K <= n <= 30");
  if (K > n) throw DomainError("cannot choose K > n classifiers");
  std::vector<int> first(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) first[static_cast<std::size_t>(k)] = k;
  current_ = std::move(first);
}

void SubsetEnumerator::advance() {
  if (!current_) return;
  auto& c = *current_;
  const int K = static_cast<int>(c.size());
  int k = K - 1;
  while (k >= 0 && c[static_cast<std::size_t>(k)] == n_ - K + k) --k;
  if (k < 0) {
    current_.reset();
    return;
  }
  ++c[static_cast<std::size_t>(k)];
  for (int t = k + 1; t < K; ++t) c[static_cast<std::size_t>(t)] = c[static_cast<std::size_t>(t) - 1] + 1;
}

std::uint64_t SubsetEnumerator::count(int n, int K) {
  if (K < 0 || K > n) return 0;
  std::uint64_t c = 1;
  K = std::min(K, n - K);
  for (int k = 1; k <= K; ++k) c = c * static_cast<std::uint64_t>(n - K + k) / static_cast<std::uint64_t>(k);
  return c;
}

std::vector<SelectionVector> enumerate_subsets(int n, int K) {
  std::vector<SelectionVector> out;
  for (SubsetEnumerator e(n, K); e.current(); e.advance()) {
    out.push_back(SelectionVector::FromIndices(n, *e.current()));
  }
  return out;
}

qp::QpProblem build_subset_qp(const AccuracyMatrix& V, const HyperParams& params,
                              std::span<const int> members) {
  const int K = static_cast<int>(members.size());
  const int m = V.m();
  const int nx = K * m;
  qp::QpProblem p = qp::QpProblem::Unconstrained(nx);
  p.quadratic.setConstant(params.l2_coefficient());
  for (int r = 0; r < K; ++r) {
    for (int j = 0; j < m; ++j) p.linear[r * m + j] = V(members[static_cast<std::size_t>(r)], j) / m;
  }

  for (int j = 0; j < m; ++j) {
    VectorXd row = VectorXd::Zero(nx);
    for (int r = 0; r < K; ++r) row[r * m + j] = 1.0;
    p.add_eq(row, 1.0, "(5) " + V.classes().name(j));
  }
  for (int r = 0; r < K; ++r) {
    const std::string& name = V.classifiers().name(members[static_cast<std::size_t>(r)]);
    VectorXd row = VectorXd::Zero(nx);
    row.segment(r * m, m).setOnes();
    p.add_ineq(-row, -static_cast<double>(m), "(6) " + name);
    p.add_ineq(row, params.epsilon, "(7) " + name);
  }
  const std::vector<double> means = class_means(V);
  VectorXd overall = VectorXd::Zero(nx);
  for (int j = 0; j < m; ++j) {
    VectorXd row = VectorXd::Zero(nx);
    for (int r = 0; r < K; ++r) {
      const double v = V(members[static_cast<std::size_t>(r)], j);
      row[r * m + j] = v;
      overall[r * m + j] = v / m;
    }
    p.add_ineq(row, means[static_cast<std::size_t>(j)] + params.epsilon,
               "(8) " + V.classes().name(j));
  }
  p.add_ineq(overall, grand_mean(V) + params.epsilon, "(9) overall");
  return p;
}

WeightMatrix expand_subset_weights(const AccuracyMatrix& V, std::span<const int> members,
                                   const VectorXd& w) {
  const int m = V.m();
  if (w.size() != static_cast<Eigen::Index>(members.size()) * m) {
    throw ShapeError("subset weight vector has wrong length");
  }
  WeightMatrix W = WeightMatrix::Zero(V.n(), m);
  for (std::size_t r = 0; r < members.size(); ++r) {
    for (int j = 0; j < m; ++j) W(members[r], j) = w[static_cast<int>(r) * m + j];
  }
  return W;
}

MipSolution solve_weighting(const AccuracyMatrix& V, const HyperParams& params,
                            const SolveOptions& options) {
  params.validate(V.n());
  if (options.method == SearchMethod::BranchAndBound) {
    return solve_by_branch_and_bound(V, params, options);
  }
  return solve_by_enumeration(V, params, options);
}

bool ConstraintReport::conformant() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const ConstraintCheck& c) { return c.satisfied; });
}

const ConstraintCheck& ConstraintReport::check(int id) const {
  for (const auto& c : checks) {
    if (c.id == id) return c;
  }
  throw DomainError("no constraint with id " + std::to_string(id));
}

ConstraintReport validate_constraints(const AccuracyMatrix& V, const WeightMatrix& W,
                                      const SelectionVector& X, const HyperParams& params,
                                      double tol) {
  const int n = V.n();
  const int m = V.m();
  if (W.n() != n || W.m() != m || X.size() != n) {
    throw ShapeError("weights or selection do not match the accuracy matrix shape");
  }
  ConstraintReport report;
  report.tolerance = tol;
  const auto record = [&](int id, std::string name) -> ConstraintCheck& {
    ConstraintCheck c;
    c.id = id;
    c.name = std::move(name);
    report.checks.push_back(std::move(c));
    return report.checks.back();
  };
  const auto note = [](ConstraintCheck& c, double violation, const std::string& where) {
    if (violation > c.worst_violation) {
      c.worst_violation = violation;
      c.location = where;
    }
  };

  auto& binary = record(2, "selection flags are binary");
  for (int i = 0; i < n; ++i) {
    const double x = X[i];
    note(binary, std::min(std::abs(x), std::abs(x - 1.0)), classifier_location(V, i));
  }

  auto& nonneg = record(3, "weights are non-negative");
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      note(nonneg, -W(i, j),
           "(" + V.classifiers().name(i) + ", " + V.classes().name(j) + ")");
    }
  }

  auto& size = record(4, "exactly K classifiers selected");
  double selected = 0.0;
  for (int i = 0; i < n; ++i) selected += X[i];
  note(size, std::abs(selected - params.K), "global");

  auto& columns = record(5, "class weights sum to one");
  const VectorXd col = W.column_sums();
  for (int j = 0; j < m; ++j) note(columns, std::abs(col[j] - 1.0), class_location(V, j));

  auto& unselected = record(6, "unselected classifiers carry no weight");
  auto& floor = record(7, "selected classifiers carry some weight");
  for (int i = 0; i < n; ++i) {
    const double row = W.values.row(i).sum();
    note(unselected, row - m * static_cast<double>(X[i]), classifier_location(V, i));
    note(floor, params.epsilon - (row + params.big_m * (1.0 - X[i])),
         classifier_location(V, i));
  }

  auto& per_class = record(8, "per-class weighted accuracy beats uniform");
  const std::vector<double> means = class_means(V);
  double weighted_total = 0.0;
  for (int j = 0; j < m; ++j) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += W(i, j) * V(i, j);
    weighted_total += acc;
    note(per_class, means[static_cast<std::size_t>(j)] + params.epsilon - acc,
         class_location(V, j));
  }

  auto& overall = record(9, "overall weighted accuracy beats uniform");
  note(overall, grand_mean(V) + params.epsilon - weighted_total / m, "global");

  for (auto& c : report.checks) c.satisfied = c.worst_violation <= tol;
  return report;
}

TuneResult tune_hyperparams(const AccuracyMatrix& V, const HyperParams& start,
                            double lambda_step, double alpha_step, const TuneScore& score,
                            const SolveOptions& options, int max_moves) {
  if (!(lambda_step > 0.0) || !(alpha_step > 0.0)) {
    throw DomainError("tuning steps must be positive");
  }
  start.validate(V.n());
  TuneResult out;
  HyperParams current = start;
  out.solution = solve_weighting(V, current, options);
  out.score = score(out.solution, current);
  out.evaluations = 1;

  for (int coord = 0; coord < 2; ++coord) {
    const double step = coord == 0 ? lambda_step : alpha_step;
    bool moved = false;
    for (const double dir : {1.0, -1.0}) {
      if (moved) break;
      for (int move = 0; move < max_moves; ++move) {
        HyperParams trial = current;
        double& value = coord == 0 ? trial.lambda : trial.alpha;
        const double before = value;
        value += dir * step;
        value = coord == 0 ? std::max(0.0, value) : std::clamp(value, 0.0, 1.0);
        if (value == before) break;
        MipSolution sol = solve_weighting(V, trial, options);
        const double s = score(sol, trial);
        ++out.evaluations;
        if (!(s > out.score)) break;
        current = trial;
        out.score = s;
        out.solution = std::move(sol);
        moved = true;
      }
    }
  }
  out.lambda = current.lambda;
  out.alpha = current.alpha;
  return out;
}

}  // namespace ensweight
