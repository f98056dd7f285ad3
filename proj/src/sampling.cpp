#include "ensweight/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace ensweight {

namespace {

std::vector<std::vector<std::size_t>> group_by_class(std::span<const int> labels, int m) {
  std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(m));
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const int label = labels[k];
    if (label < 0 || label >= m) {
      throw DomainError("label " + std::to_string(label) + " at position " +
                        std::to_string(k) + " is outside the class range");
    }
    groups[static_cast<std::size_t>(label)].push_back(k);
  }
  return groups;
}

std::int64_t round_count(double x) { return static_cast<std::int64_t>(std::llround(x)); }

}  // namespace

FoldAssignment stratified_folds(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) throw DomainError("stratified folds need k >= 2");
  int m = 0;
  for (int label : labels) m = std::max(m, label + 1);
  auto groups = group_by_class(labels, m);

  FoldAssignment out;
  out.k = k;
  out.folds.assign(labels.size(), -1);
  std::mt19937_64 rng(seed);
  int offset = 0;
  for (int j = 0; j < m; ++j) {
    auto& members = groups[static_cast<std::size_t>(j)];
    if (members.empty()) continue;
    if (static_cast<int>(members.size()) < k) {
      std::ostringstream os;
      os << "class " << j << " has " << members.size() << " instance(s), fewer than k=" << k
         << "; some folds will not contain it";
      out.warnings.push_back(os.str());
    }
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t t = 0; t < members.size(); ++t) {
      out.folds[members[t]] = static_cast<int>((static_cast<std::size_t>(offset) + t) %
                                               static_cast<std::size_t>(k));
    }
    offset = static_cast<int>((static_cast<std::size_t>(offset) + members.size()) %
                              static_cast<std::size_t>(k));
  }
  return out;
}

std::int64_t ResamplePlan::total() const {
  return std::accumulate(targets.begin(), targets.end(), std::int64_t{0});
}

std::vector<std::size_t> resample(std::span<const int> labels, const ResamplePlan& plan) {
  const int m = static_cast<int>(plan.targets.size());
  if (m == 0) throw DomainError("resample plan has no classes");
  for (auto t : plan.targets) {
    if (t < 0) throw DomainError("resample targets must be non-negative");
  }
  const auto groups = group_by_class(labels, m);
  std::mt19937_64 rng(plan.rng_seed);
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(plan.total()));
  for (int j = 0; j < m; ++j) {
    std::vector<std::size_t> members = groups[static_cast<std::size_t>(j)];
    const auto have = static_cast<std::int64_t>(members.size());
    const std::int64_t target = plan.targets[static_cast<std::size_t>(j)];
    if (have == 0 && target > 0) {
      throw DomainError("class " + std::to_string(j) + " has no instances but target " +
                        std::to_string(target));
    }
    if (target <= have) {
      // Partial Fisher-Yates: the first `target` entries are a uniform sample
      // without replacement.
      for (std::int64_t t = 0; t < target; ++t) {
        std::uniform_int_distribution<std::int64_t> pick(t, have - 1);
        std::swap(members[static_cast<std::size_t>(t)],
                  members[static_cast<std::size_t>(pick(rng))]);
      }
      out.insert(out.end(), members.begin(), members.begin() + target);
    } else {
      out.insert(out.end(), members.begin(), members.end());
      std::uniform_int_distribution<std::int64_t> pick(0, have - 1);
      for (std::int64_t t = have; t < target; ++t) {
        out.push_back(members[static_cast<std::size_t>(pick(rng))]);
      }
    }
  }
  return out;
}

ResamplePlan ratio_targets(const ClassDistribution& d, double target_rho, std::uint64_t seed) {
  if (!(target_rho >= 1.0) || !std::isfinite(target_rho)) {
    throw DomainError("target imbalance ratio must be finite and >= 1");
  }
  const auto& counts = d.counts();
  const int m = d.size();
  ResamplePlan plan;
  plan.rng_seed = seed;
  plan.targets = counts;
  if (m == 1) return plan;

  if (target_rho == 1.0) {
    const std::int64_t base = d.total() / m;
    const std::int64_t extra = d.total() % m;
    for (int j = 0; j < m; ++j) plan.targets[static_cast<std::size_t>(j)] = base + (j < extra ? 1 : 0);
    return plan;
  }

  const auto majority = static_cast<std::size_t>(
      std::max_element(counts.begin(), counts.end()) - counts.begin());
  const auto minority = static_cast<std::size_t>(
      std::min_element(counts.begin(), counts.end()) - counts.begin());

  if (m == 2) {
    const std::int64_t nu = round_count(static_cast<double>(d.total()) / (target_rho + 1.0));
    if (nu <= 0) throw DomainError("target ratio leaves the minority class empty");
    plan.targets[minority] = nu;
    plan.targets[majority] = d.total() - nu;
    return plan;
  }

  const std::int64_t nu =
      round_count(static_cast<double>(counts[majority]) / target_rho);
  if (nu <= 0) throw DomainError("target ratio leaves the minority class empty");
  std::size_t repair = counts.size();
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (j == majority || j == minority) continue;
    if (repair == counts.size() || counts[j] > counts[repair]) repair = j;
  }
  plan.targets[minority] = nu;
  plan.targets[repair] += counts[minority] - nu;
  if (plan.targets[repair] < 0) {
    throw DomainError("target ratio cannot be reached while preserving the total");
  }
  return plan;
}

ResamplePlan step_targets(std::int64_t total, int m, int r, double target_rho,
                          std::uint64_t seed) {
  if (r < 1 || r >= m) throw DomainError("step imbalance needs 1 <= r < m");
  if (!(target_rho > 1.0) || !std::isfinite(target_rho)) {
    throw DomainError("step imbalance needs a finite target ratio > 1");
  }
  if (total <= 0) throw DomainError("step imbalance needs a positive total");
  const std::int64_t y = round_count(static_cast<double>(total) / (target_rho * (m - r) + r));
  if (y <= 0) throw DomainError("minority class count rounds to zero");
  const std::int64_t z = round_count(static_cast<double>(total - r * y) / (m - r));
  ResamplePlan plan;
  plan.rng_seed = seed;
  plan.targets.assign(static_cast<std::size_t>(m), z);
  for (int j = m - r; j < m; ++j) plan.targets[static_cast<std::size_t>(j)] = y;
  plan.preserves_total = plan.total() == total;
  return plan;
}

}  // namespace ensweight
