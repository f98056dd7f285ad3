#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ensweight/core.hpp"

namespace ensweight {

struct FoldAssignment {
  int k = 0;
  /// Fold index in [0, k) per instance.
  std::vector<int> folds;
  std::vector<std::string> warnings;
};

/// Shuffles each class with a seeded generator and deals its instances to the
/// folds round-robin. The dealing position carries over from one class to the
/// next, so small classes do not all land in fold 0. Labels are class indices.
FoldAssignment stratified_folds(std::span<const int> labels, int k, std::uint64_t seed);

struct ResamplePlan {
  std::vector<std::int64_t> targets;
  std::uint64_t rng_seed = 0;
  /// Whether the targets sum to the original instance count.
  bool preserves_total = true;

  std::int64_t total() const;
};

/// Instance indices after resampling each class to its target. Classes above
/// target are undersampled without replacement; classes below keep every
/// instance and add duplicates drawn with replacement. Output is grouped by
/// class in class order.
std::vector<std::size_t> resample(std::span<const int> labels, const ResamplePlan& plan);

/// Keeps the majority count, sets the minority to round(majority / rho) and
/// moves the difference into the second-largest class so the total is
/// unchanged. rho == 1 gives a balanced split of the total. With two classes
/// the minority becomes round(total / (rho + 1)) and the majority the rest.
ResamplePlan ratio_targets(const ClassDistribution& d, double target_rho,
                           std::uint64_t seed = 0);

/// Step imbalance over m classes with the last r classes as minorities:
/// y = round(total / (rho * (m - r) + r)) per minority and
/// z = round((total - r * y) / (m - r)) per majority class.
ResamplePlan step_targets(std::int64_t total, int m, int r, double target_rho,
                          std::uint64_t seed = 0);

}  // namespace ensweight
