#pragma once

#include "caldoe/design.hpp"

#include <cstdint>
#include <vector>

namespace caldoe {

enum class SpaceFillCriterion { MaxPro, Maximin };

SpaceFillCriterion parse_criterion(const std::string& name);

/// MaxPro criterion { C(n,2)^-1 sum_{i<j} prod_l (x_il - x_jl)^-2 }^(1/p).
/// Returns +inf when two points share a coordinate. Needs >= 2 points.
double maxpro_criterion(const PointSet& points);

/// Smallest pairwise Euclidean distance (larger is better). Needs >= 2 points.
double maximin_criterion(const PointSet& points);

/// Rows of `points` with exact duplicates removed (first occurrence kept).
PointSet distinct_rows(const PointSet& points);

/// Greedy cost of adding `candidate` next to `existing` (lower is better):
/// MaxPro adds sum_e prod_l (z_l - e_l)^-2 (+inf on a shared coordinate),
/// maximin uses minus the distance to the nearest existing point.
double augmentation_cost(SpaceFillCriterion criterion, const PointSet& existing, const Vector& candidate);

struct AugmentPlan {
  Design existing;
  int n_add = 0;
  /// Allowed levels per dimension; an empty list leaves that dimension
  /// continuous. Either empty or one entry per dimension.
  std::vector<std::vector<double>> levels;
  std::uint64_t seed = 1;
  SpaceFillCriterion criterion = SpaceFillCriterion::MaxPro;
  /// Local searches per greedy step (continuous dimensions).
  int multistarts = 10;
  /// Random candidates screened per greedy step.
  int candidates = 1024;
};

/// Adds plan.n_add points one at a time, each minimizing augmentation_cost
/// against everything placed so far. New points are tagged SPACEFILL with a
/// fresh replicate group each.
Design augment(int dims, const AugmentPlan& plan);

}  // namespace caldoe
