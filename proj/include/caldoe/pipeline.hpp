#pragma once

#include "caldoe/doptimal.hpp"
#include "caldoe/reduce.hpp"
#include "caldoe/spacefill.hpp"
#include "caldoe/surrogate.hpp"

#include <cstdint>
#include <vector>

namespace caldoe {

struct DesignRequest {
  int n = 8;
  /// Replicates of the D-optimal points (a confidence parameter once
  /// parameter uncertainty enters).
  int r = 2;
  /// Prior representatives for the Bayes and surrogate regimes.
  int m = 20;
  bool include_location_scale = true;
  /// Point estimate for the local regime (physical units).
  Vector eta0;
  PriorSpec prior;
  /// Optional per-dimension levels for the space-filling points.
  std::vector<std::vector<double>> levels;
  SpaceFillCriterion criterion = SpaceFillCriterion::MaxPro;
  /// Merge radius in unit coordinates.
  double rho = 0.05;
  /// Search settings; the seed field is replaced by seeds derived from `seed`.
  SearchConfig search;
  int anchor_density = 256;
  std::uint64_t seed = 1;
  int jobs = 1;
};

/// The design plus the intermediate quantities worth reporting.
struct PipelineResult {
  Design design;
  /// Parameter values the local searches ran at (one row each).
  PointSet eta_samples;
  /// Log |det J| of each local D-optimal design.
  std::vector<double> log_objectives;
  /// All local D-optimal points before reduction (q rows per sample).
  PointSet local_points;
  PointSet maxima;
  PointSet minima;
};

/// Checks n >= q r + 2 (with location-scale points), r >= 0, m >= 1, rho >= 0.
void validate_request(const DesignRequest& req, int q);

/// r replicates of the q D-optimal points at eta0, the model maximizer and
/// minimizer, then space-filling points up to n.
PipelineResult robust_design_local(const ComputerModel& model, const DesignRequest& req);

/// Parameter uncertainty: local designs and extrema at m prior
/// representatives, reduced by support points, merged, then augmented.
PipelineResult robust_design_bayes(const ComputerModel& model, const DesignRequest& req);

/// As robust_design_bayes, with each representative paired with its own
/// posterior realization of the surrogate.
PipelineResult robust_design_surrogate(const GPSurrogate& surrogate, const DesignRequest& req);

/// Single-linkage merge: points of the same role within L2 distance rho are
/// chained into one cluster, moved to the cluster centroid and given one
/// replicate group. Groups are renumbered by first appearance.
Design merge_replicates(const Design& design, double rho);

/// Moves each extremum point within rho of a D-optimal location onto that
/// location and into its replicate group. Roles are kept.
Design attach_extrema(const Design& design, double rho);

}  // namespace caldoe
