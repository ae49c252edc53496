#pragma once

#include "caldoe/common.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace caldoe {

class Rng;

/// Marginal prior of one calibration parameter.
struct ParameterPrior {
  enum class Kind { Normal, Uniform };
  Kind kind = Kind::Normal;
  double a = 0.0;  // mean (normal) or lower end (uniform)
  double b = 1.0;  // sd (normal) or upper end (uniform)

  static ParameterPrior normal(double mean, double sd) { return {Kind::Normal, mean, sd}; }
  static ParameterPrior uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }

  void validate(const std::string& where) const;
  double mean() const;
  double sd() const;
  /// Inverse CDF at u in (0, 1).
  double quantile(double u) const;
  /// Log density up to a constant; -inf outside the support.
  double log_density(double x) const;
  double cdf(double x) const;
  double sample(Rng& rng) const;
};

/// Independent priors over eta.
struct PriorSpec {
  std::vector<ParameterPrior> params;

  int dims() const { return static_cast<int>(params.size()); }
  void validate(int q) const;
  Vector mean() const;
  double log_density(const Vector& eta) const;
  Vector sample(Rng& rng) const;
};

/// Energy objective of a reduced set against candidates, without the
/// constant candidate-candidate term:
///   2/(kN) sum_i sum_j |c_j - x_i| - 1/k^2 sum_i sum_j |x_j - x_i|.
double energy_distance(const PointSet& reduced, const PointSet& candidates);

struct SupportPointsOptions {
  int max_iterations = 200;
  /// Stop when the largest coordinate move of an iteration is below this.
  double tolerance = 1e-7;
  /// Clamp iterates back into [0,1]^d after each update.
  bool clamp_unit = false;
};

/// k support points of the candidate set by the convex-concave fixed-point
/// iteration, started from a seeded random k-subset.
PointSet support_points(const PointSet& candidates, int k, std::uint64_t seed,
                        const SupportPointsOptions& options = {});

/// m representative draws of the prior: support points of a stratified
/// (Latin hypercube) sample of oversample*m prior draws. Each coordinate is
/// scaled by its prior spread during the reduction. Results for uniform
/// priors are clamped into the prior support.
PointSet prior_representatives(const PriorSpec& prior, int m, std::uint64_t seed, int oversample = 50,
                               const SupportPointsOptions& options = {});

/// Lloyd k-means centroids, for comparison with support points.
PointSet kmeans_reduce(const PointSet& candidates, int k, std::uint64_t seed, int max_iterations = 100);

}  // namespace caldoe
