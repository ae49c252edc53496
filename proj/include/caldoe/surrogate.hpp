#pragma once

#include "caldoe/gp.hpp"
#include "caldoe/model.hpp"

#include <cstdint>
#include <memory>
#include <string>

namespace caldoe {

/// GP emulator of a computer model over u = (x, eta). Inputs are mapped to
/// the unit cube (x by x_bounds, eta by eta_bounds) before the GP sees them.
class GPSurrogate {
 public:
  GPSurrogate(std::vector<Interval> x_bounds, std::vector<Interval> eta_bounds, GaussianProcess gp);

  /// Fits by maximum likelihood to physical-unit inputs (p + q columns).
  /// Needs at least p + q + 2 runs.
  static GPSurrogate fit(std::vector<Interval> x_bounds, std::vector<Interval> eta_bounds,
                         const PointSet& inputs, const Vector& outputs, const GpFitOptions& options = {});

  int p() const { return static_cast<int>(x_bounds_.size()); }
  int q() const { return static_cast<int>(eta_bounds_.size()); }
  const std::vector<Interval>& x_bounds() const { return x_bounds_; }
  const std::vector<Interval>& eta_bounds() const { return eta_bounds_; }
  const GaussianProcess& gp() const { return *gp_; }
  std::shared_ptr<const GaussianProcess> shared_gp() const { return gp_; }

  /// Unit-cube u for physical x and eta.
  Vector to_unit(const Vector& x, const Vector& eta) const;

  /// Posterior mean and variance at physical (x, eta).
  std::pair<double, double> posterior(const Vector& x, const Vector& eta) const;

  /// The posterior mean as a computer model.
  ComputerModel mean_model(const std::string& name = "surrogate-mean") const;

 private:
  std::vector<Interval> x_bounds_;
  std::vector<Interval> eta_bounds_;
  std::shared_ptr<const GaussianProcess> gp_;
};

/// One posterior sample path. Values are drawn jointly at anchor points
/// (Sobol points over x-space at a fixed eta slice) and the path elsewhere is
/// the posterior mean conditioned on those values, so anchors are reproduced
/// exactly and the path stays smooth in both x and eta.
class Realization {
 public:
  Realization(std::shared_ptr<const GaussianProcess> gp, PointSet anchors, Vector values, Vector anchor_weights,
              Vector training_weights);

  const PointSet& anchors() const { return anchors_; }
  const Vector& values() const { return values_; }

  /// Path value at a unit-cube u = (x, eta).
  double evaluate(const Vector& u) const;

 private:
  std::shared_ptr<const GaussianProcess> gp_;
  PointSet anchors_;
  Vector values_;
  Vector anchor_weights_;
  Vector training_weights_;
};

/// Draws a realization at the physical eta slice with `anchor_density` Sobol
/// anchors in x. Deterministic given the seed.
Realization sample_realization(const GPSurrogate& surrogate, const Vector& eta_slice, int anchor_density,
                               std::uint64_t seed);

/// Wraps a realization as a computer model with the surrogate's bounds.
ComputerModel realization_model(const GPSurrogate& surrogate, std::shared_ptr<const Realization> path,
                                const std::string& name = "realization");

/// For each design point (unit x), the index of the training run whose x part
/// is nearest in the unit cube.
std::vector<int> nearest_training_points(const GPSurrogate& surrogate, const PointSet& design_unit);

/// Reads computer-experiment runs: columns x1..xp, eta1..etaq and y (any
/// order, matched by name).
std::pair<PointSet, Vector> read_computer_experiment(const std::string& path, int p, int q);

}  // namespace caldoe
