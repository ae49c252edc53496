#pragma once

#include "caldoe/calibrate.hpp"
#include "caldoe/pipeline.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace caldoe {

/// A zero-mean squared-exponential GP path on [0,1]^dims, sampled at anchor
/// points and extended everywhere by conditioning on those values.
class DiscrepancyField {
 public:
  /// The identically zero field.
  explicit DiscrepancyField(int dims);
  DiscrepancyField(double tau2, double lengthscale, PointSet anchors, Vector values, Vector weights);

  int dims() const { return dims_; }
  double tau2() const { return tau2_; }
  double lengthscale() const { return lengthscale_; }
  const PointSet& anchors() const { return anchors_; }
  const Vector& values() const { return values_; }

  /// delta(u) at a unit-coordinate point.
  double evaluate(const Vector& u) const;

 private:
  int dims_ = 0;
  double tau2_ = 0.0;
  double lengthscale_ = 1.0;
  PointSet anchors_;
  Vector values_;
  Vector weights_;
};

/// Draws a field with variance tau2 and correlation exp(-|d|^2 / (2 l^2)),
/// anchored at the first `anchors` Sobol points (0 picks max(256, 100 dims)).
/// Relative jitter escalates from 1e-10 to 1e-4 if the anchor correlation
/// matrix does not factor.
DiscrepancyField sample_discrepancy(double tau2, double lengthscale, int dims, std::uint64_t seed, int anchors = 0);

/// y(x) = f(x; eta_true) + delta(x) + e with e ~ N(0, noise_sd^2) drawn from
/// `noise_seed`. x is physical.
double simulate_physical(const ComputerModel& model, const Vector& eta_true, const DiscrepancyField& field,
                         double noise_sd, const Vector& x, std::uint64_t noise_seed);

/// The first `count` Sobol points in [0,1]^dims after skipping the origin and
/// `seed_offset` further points.
PointSet sobol_test_set(int dims, int count, std::uint64_t seed_offset = 0);

enum class BaselineKind { FullFactorial, FractionalFactorial, PureComputerModel };

std::string baseline_name(BaselineKind kind);
BaselineKind parse_baseline(const std::string& name);

/// 2^p corners of [0,1]^p in standard order (x1 alternating fastest), each
/// replicated; replicates are adjacent and share a group.
Design full_factorial_design(int p, int replicates = 2);

/// 2^(5-2) resolution III fraction with generators D = AB and E = AC in
/// -1/+1 coding, mapped to levels {0, 1} and replicated.
Design fractional_factorial_design(int replicates = 2);

/// All n runs spent on D-optimal locations. With a single local search the q
/// points are replicated round-robin; otherwise the pooled local D-optimal
/// points are reduced to n by support points, and identical or rho-close
/// points become replicates.
Design pure_computer_model_design(const PipelineResult& searches, int n, double rho, std::uint64_t seed);

/// The request that yields only the local D-optimal searches (r = 1, n = q,
/// no location-scale points) for pure_computer_model_design.
DesignRequest search_only_request(DesignRequest req, int q);

struct BaselineContext {
  int p = 0;
  int n = 0;
  /// Local searches, required for the pure computer model design.
  const PipelineResult* searches = nullptr;
  double rho = 0.05;
  std::uint64_t seed = 1;
};

/// The named baseline; factorial kinds throw unless n matches their run count.
Design baseline_design(BaselineKind kind, const BaselineContext& context);

struct StudyDesign {
  std::string name;
  Design design;
};

struct StudyConfig {
  std::vector<double> tau2_grid{0.0, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
  int replications = 20;
  /// Physical truth.
  Vector eta_true;
  double noise_sd = 0.05;
  double lengthscale = 0.25;
  int field_anchors = 0;
  int test_points = 500;
  std::uint64_t test_offset = 0;
  /// Calibration settings; the MCMC seed is derived per cell.
  PriorSpec prior;
  McmcConfig mcmc;
  DiscrepancyOptions discrepancy;
  /// Keep per-point absolute errors in the report.
  bool keep_errors = false;
  std::uint64_t seed = 1;
  int jobs = 1;
};

struct CellRecord {
  std::string design;
  double tau2 = 0.0;
  int replication = 0;
  double rmspe = 0.0;
  /// rmspe / rmspe of the first (proposed) design in the same cell.
  double ratio = 0.0;
  bool valid = true;
  std::string error;
  /// |yhat - y| on the test set (empty unless keep_errors).
  Vector abs_errors;
};

struct MedianRow {
  std::string design;
  double tau2 = 0.0;
  double median_ratio = 0.0;
  double median_rmspe = 0.0;
  int valid = 0;
};

struct ComparisonReport {
  std::vector<std::string> designs;
  std::vector<double> tau2_grid;
  int replications = 0;
  /// Ordered by tau2, then replication, then design.
  std::vector<CellRecord> records;
  /// One row per (design, tau2), designs outer.
  std::vector<MedianRow> medians;

  int cells() const { return static_cast<int>(tau2_grid.size()) * replications; }
  /// Cells (tau2, replication) in which every design calibrated.
  int valid_cells() const;
  const MedianRow& median(const std::string& design, double tau2) const;
};

/// For each (tau2, replication): a fresh discrepancy field, outputs simulated
/// on every design with common noise indexed by run, two-step calibration,
/// and RMSPE against simulated outputs on the shared Sobol test set. The
/// first design is the reference for the ratios. Failed calibrations are
/// recorded as invalid records.
ComparisonReport rmspe_study(const std::vector<StudyDesign>& designs, const ComputerModel& model,
                             const StudyConfig& config);

/// records.csv (one row per record) and medians.csv; errors.csv too when the
/// report kept absolute errors.
void write_report(const ComparisonReport& report, const std::string& directory);

}  // namespace caldoe
