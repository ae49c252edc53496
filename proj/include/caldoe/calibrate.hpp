#pragma once

#include "caldoe/gp.hpp"
#include "caldoe/model.hpp"
#include "caldoe/reduce.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace caldoe {

/// Physical-experiment data in physical units.
struct CalibrationData {
  PointSet x;
  Vector y;
};

/// Reads columns x1..xp and y (matched by name, other columns ignored).
CalibrationData read_physical_data(const std::string& path, int p);

struct McmcConfig {
  int iterations = 10000;
  int burn_in = 5000;
  int thin = 5;
  /// Acceptance rate the per-coordinate step sizes are tuned toward.
  double target_acceptance = 0.44;
  /// Prior sd of beta0 and beta1 (mean 0).
  double beta_sd = 10.0;
  /// Half-normal scale of sigma as a multiple of the sample sd of y.
  double sigma_scale = 10.0;
  /// Hold beta0 = beta1 = 0, which calibrates y = f(x; eta) + e.
  bool fix_beta = false;
  /// Store kept draws in pairs that share (eta, sigma) and use mirrored
  /// normals for (beta0, beta1). Each draw is still an exact conditional
  /// draw; the pair average removes the beta noise from mean predictions.
  bool antithetic_beta = true;
  int max_init_tries = 50;
  std::uint64_t seed = 1;
};

struct PosteriorDraws {
  PointSet eta;  // one draw per row
  Vector beta0;
  Vector beta1;
  Vector sigma2;

  int size() const { return static_cast<int>(eta.rows()); }
};

struct McmcDiagnostics {
  /// Post-burn-in acceptance rate averaged over the random-walk coordinates.
  double acceptance_rate = 0.0;
  /// Per coordinate, in the order eta1..etaq, beta0, beta1, log sigma.
  Vector coordinate_acceptance;
  /// Split-chain potential scale reduction per reported parameter, in the
  /// order eta1..etaq, beta0, beta1, sigma2.
  Vector split_rhat;
  /// Final random-walk steps for eta1..etaq and log sigma.
  Vector step_sizes;
};

/// Posterior draws of (eta, beta0, beta1, sigma^2) plus the discrepancy fit.
struct CalibrationFit {
  ComputerModel model;
  PosteriorDraws draws;
  McmcDiagnostics diagnostics;
  /// Residuals y_i - fhat(x_i) at the data points (set by fit_discrepancy).
  Vector residuals;
  /// Zero-mean GP over unit x-coordinates fitted to the residuals.
  std::optional<GaussianProcess> discrepancy;
};

/// Posterior sampling for y ~ N(b0 + (1 + b1) f(x; eta), s^2) with
/// b ~ N(0, beta_sd^2), s ~ half-normal(sigma_scale * sd(y)) and the eta prior
/// truncated to the model's eta_bounds. The b's are integrated out: eta and
/// log s move by per-coordinate random-walk Metropolis on the marginal
/// posterior, and each kept draw gets b from its exact Gaussian conditional.
/// Step sizes adapt during burn-in only.
CalibrationFit run_mcmc(const ComputerModel& model, const CalibrationData& data, const PriorSpec& prior,
                        const McmcConfig& config);

/// (1/N) sum_i { b0_i + (1 + b1_i) f(x; eta_i) } at physical x.
double predict_mean_model(const CalibrationFit& fit, const Vector& x);

/// Where the observation-noise variance of the residual GP comes from.
enum class NoiseSource {
  /// Posterior mean of sigma^2 from the chain.
  Posterior,
  /// Pooled within-group variance of replicated locations (identical x);
  /// falls back to Posterior without replicates.
  Replicates,
  /// Maximum likelihood, bounded below by noise_floor * posterior mean sigma^2.
  Likelihood,
};

struct DiscrepancyOptions {
  /// Fixed noise variance; overrides `source`.
  std::optional<double> noise_variance;
  NoiseSource source = NoiseSource::Replicates;
  double noise_floor = 0.01;
  /// Fixed lengthscales and variance; both unset means maximum likelihood.
  std::optional<Vector> theta;
  std::optional<double> tau2;
  GpFitOptions fit;
};

/// Pooled replicate variance sum_g sum_i (y_gi - ybar_g)^2 / (n - groups)
/// over rows with identical x, or nullopt without replicates.
std::optional<double> replicate_variance(const CalibrationData& data);

/// Fits the discrepancy GP to delta_i = y_i - fhat(x_i).
CalibrationFit fit_discrepancy(CalibrationFit fit, const CalibrationData& data, const DiscrepancyOptions& options = {});

/// fhat(x) + deltahat(x); the discrepancy term is 0 when none was fitted.
double predict_calibrated(const CalibrationFit& fit, const Vector& x);

/// Writes the draws as delimited text (eta1..etaq, beta0, beta1, sigma2).
void write_draws(const std::string& path, const PosteriorDraws& draws);

/// Split-chain R-hat of one scalar chain (two halves).
double split_rhat(const Vector& chain);

}  // namespace caldoe
