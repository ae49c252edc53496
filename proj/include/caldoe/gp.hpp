#pragma once

#include "caldoe/common.hpp"

#include <Eigen/Cholesky>

#include <cstdint>

namespace caldoe {

/// Settings of the maximum-likelihood fit.
struct GpFitOptions {
  int multistarts = 10;
  double theta_lower = 0.01;
  double theta_upper = 10.0;
  /// Fixed observation noise variance added to the diagonal. When positive,
  /// tau2 is searched jointly with the lengthscales instead of profiled.
  double noise_variance = 0.0;
  /// Search the noise variance jointly on a log scale over
  /// [noise_lower, 100 * mean(y^2)] instead of holding it fixed.
  bool estimate_noise = false;
  double noise_lower = 0.0;
  /// Estimate a constant mean by generalized least squares, else mean 0.
  bool estimate_mean = true;
  int max_evaluations = 600;
  std::uint64_t seed = 1;
};

/// Stationary GP with anisotropic squared-exponential covariance
///   C(a, b) = tau2 exp(-1/2 sum_l ((a_l - b_l) / theta_l)^2),
/// conditioned on (S, y). The diagonal of C(S, S) carries tau2 * nugget plus
/// the noise variance. Immutable once built.
class GaussianProcess {
 public:
  /// Relative nuggets tried in order until C(S,S) factors.
  static constexpr double kNuggetLadder[] = {1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4};

  /// Fixed hyperparameters. A nugget of 0 is attempted first when asked for;
  /// otherwise the ladder starts at `nugget`.
  GaussianProcess(PointSet inputs, Vector outputs, Vector theta, double tau2, double mean, double nugget = 0.0,
                  double noise_variance = 0.0);

  /// Maximum-likelihood fit: mean and tau2 profiled out (noise-free case),
  /// log lengthscales searched by multistart Nelder-Mead. Without noise the
  /// result interpolates exactly (nugget 0) when C(S,S) factors well enough.
  static GaussianProcess fit(const PointSet& inputs, const Vector& outputs, const GpFitOptions& options = {});

  int dims() const { return static_cast<int>(inputs_.cols()); }
  int size() const { return static_cast<int>(inputs_.rows()); }
  const PointSet& inputs() const { return inputs_; }
  const Vector& outputs() const { return outputs_; }
  const Vector& theta() const { return theta_; }
  double tau2() const { return tau2_; }
  double mean() const { return mean_; }
  double nugget() const { return nugget_; }
  double noise_variance() const { return noise_; }
  /// Negative log-likelihood (up to a constant) at the stored hyperparameters.
  double negative_log_likelihood() const { return nll_; }

  double kernel(const Vector& a, const Vector& b) const;
  /// Prior covariance between the rows of A and the rows of B.
  Matrix cross_covariance(const PointSet& a, const PointSet& b) const;

  double predict_mean(const Vector& u) const;
  /// Posterior mean and variance (variance clamped at 0).
  std::pair<double, double> posterior(const Vector& u) const;
  Vector predict_means(const PointSet& u) const;
  /// Joint posterior covariance of the rows of u.
  Matrix posterior_covariance(const PointSet& u) const;

  /// C(S,S)^-1 (y - mean).
  const Vector& weights() const { return alpha_; }
  /// Solves C(S,S) z = b.
  Matrix solve(const Matrix& b) const { return llt_.solve(b); }

 private:
  GaussianProcess() = default;
  void factor(double first_nugget);

  PointSet inputs_;
  Vector outputs_;
  Vector theta_;
  double tau2_ = 1.0;
  double mean_ = 0.0;
  double nugget_ = 0.0;
  double noise_ = 0.0;
  double nll_ = 0.0;
  Eigen::LLT<Matrix> llt_;
  Vector alpha_;
};

}  // namespace caldoe
