#include "caldoe/gp.hpp"

#include "caldoe/optimize.hpp"
#include "caldoe/rng.hpp"

#include <cmath>

namespace caldoe {

namespace {

// Squared coordinate differences of the training inputs, one matrix per dimension.
std::vector<Matrix> squared_differences(const PointSet& s) {
  std::vector<Matrix> out;
  for (Eigen::Index l = 0; l < s.cols(); ++l) {
    const Vector c = s.col(l);
    out.push_back((c.replicate(1, s.rows()) - c.transpose().replicate(s.rows(), 1)).array().square().matrix());
  }
  return out;
}

Matrix correlation(const std::vector<Matrix>& sq, const Vector& theta) {
  Matrix expo = Matrix::Zero(sq.front().rows(), sq.front().cols());
  for (std::size_t l = 0; l < sq.size(); ++l) expo += sq[l] / (theta[static_cast<Eigen::Index>(l)] * theta[static_cast<Eigen::Index>(l)]);
  return (-0.5 * expo.array()).exp().matrix();
}

double gls_mean(const Eigen::LLT<Matrix>& llt, const Vector& y) {
  const Vector ones = Vector::Ones(y.size());
  const Vector ri1 = llt.solve(ones);
  return ri1.dot(y) / ri1.sum();
}

double log_det_from(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

// Floor for a profiled variance so constant outputs still give a usable GP.
double variance_floor(const Vector& y) { return 1e-14 * (1.0 + y.squaredNorm() / static_cast<double>(y.size())); }

struct Likelihood {
  const std::vector<Matrix>& sq;
  const Vector& y;
  const GpFitOptions& options;

  struct Value {
    double nll = kInf;
    double tau2 = 0.0;
    double mean = 0.0;
    double nugget = 0.0;
  };

  // noise > 0 searches tau2 jointly; noise == 0 profiles it out.
  Value operator()(const Vector& theta, double tau2_in, double noise) const {
    const Eigen::Index n = y.size();
    const Matrix r = correlation(sq, theta);
    for (double g : GaussianProcess::kNuggetLadder) {
      Value v;
      v.nugget = g;
      Matrix k;
      if (noise > 0.0) {
        k = tau2_in * r;
        k.diagonal().array() += tau2_in * g + noise;
      } else {
        k = r;
        k.diagonal().array() += g;
      }
      Eigen::LLT<Matrix> llt(k);
      if (llt.info() != Eigen::Success) continue;
      v.mean = options.estimate_mean ? gls_mean(llt, y) : 0.0;
      const Vector resid = y.array() - v.mean;
      const double quad = resid.dot(llt.solve(resid));
      if (noise > 0.0) {
        v.tau2 = tau2_in;
        v.nll = 0.5 * quad + 0.5 * log_det_from(llt);
      } else {
        v.tau2 = std::max(quad / static_cast<double>(n), variance_floor(y));
        v.nll = 0.5 * static_cast<double>(n) * std::log(v.tau2) + 0.5 * log_det_from(llt);
      }
      if (!std::isfinite(v.nll)) continue;
      return v;
    }
    return {};
  }
};

}  // namespace

GaussianProcess::GaussianProcess(PointSet inputs, Vector outputs, Vector theta, double tau2, double mean,
                                 double nugget, double noise_variance)
    : inputs_(std::move(inputs)),
      outputs_(std::move(outputs)),
      theta_(std::move(theta)),
      tau2_(tau2),
      mean_(mean),
      noise_(noise_variance) {
  if (inputs_.rows() < 1) throw ValidationError("GP needs at least one training point");
  if (outputs_.size() != inputs_.rows()) {
    throw ValidationError("GP: " + std::to_string(inputs_.rows()) + " inputs but " +
                          std::to_string(outputs_.size()) + " outputs");
  }
  if (theta_.size() != inputs_.cols()) throw ValidationError("GP: one lengthscale per input dimension expected");
  if (!(theta_.array() > 0.0).all()) throw ValidationError("GP: lengthscales must be positive");
  if (!(tau2_ > 0.0) || !std::isfinite(tau2_)) throw ValidationError("GP: tau2 must be positive");
  if (nugget < 0.0 || noise_ < 0.0) throw ValidationError("GP: nugget and noise variance must be >= 0");
  if (!outputs_.allFinite() || !inputs_.allFinite()) throw ValidationError("GP: training data must be finite");
  factor(nugget);
}

void GaussianProcess::factor(double first_nugget) {
  std::vector<double> ladder;
  if (first_nugget < kNuggetLadder[0]) ladder.push_back(first_nugget);
  for (double g : kNuggetLadder) {
    if (g >= first_nugget) ladder.push_back(g);
  }
  Matrix k = cross_covariance(inputs_, inputs_);
  for (double g : ladder) {
    Matrix kg = k;
    kg.diagonal().array() += tau2_ * g + noise_;
    llt_.compute(kg);
    if (llt_.info() != Eigen::Success) continue;
    // An exact factorization is kept only while it is not numerically singular.
    if (g == 0.0 && noise_ == 0.0 && llt_.rcond() < 1e-15) continue;
    nugget_ = g;
    const Vector resid = outputs_.array() - mean_;
    alpha_ = llt_.solve(resid);
    nll_ = 0.5 * resid.dot(alpha_) + 0.5 * log_det_from(llt_);
    return;
  }
  throw NumericalError("GP covariance is not positive definite even with nugget " +
                       std::to_string(kNuggetLadder[std::size(kNuggetLadder) - 1]));
}

GaussianProcess GaussianProcess::fit(const PointSet& inputs, const Vector& outputs, const GpFitOptions& options) {
  const Eigen::Index n = inputs.rows();
  const Eigen::Index d = inputs.cols();
  if (n < 1) throw ValidationError("GP fit needs at least one training point");
  if (outputs.size() != n) throw ValidationError("GP fit: inputs and outputs differ in length");
  if (!inputs.allFinite() || !outputs.allFinite()) throw ValidationError("GP fit: training data must be finite");
  if (!(options.theta_lower > 0.0) || !(options.theta_upper > options.theta_lower)) {
    throw ValidationError("GP fit: need 0 < theta_lower < theta_upper");
  }
  if (options.multistarts < 1) throw ValidationError("GP fit: multistarts must be >= 1");

  if (options.estimate_noise && !(options.noise_lower > 0.0)) {
    throw ValidationError("GP fit: estimating the noise needs noise_lower > 0");
  }
  const bool noisy = options.noise_variance > 0.0 || options.estimate_noise;
  const auto sq = squared_differences(inputs);
  const Likelihood likelihood{sq, outputs, options};

  const Eigen::Index dim = d + (noisy ? 1 : 0) + (options.estimate_noise ? 1 : 0);
  Vector lower(dim), upper(dim);
  lower.head(d).setConstant(std::log(options.theta_lower));
  upper.head(d).setConstant(std::log(options.theta_upper));
  const double scale = std::max({outputs.squaredNorm() / static_cast<double>(n), options.noise_variance,
                                 options.noise_lower, 1e-12});
  if (noisy) {
    lower[d] = std::log(1e-6 * scale);
    upper[d] = std::log(1e2 * scale);
  }
  if (options.estimate_noise) {
    lower[d + 1] = std::log(options.noise_lower);
    upper[d + 1] = std::log(std::max(1e2 * scale, 10.0 * options.noise_lower));
  }
  struct Hyper {
    Vector theta;
    double tau2;
    double noise;
  };
  auto unpack = [&](const Vector& v) {
    return Hyper{v.head(d).array().exp().matrix(), noisy ? std::exp(v[d]) : 1.0,
                 options.estimate_noise ? std::exp(v[d + 1]) : options.noise_variance};
  };
  auto objective = [&](const Vector& v) {
    const Hyper h = unpack(v);
    return likelihood(h.theta, h.tau2, h.noise).nll;
  };

  Rng rng(options.seed);
  NelderMeadOptions nm;
  nm.max_evaluations = options.max_evaluations;
  nm.value_tolerance = 1e-10;
  nm.step_tolerance = 1e-6;
  OptimResult best;
  for (int s = 0; s < options.multistarts; ++s) {
    Vector start(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      start[i] = s == 0 ? 0.5 * (lower[i] + upper[i]) : rng.uniform(lower[i], upper[i]);
    }
    const OptimResult r = nelder_mead_box(objective, start, lower, upper, nm);
    if (r.value < best.value) best = r;
  }
  if (!std::isfinite(best.value)) {
    throw NumericalError("GP fit failed: covariance not positive definite at any tried hyperparameters");
  }
  const Hyper h = unpack(best.x);
  const auto v = likelihood(h.theta, h.tau2, h.noise);
  // Noise-free fits try the exact interpolator before the likelihood's nugget.
  return GaussianProcess(inputs, outputs, h.theta, v.tau2, v.mean, h.noise > 0.0 ? v.nugget : 0.0, h.noise);
}

double GaussianProcess::kernel(const Vector& a, const Vector& b) const {
  return tau2_ * std::exp(-0.5 * ((a - b).array() / theta_.array()).square().sum());
}

Matrix GaussianProcess::cross_covariance(const PointSet& a, const PointSet& b) const {
  if (a.cols() != inputs_.cols() || b.cols() != inputs_.cols()) {
    throw ValidationError("GP: point has " + std::to_string(a.cols() != inputs_.cols() ? a.cols() : b.cols()) +
                          " coordinates, expected " + std::to_string(inputs_.cols()));
  }
  Matrix out(a.rows(), b.rows());
  const Eigen::ArrayXd inv = theta_.array().inverse();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      out(i, j) = tau2_ * std::exp(-0.5 * ((a.row(i) - b.row(j)).transpose().array() * inv).square().sum());
    }
  }
  return out;
}

double GaussianProcess::predict_mean(const Vector& u) const {
  const Matrix k = cross_covariance(u.transpose(), inputs_);
  return mean_ + (k * alpha_)(0);
}

std::pair<double, double> GaussianProcess::posterior(const Vector& u) const {
  const Matrix k = cross_covariance(inputs_, u.transpose());
  const double mean = mean_ + k.col(0).dot(alpha_);
  const Vector v = llt_.matrixL().solve(k.col(0));
  return {mean, std::max(0.0, tau2_ - v.squaredNorm())};
}

Vector GaussianProcess::predict_means(const PointSet& u) const {
  return (cross_covariance(u, inputs_) * alpha_).array() + mean_;
}

Matrix GaussianProcess::posterior_covariance(const PointSet& u) const {
  const Matrix ksu = cross_covariance(inputs_, u);
  const Matrix v = llt_.matrixL().solve(ksu);
  Matrix out = cross_covariance(u, u) - v.transpose() * v;
  return 0.5 * (out + out.transpose());
}

}  // namespace caldoe
