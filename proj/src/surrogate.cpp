#include "caldoe/surrogate.hpp"

#include "caldoe/csv.hpp"
#include "caldoe/rng.hpp"
#include "caldoe/sobol.hpp"

#include <cmath>

namespace caldoe {

namespace {

std::vector<Interval> joint_bounds(const std::vector<Interval>& x, const std::vector<Interval>& eta) {
  std::vector<Interval> out = x;
  out.insert(out.end(), eta.begin(), eta.end());
  return out;
}

// Sum_i w_i * k(u, rows_i) without forming the covariance vector.
double weighted_kernel_sum(const GaussianProcess& gp, const PointSet& rows, const Vector& w, const Vector& u) {
  const Vector& theta = gp.theta();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    double e = 0.0;
    for (Eigen::Index l = 0; l < rows.cols(); ++l) {
      const double d = (u[l] - rows(i, l)) / theta[l];
      e += d * d;
    }
    sum += w[i] * std::exp(-0.5 * e);
  }
  return gp.tau2() * sum;
}

}  // namespace

GPSurrogate::GPSurrogate(std::vector<Interval> x_bounds, std::vector<Interval> eta_bounds, GaussianProcess gp)
    : x_bounds_(std::move(x_bounds)),
      eta_bounds_(std::move(eta_bounds)),
      gp_(std::make_shared<const GaussianProcess>(std::move(gp))) {
  if (gp_->dims() != p() + q()) {
    throw ValidationError("surrogate GP has " + std::to_string(gp_->dims()) + " inputs, expected p + q = " +
                          std::to_string(p() + q()));
  }
}

GPSurrogate GPSurrogate::fit(std::vector<Interval> x_bounds, std::vector<Interval> eta_bounds, const PointSet& inputs,
                             const Vector& outputs, const GpFitOptions& options) {
  const int d = static_cast<int>(x_bounds.size() + eta_bounds.size());
  if (inputs.cols() != d) {
    throw ValidationError("computer experiment has " + std::to_string(inputs.cols()) +
                          " input columns, expected p + q = " + std::to_string(d));
  }
  if (inputs.rows() < d + 2) {
    throw ValidationError("surrogate fit needs at least p + q + 2 = " + std::to_string(d + 2) + " runs, got " +
                          std::to_string(inputs.rows()));
  }
  const auto bounds = joint_bounds(x_bounds, eta_bounds);
  PointSet unit(inputs.rows(), d);
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    for (int l = 0; l < d; ++l) {
      if (!bounds[l].contains(inputs(i, l), 1e-9 * bounds[l].width())) {
        throw ValidationError("computer experiment run " + std::to_string(i + 1) + " has input " +
                              std::to_string(l + 1) + " outside its bounds");
      }
      unit(i, l) = bounds[l].to_unit(inputs(i, l));
    }
  }
  return GPSurrogate(std::move(x_bounds), std::move(eta_bounds), GaussianProcess::fit(unit, outputs, options));
}

Vector GPSurrogate::to_unit(const Vector& x, const Vector& eta) const {
  if (x.size() != p() || eta.size() != q()) throw ValidationError("surrogate: wrong (x, eta) dimensions");
  Vector u(p() + q());
  for (int l = 0; l < p(); ++l) u[l] = x_bounds_[l].to_unit(x[l]);
  for (int l = 0; l < q(); ++l) u[p() + l] = eta_bounds_[l].to_unit(eta[l]);
  return u;
}

std::pair<double, double> GPSurrogate::posterior(const Vector& x, const Vector& eta) const {
  return gp_->posterior(to_unit(x, eta));
}

ComputerModel GPSurrogate::mean_model(const std::string& name) const {
  auto gp = gp_;
  const auto bounds = joint_bounds(x_bounds_, eta_bounds_);
  return ComputerModel(name, x_bounds_, eta_bounds_,
                       [gp, bounds, p = p()](std::span<const double> x, std::span<const double> eta) {
                         Vector u(static_cast<Eigen::Index>(bounds.size()));
                         for (int l = 0; l < p; ++l) u[l] = bounds[l].to_unit(x[l]);
                         for (std::size_t l = 0; l < eta.size(); ++l) u[p + l] = bounds[p + l].to_unit(eta[l]);
                         return gp->mean() + weighted_kernel_sum(*gp, gp->inputs(), gp->weights(), u);
                       });
}

Realization::Realization(std::shared_ptr<const GaussianProcess> gp, PointSet anchors, Vector values,
                         Vector anchor_weights, Vector training_weights)
    : gp_(std::move(gp)),
      anchors_(std::move(anchors)),
      values_(std::move(values)),
      anchor_weights_(std::move(anchor_weights)),
      training_weights_(std::move(training_weights)) {}

double Realization::evaluate(const Vector& u) const {
  return gp_->mean() + weighted_kernel_sum(*gp_, gp_->inputs(), training_weights_, u) +
         weighted_kernel_sum(*gp_, anchors_, anchor_weights_, u);
}

Realization sample_realization(const GPSurrogate& surrogate, const Vector& eta_slice, int anchor_density,
                               std::uint64_t seed) {
  if (anchor_density < 1) throw ValidationError("sample_realization: anchor_density must be >= 1");
  if (eta_slice.size() != surrogate.q()) throw ValidationError("sample_realization: eta slice has wrong dimension");
  const int p = surrogate.p();
  const GaussianProcess& gp = surrogate.gp();
  const PointSet xs = sobol_points(p, anchor_density);
  const Vector eta_unit = surrogate.to_unit(Vector::Zero(p), eta_slice).tail(surrogate.q());
  PointSet anchors(anchor_density, p + surrogate.q());
  anchors.leftCols(p) = xs;
  anchors.rightCols(surrogate.q()) = eta_unit.transpose().replicate(anchor_density, 1);

  const Vector mean = gp.predict_means(anchors);
  const Matrix cov = gp.posterior_covariance(anchors);
  Eigen::LLT<Matrix> llt;
  bool ok = false;
  for (double jitter = 1e-10; jitter <= 1e-4 * 1.0001; jitter *= 10.0) {
    Matrix c = cov;
    c.diagonal().array() += jitter * gp.tau2();
    llt.compute(c);
    if (llt.info() == Eigen::Success) {
      ok = true;
      break;
    }
  }
  if (!ok) throw NumericalError("sample_realization: posterior covariance at the anchors is not positive definite");

  Rng rng(seed);
  Vector z(anchor_density);
  for (int i = 0; i < anchor_density; ++i) z[i] = rng.normal();
  // w = (cov + jitter)^-1 L z, so mean + cov * w is the drawn sample up to
  // the jitter, and conditioning on it reproduces the anchors exactly.
  const Vector w = llt.matrixU().solve(z);
  const Vector values = mean + cov * w;
  const Vector training = gp.weights() - gp.solve(gp.cross_covariance(gp.inputs(), anchors) * w);
  return Realization(surrogate.shared_gp(), anchors, values, w, training);
}

ComputerModel realization_model(const GPSurrogate& surrogate, std::shared_ptr<const Realization> path,
                                const std::string& name) {
  const auto bounds = joint_bounds(surrogate.x_bounds(), surrogate.eta_bounds());
  const int p = surrogate.p();
  return ComputerModel(name, surrogate.x_bounds(), surrogate.eta_bounds(),
                       [path, bounds, p](std::span<const double> x, std::span<const double> eta) {
                         Vector u(static_cast<Eigen::Index>(bounds.size()));
                         for (int l = 0; l < p; ++l) u[l] = bounds[l].to_unit(x[l]);
                         for (std::size_t l = 0; l < eta.size(); ++l) u[p + l] = bounds[p + l].to_unit(eta[l]);
                         return path->evaluate(u);
                       });
}

std::vector<int> nearest_training_points(const GPSurrogate& surrogate, const PointSet& design_unit) {
  const int p = surrogate.p();
  if (design_unit.cols() != p) throw ValidationError("nearest_training_points: design has wrong dimension");
  const PointSet& s = surrogate.gp().inputs();
  std::vector<int> out;
  for (Eigen::Index i = 0; i < design_unit.rows(); ++i) {
    int best = 0;
    double best_d = kInf;
    for (Eigen::Index j = 0; j < s.rows(); ++j) {
      const double d = (s.row(j).head(p) - design_unit.row(i)).squaredNorm();
      if (d < best_d) best_d = d, best = static_cast<int>(j);
    }
    out.push_back(best);
  }
  return out;
}

std::pair<PointSet, Vector> read_computer_experiment(const std::string& path, int p, int q) {
  const Table t = read_table(path);
  PointSet inputs(t.data.rows(), p + q);
  for (int l = 0; l < p; ++l) inputs.col(l) = t.column("x" + std::to_string(l + 1));
  for (int l = 0; l < q; ++l) inputs.col(p + l) = t.column("eta" + std::to_string(l + 1));
  return {inputs, t.column("y")};
}

}  // namespace caldoe
