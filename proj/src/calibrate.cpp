#include "caldoe/calibrate.hpp"

#include "caldoe/csv.hpp"
#include "caldoe/rng.hpp"

#include <algorithm>
#include <cmath>

namespace caldoe {

CalibrationData read_physical_data(const std::string& path, int p) {
  const Table t = read_table(path);
  if (t.data.rows() == 0) throw ValidationError(path + ": no data rows");
  CalibrationData data;
  data.x.resize(t.data.rows(), p);
  for (int j = 0; j < p; ++j) data.x.col(j) = t.column("x" + std::to_string(j + 1));
  data.y = t.column("y");
  return data;
}

namespace {

void validate(const McmcConfig& c) {
  if (c.burn_in < 0) throw ValidationError("mcmc.burn_in must be >= 0");
  if (c.thin < 1) throw ValidationError("mcmc.thin must be >= 1");
  if (c.iterations - c.burn_in < c.thin) {
    throw ValidationError("mcmc.iterations must exceed burn_in by at least thin (no draws would be kept)");
  }
  if (!(c.target_acceptance > 0.0 && c.target_acceptance < 1.0)) {
    throw ValidationError("mcmc.target_acceptance must lie in (0, 1)");
  }
  if (!(c.beta_sd > 0.0) || !(c.sigma_scale > 0.0)) {
    throw ValidationError("mcmc.beta_sd and mcmc.sigma_scale must be positive");
  }
  if (c.max_init_tries < 1) throw ValidationError("mcmc.max_init_tries must be >= 1");
}

double sample_sd(const Vector& v) {
  if (v.size() < 2) return 0.0;
  return std::sqrt((v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1));
}

// Log posterior of (eta, log sigma) with beta0, beta1 integrated out. Given
// eta and sigma the adjustment is a Bayesian linear regression of r = y - f
// on G = [1, f], so the marginal and the conditional of beta are Gaussian.
class Posterior {
 public:
  Posterior(const ComputerModel& model, const CalibrationData& data, const PriorSpec& prior, const McmcConfig& config)
      : model_(model), data_(data), prior_(prior), config_(config) {
    const double sd = sample_sd(data.y);
    sigma_scale_ = config.sigma_scale * (sd > 0.0 ? sd : 1.0);
  }

  int q() const { return model_.q(); }

  // Fills f with the model outputs at every data point. False when eta is
  // outside the support or the model fails.
  bool outputs(const Vector& eta, Vector& f) const {
    for (int j = 0; j < q(); ++j) {
      if (!model_.eta_bounds()[j].contains(eta[j])) return false;
    }
    if (!std::isfinite(prior_.log_density(eta))) return false;
    f.resize(data_.y.size());
    try {
      for (Eigen::Index i = 0; i < data_.x.rows(); ++i) {
        const Vector x = data_.x.row(i).transpose();
        f[i] = model_.evaluate(as_span(x), as_span(eta));
      }
    } catch (const NumericalError&) {
      return false;
    }
    return f.allFinite();
  }

  // Posterior precision A = G'G / s^2 + I / b^2 and b = G'r / s^2.
  struct Regression {
    Eigen::Matrix2d precision;
    Eigen::Vector2d linear;
  };

  Regression regression(const Vector& f, double sigma2) const {
    Eigen::Matrix<double, Eigen::Dynamic, 2> g(f.size(), 2);
    g.col(0).setOnes();
    g.col(1) = f;
    const double b2 = config_.beta_sd * config_.beta_sd;
    Regression out;
    out.precision = g.transpose() * g / sigma2 + Eigen::Matrix2d::Identity() / b2;
    out.linear = g.transpose() * (data_.y - f) / sigma2;
    return out;
  }

  double log_density(const Vector& eta, double log_sigma, const Vector& f) const {
    const double sigma = std::exp(log_sigma);
    if (!(sigma > 0.0) || !std::isfinite(sigma)) return -kInf;
    const double sigma2 = sigma * sigma;
    const double n = static_cast<double>(data_.y.size());
    const double rr = (data_.y - f).squaredNorm();
    double lp = prior_.log_density(eta);
    // Half-normal on sigma, plus the Jacobian of the log transform.
    lp += -0.5 * sigma2 / (sigma_scale_ * sigma_scale_) + log_sigma;
    lp += -n * log_sigma - 0.5 * rr / sigma2;
    if (!config_.fix_beta) {
      const Regression reg = regression(f, sigma2);
      const Eigen::LLT<Eigen::Matrix2d> llt(reg.precision);
      if (llt.info() != Eigen::Success) return -kInf;
      const Eigen::Matrix2d l = llt.matrixL();
      lp += 0.5 * reg.linear.dot(llt.solve(reg.linear)) - std::log(l(0, 0) * l(1, 1));
    }
    return std::isfinite(lp) ? lp : -kInf;
  }

  // Exact draw of (beta0, beta1) given eta and sigma from standard normals z.
  Eigen::Vector2d draw_beta(const Vector& f, double sigma2, const Eigen::Vector2d& z) const {
    const Regression reg = regression(f, sigma2);
    const Eigen::LLT<Eigen::Matrix2d> llt(reg.precision);
    const Eigen::Vector2d mean = llt.solve(reg.linear);
    // Covariance A^-1 = L^-T L^-1, so L^-T z has the right spread.
    return mean + llt.matrixU().solve(z);
  }

 private:
  const ComputerModel& model_;
  const CalibrationData& data_;
  const PriorSpec& prior_;
  const McmcConfig& config_;
  double sigma_scale_ = 1.0;
};

}  // namespace

double split_rhat(const Vector& chain) {
  const Eigen::Index half = chain.size() / 2;
  if (half < 2) return kInf;
  const Vector a = chain.head(half);
  const Vector b = chain.tail(half);
  const double l = static_cast<double>(half);
  const double ma = a.mean(), mb = b.mean();
  const double w = 0.5 * ((a.array() - ma).square().sum() + (b.array() - mb).square().sum()) / (l - 1.0);
  const double between = l * std::pow(ma - mb, 2) / 2.0;  // L * variance of the two means
  if (w <= 0.0) return between <= 0.0 ? 1.0 : kInf;
  const double var_plus = (l - 1.0) / l * w + between / l;
  return std::sqrt(var_plus / w);
}

CalibrationFit run_mcmc(const ComputerModel& model, const CalibrationData& data, const PriorSpec& prior,
                        const McmcConfig& config) {
  validate(config);
  const int q = model.q();
  prior.validate(q);
  const Eigen::Index n = data.y.size();
  if (data.x.rows() != n) {
    throw ValidationError("calibration data: " + std::to_string(data.x.rows()) + " input rows but " +
                          std::to_string(n) + " outputs");
  }
  if (data.x.cols() != model.p()) {
    throw ValidationError("calibration data has " + std::to_string(data.x.cols()) + " input columns, model has p = " +
                          std::to_string(model.p()));
  }
  if (n < q + 3) {
    throw ValidationError("calibration needs at least q + 3 = " + std::to_string(q + 3) + " data points, got " +
                          std::to_string(n));
  }
  if (!data.x.allFinite() || !data.y.allFinite()) throw ValidationError("calibration data must be finite");

  const Posterior post(model, data, prior, config);
  Rng rng(config.seed);
  // Random-walk coordinates: eta1..etaq, then log sigma.
  const int dim = q + 1;

  // Start at the prior mean; retry from prior draws.
  Vector state(dim), f;
  double lp = -kInf;
  const double ysd = sample_sd(data.y);
  for (int attempt = 0; attempt < config.max_init_tries && !std::isfinite(lp); ++attempt) {
    Vector eta = attempt == 0 ? prior.mean() : prior.sample(rng);
    if (attempt == 0) eta = model.clamp_eta(as_span(eta));
    if (!post.outputs(eta, f)) continue;
    state.head(q) = eta;
    const double resid_sd = sample_sd(data.y - f);
    const double s0 = resid_sd > 0.0 ? resid_sd : (ysd > 0.0 ? 0.1 * ysd : 1.0);
    state[q] = std::log(s0);
    lp = post.log_density(eta, state[q], f);
  }
  if (!std::isfinite(lp)) {
    throw NumericalError("MCMC initialization failed: non-finite posterior after " +
                         std::to_string(config.max_init_tries) + " tries");
  }

  Vector step(dim);
  for (int j = 0; j < q; ++j) step[j] = 0.1 * std::min(prior.params[j].sd(), model.eta_bounds()[j].width());
  step[q] = 0.2;

  constexpr int kBatch = 50;
  Eigen::VectorXi batch_accepts = Eigen::VectorXi::Zero(dim);
  Eigen::VectorXi post_accepts = Eigen::VectorXi::Zero(dim);
  int batches = 0;
  const int kept = (config.iterations - config.burn_in) / config.thin;
  CalibrationFit fit{model, {}, {}, {}, std::nullopt};
  fit.draws.eta.resize(kept, q);
  fit.draws.beta0 = Vector::Zero(kept);
  fit.draws.beta1 = Vector::Zero(kept);
  fit.draws.sigma2.resize(kept);
  int stored = 0;

  Vector f_new;
  for (int it = 0; it < config.iterations; ++it) {
    for (int j = 0; j < dim; ++j) {
      Vector proposal = state;
      proposal[j] += step[j] * rng.normal();
      double lp_new;
      if (j < q) {
        const Vector eta = proposal.head(q);
        lp_new = post.outputs(eta, f_new) ? post.log_density(eta, proposal[q], f_new) : -kInf;
      } else {
        lp_new = post.log_density(proposal.head(q), proposal[q], f);
      }
      const double u = rng.uniform();
      if (std::isfinite(lp_new) && std::log(u) < lp_new - lp) {
        state = proposal;
        lp = lp_new;
        if (j < q) f.swap(f_new);
        if (it < config.burn_in) {
          ++batch_accepts[j];
        } else {
          ++post_accepts[j];
        }
      }
    }
    if (it < config.burn_in && (it + 1) % kBatch == 0) {
      // Diminishing per-coordinate adaptation of the log step size.
      ++batches;
      const double delta = std::min(0.5, 1.0 / std::sqrt(static_cast<double>(batches)));
      for (int j = 0; j < dim; ++j) {
        const double rate = static_cast<double>(batch_accepts[j]) / kBatch;
        step[j] *= std::exp(rate > config.target_acceptance ? delta : -delta);
      }
      batch_accepts.setZero();
    }
    if (it >= config.burn_in && (it - config.burn_in + 1) % config.thin == 0) {
      const int slot = (it - config.burn_in + 1) / config.thin;  // 1-based kept index
      // Antithetic pairs take two draws from every second kept state.
      const bool pair = config.antithetic_beta && !config.fix_beta;
      const int count = !pair ? 1 : (slot % 2 == 0 ? 2 : (slot == kept ? 1 : 0));
      const double sigma2 = std::exp(2.0 * state[q]);
      const Eigen::Vector2d z(rng.normal(), rng.normal());
      for (int c = 0; c < count && stored < kept; ++c) {
        fit.draws.eta.row(stored) = state.head(q).transpose();
        fit.draws.sigma2[stored] = sigma2;
        if (!config.fix_beta) {
          const Eigen::Vector2d beta = post.draw_beta(f, sigma2, c == 0 ? z : Eigen::Vector2d(-z));
          fit.draws.beta0[stored] = beta[0];
          fit.draws.beta1[stored] = beta[1];
        }
        ++stored;
      }
    }
  }

  auto& diag = fit.diagnostics;
  const double post_iters = static_cast<double>(config.iterations - config.burn_in);
  const Vector rates = post_accepts.cast<double>() / post_iters;
  diag.acceptance_rate = rates.mean();
  // Reported per coordinate as eta1..etaq, beta0, beta1, log sigma; the
  // adjustment coefficients are exact conditional draws.
  const double beta_rate = config.fix_beta ? 0.0 : 1.0;
  diag.coordinate_acceptance.resize(q + 3);
  diag.coordinate_acceptance << rates.head(q), beta_rate, beta_rate, rates[q];
  diag.step_sizes = step;
  diag.split_rhat.resize(q + 3);
  for (int j = 0; j < q; ++j) diag.split_rhat[j] = split_rhat(fit.draws.eta.col(j));
  diag.split_rhat[q] = config.fix_beta ? 1.0 : split_rhat(fit.draws.beta0);
  diag.split_rhat[q + 1] = config.fix_beta ? 1.0 : split_rhat(fit.draws.beta1);
  diag.split_rhat[q + 2] = split_rhat(fit.draws.sigma2);
  return fit;
}

double predict_mean_model(const CalibrationFit& fit, const Vector& x) {
  const PosteriorDraws& d = fit.draws;
  if (d.size() < 1) throw ValidationError("calibration fit has no posterior draws");
  double sum = 0.0;
  for (int i = 0; i < d.size(); ++i) {
    const Vector eta = d.eta.row(i).transpose();
    sum += d.beta0[i] + (1.0 + d.beta1[i]) * fit.model.evaluate(as_span(x), as_span(eta));
  }
  return sum / static_cast<double>(d.size());
}

CalibrationFit fit_discrepancy(CalibrationFit fit, const CalibrationData& data, const DiscrepancyOptions& options) {
  const Eigen::Index n = data.y.size();
  if (data.x.rows() != n || data.x.cols() != fit.model.p()) {
    throw ValidationError("discrepancy fit: data do not match the calibrated model");
  }
  PointSet unit(n, fit.model.p());
  fit.residuals.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector x = data.x.row(i).transpose();
    unit.row(i) = fit.model.to_unit(as_span(x)).transpose();
    fit.residuals[i] = data.y[i] - predict_mean_model(fit, x);
  }
  const double posterior_noise = fit.draws.sigma2.mean();
  double noise = posterior_noise;
  if (options.noise_variance) {
    noise = *options.noise_variance;
  } else if (options.source == NoiseSource::Replicates) {
    noise = replicate_variance(data).value_or(posterior_noise);
  }
  if (!(noise >= 0.0)) throw ValidationError("discrepancy noise variance must be >= 0");

  if (options.theta || options.tau2) {
    if (!options.theta || !options.tau2) {
      throw ValidationError("discrepancy: fixed hyperparameters need both theta and tau2");
    }
    fit.discrepancy.emplace(unit, fit.residuals, *options.theta, *options.tau2, 0.0, 0.0, noise);
    return fit;
  }
  if (fit.residuals.isZero(0.0)) {
    // Nothing to explain; any variance gives a zero posterior mean.
    fit.discrepancy.emplace(unit, fit.residuals, Vector::Constant(fit.model.p(), 1.0), 1.0, 0.0, 0.0,
                            std::max(noise, 1e-12));
    return fit;
  }
  GpFitOptions gp = options.fit;
  gp.estimate_mean = false;
  if (options.source == NoiseSource::Likelihood && !options.noise_variance) {
    gp.estimate_noise = true;
    gp.noise_lower = std::max(options.noise_floor * posterior_noise, 1e-12);
    gp.noise_variance = 0.0;
  } else {
    gp.noise_variance = noise;
  }
  fit.discrepancy = GaussianProcess::fit(unit, fit.residuals, gp);
  return fit;
}

std::optional<double> replicate_variance(const CalibrationData& data) {
  const Eigen::Index n = data.y.size();
  std::vector<int> group(static_cast<std::size_t>(n), -1);
  int groups = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (group[static_cast<std::size_t>(i)] >= 0) continue;
    group[static_cast<std::size_t>(i)] = groups;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (group[static_cast<std::size_t>(j)] < 0 && data.x.row(j) == data.x.row(i)) {
        group[static_cast<std::size_t>(j)] = groups;
      }
    }
    ++groups;
  }
  if (groups == n) return std::nullopt;
  Vector sum = Vector::Zero(groups), count = Vector::Zero(groups);
  for (Eigen::Index i = 0; i < n; ++i) {
    sum[group[static_cast<std::size_t>(i)]] += data.y[i];
    count[group[static_cast<std::size_t>(i)]] += 1.0;
  }
  double ss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int g = group[static_cast<std::size_t>(i)];
    ss += std::pow(data.y[i] - sum[g] / count[g], 2);
  }
  return ss / static_cast<double>(n - groups);
}

double predict_calibrated(const CalibrationFit& fit, const Vector& x) {
  const double base = predict_mean_model(fit, x);
  if (!fit.discrepancy) return base;
  return base + fit.discrepancy->predict_mean(fit.model.to_unit(as_span(x)));
}

void write_draws(const std::string& path, const PosteriorDraws& draws) {
  std::vector<std::string> header;
  const int q = static_cast<int>(draws.eta.cols());
  for (int j = 0; j < q; ++j) header.push_back("eta" + std::to_string(j + 1));
  header.insert(header.end(), {"beta0", "beta1", "sigma2"});
  std::vector<std::vector<std::string>> rows;
  rows.reserve(static_cast<std::size_t>(draws.size()));
  for (int i = 0; i < draws.size(); ++i) {
    std::vector<std::string> row;
    for (int j = 0; j < q; ++j) row.push_back(format_number(draws.eta(i, j)));
    row.push_back(format_number(draws.beta0[i]));
    row.push_back(format_number(draws.beta1[i]));
    row.push_back(format_number(draws.sigma2[i]));
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

}  // namespace caldoe
