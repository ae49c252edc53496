#include "caldoe/reduce.hpp"

#include "caldoe/rng.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace caldoe {

void ParameterPrior::validate(const std::string& where) const {
  if (kind == Kind::Normal) {
    if (!std::isfinite(a) || !std::isfinite(b) || !(b > 0.0)) {
      throw ValidationError(where + ": normal prior needs a finite mean and sd > 0");
    }
  } else if (!std::isfinite(a) || !std::isfinite(b) || !(a < b)) {
    throw ValidationError(where + ": uniform prior needs lo < hi");
  }
}

double ParameterPrior::mean() const { return kind == Kind::Normal ? a : 0.5 * (a + b); }

double ParameterPrior::sd() const { return kind == Kind::Normal ? b : (b - a) / std::sqrt(12.0); }

double ParameterPrior::quantile(double u) const {
  if (kind == Kind::Uniform) return a + u * (b - a);
  return boost::math::quantile(boost::math::normal_distribution<double>(a, b), u);
}

double ParameterPrior::log_density(double x) const {
  if (kind == Kind::Uniform) return (x >= a && x <= b) ? -std::log(b - a) : -kInf;
  const double z = (x - a) / b;
  return -0.5 * z * z - std::log(b);
}

double ParameterPrior::cdf(double x) const {
  if (kind == Kind::Uniform) return std::clamp((x - a) / (b - a), 0.0, 1.0);
  return boost::math::cdf(boost::math::normal_distribution<double>(a, b), x);
}

double ParameterPrior::sample(Rng& rng) const {
  return kind == Kind::Normal ? rng.normal(a, b) : rng.uniform(a, b);
}

void PriorSpec::validate(int q) const {
  if (dims() != q) {
    throw ValidationError("prior has " + std::to_string(dims()) + " parameters, model has q = " + std::to_string(q));
  }
  for (int j = 0; j < dims(); ++j) params[j].validate("prior for eta" + std::to_string(j + 1));
}

Vector PriorSpec::mean() const {
  Vector out(dims());
  for (int j = 0; j < dims(); ++j) out[j] = params[j].mean();
  return out;
}

double PriorSpec::log_density(const Vector& eta) const {
  double sum = 0.0;
  for (int j = 0; j < dims(); ++j) sum += params[j].log_density(eta[j]);
  return sum;
}

Vector PriorSpec::sample(Rng& rng) const {
  Vector out(dims());
  for (int j = 0; j < dims(); ++j) out[j] = params[j].sample(rng);
  return out;
}

double energy_distance(const PointSet& reduced, const PointSet& candidates) {
  if (reduced.rows() < 1 || candidates.rows() < 1) throw ValidationError("energy_distance needs non-empty sets");
  if (reduced.cols() != candidates.cols()) {
    throw ValidationError("energy_distance: dimension mismatch (" + std::to_string(reduced.cols()) + " vs " +
                          std::to_string(candidates.cols()) + ")");
  }
  const double k = static_cast<double>(reduced.rows());
  const double n = static_cast<double>(candidates.rows());
  double cross = 0.0;
  for (Eigen::Index i = 0; i < reduced.rows(); ++i) {
    for (Eigen::Index j = 0; j < candidates.rows(); ++j) cross += (candidates.row(j) - reduced.row(i)).norm();
  }
  double self = 0.0;
  for (Eigen::Index i = 0; i < reduced.rows(); ++i) {
    for (Eigen::Index j = 0; j < reduced.rows(); ++j) self += (reduced.row(j) - reduced.row(i)).norm();
  }
  return 2.0 / (k * n) * cross - self / (k * k);
}

PointSet support_points(const PointSet& candidates, int k, std::uint64_t seed, const SupportPointsOptions& options) {
  const Eigen::Index n = candidates.rows();
  const Eigen::Index d = candidates.cols();
  if (k < 1) throw ValidationError("support_points: k must be >= 1");
  if (k > n) {
    throw ValidationError("support_points: k = " + std::to_string(k) + " exceeds the " + std::to_string(n) +
                          " candidates");
  }
  if (k == n) return candidates;

  Rng rng(seed);
  std::vector<Eigen::Index> index(static_cast<std::size_t>(n));
  std::iota(index.begin(), index.end(), Eigen::Index{0});
  // Partial Fisher-Yates for the initial subset.
  for (int i = 0; i < k; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(index[static_cast<std::size_t>(i)], index[static_cast<std::size_t>(j)]);
  }
  PointSet x(k, d);
  for (int i = 0; i < k; ++i) x.row(i) = candidates.row(index[static_cast<std::size_t>(i)]);

  // Fixed directions that separate iterates sitting on top of each other.
  PointSet split(k, d);
  for (int i = 0; i < k; ++i) {
    for (Eigen::Index l = 0; l < d; ++l) split(i, l) = rng.uniform() - 0.5;
    split.row(i).normalize();
  }

  const double ratio = static_cast<double>(n) / static_cast<double>(k);
  PointSet next(k, d);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    for (int i = 0; i < k; ++i) {
      const Eigen::RowVectorXd xi = x.row(i);
      // Candidates within 1e-12 of the iterate are excluded from the
      // Weiszfeld sums and handled by the Vardi-Zhang step below.
      double coincident = 0.0;
      double weight = 0.0;
      Eigen::RowVectorXd attract = Eigen::RowVectorXd::Zero(d);
      Eigen::RowVectorXd pull = Eigen::RowVectorXd::Zero(d);
      for (Eigen::Index m = 0; m < n; ++m) {
        const Eigen::RowVectorXd diff = candidates.row(m) - xi;
        const double dist = diff.norm();
        if (dist < 1e-12) {
          coincident += 1.0;
          continue;
        }
        weight += 1.0 / dist;
        attract += candidates.row(m) / dist;
        pull += diff / dist;
      }
      Eigen::RowVectorXd repel = Eigen::RowVectorXd::Zero(d);
      for (int j = 0; j < k; ++j) {
        if (j == i) continue;
        const Eigen::RowVectorXd diff = xi - x.row(j);
        const double dist = diff.norm();
        if (dist < 1e-12) {
          repel += (i < j ? 1.0 : -1.0) * split.row(std::min(i, j));
        } else {
          repel += diff / dist;
        }
      }
      if (weight == 0.0) {
        next.row(i) = xi;
        continue;
      }
      const Eigen::RowVectorXd weiszfeld = (ratio * repel + attract) / weight;
      if (coincident == 0.0) {
        next.row(i) = weiszfeld;
        continue;
      }
      // The iterate sits on a candidate: stay if the remaining forces are
      // balanced by the candidate's own subgradient, otherwise step out.
      const double force = (pull + ratio * repel).norm();
      if (force <= coincident) {
        next.row(i) = xi;
      } else {
        const double t = coincident / force;
        next.row(i) = (1.0 - t) * weiszfeld + t * xi;
      }
    }
    if (options.clamp_unit) next = next.cwiseMax(0.0).cwiseMin(1.0);
    const double move = (next - x).lpNorm<Eigen::Infinity>();
    x.swap(next);
    if (move < options.tolerance) break;
  }
  return x;
}

PointSet prior_representatives(const PriorSpec& prior, int m, std::uint64_t seed, int oversample,
                               const SupportPointsOptions& options) {
  if (m < 1) throw ValidationError("prior_representatives: m must be >= 1");
  if (oversample < 1) throw ValidationError("prior_representatives: oversample must be >= 1");
  prior.validate(prior.dims());
  const int q = prior.dims();
  const int draws = oversample * m;

  Rng rng(derive_seed(seed, "prior-sample"));
  PointSet sample(draws, q);
  std::vector<int> strata(static_cast<std::size_t>(draws));
  for (int j = 0; j < q; ++j) {
    std::iota(strata.begin(), strata.end(), 0);
    for (int i = draws - 1; i > 0; --i) {
      std::swap(strata[static_cast<std::size_t>(i)],
                strata[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i) + 1))]);
    }
    for (int i = 0; i < draws; ++i) {
      double u = (strata[static_cast<std::size_t>(i)] + rng.uniform()) / draws;
      u = std::clamp(u, 1e-12, 1.0 - 1e-12);
      sample(i, j) = prior.params[j].quantile(u);
    }
  }

  Vector center(q), scale(q);
  for (int j = 0; j < q; ++j) {
    center[j] = prior.params[j].mean();
    scale[j] = prior.params[j].sd();
  }
  PointSet standardized = (sample.rowwise() - center.transpose()).array().rowwise() / scale.transpose().array();
  PointSet reduced = support_points(standardized, m, derive_seed(seed, "support-points"), options);
  PointSet out = (reduced.array().rowwise() * scale.transpose().array()).rowwise() + center.transpose().array();
  for (int j = 0; j < q; ++j) {
    if (prior.params[j].kind == ParameterPrior::Kind::Uniform) {
      out.col(j) = out.col(j).cwiseMax(prior.params[j].a).cwiseMin(prior.params[j].b);
    }
  }
  return out;
}

PointSet kmeans_reduce(const PointSet& candidates, int k, std::uint64_t seed, int max_iterations) {
  const Eigen::Index n = candidates.rows();
  if (k < 1 || k > n) throw ValidationError("kmeans_reduce: need 1 <= k <= number of candidates");
  Rng rng(seed);
  PointSet centers(k, candidates.cols());
  std::vector<Eigen::Index> index(static_cast<std::size_t>(n));
  std::iota(index.begin(), index.end(), Eigen::Index{0});
  for (int i = 0; i < k; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(index[static_cast<std::size_t>(i)], index[static_cast<std::size_t>(j)]);
    centers.row(i) = candidates.row(index[static_cast<std::size_t>(i)]);
  }
  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (Eigen::Index m = 0; m < n; ++m) {
      int best = 0;
      double best_d = kInf;
      for (int c = 0; c < k; ++c) {
        const double dist = (candidates.row(m) - centers.row(c)).squaredNorm();
        if (dist < best_d) best_d = dist, best = c;
      }
      if (assign[static_cast<std::size_t>(m)] != best) changed = true;
      assign[static_cast<std::size_t>(m)] = best;
    }
    if (!changed) break;
    PointSet sums = PointSet::Zero(k, candidates.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index m = 0; m < n; ++m) {
      sums.row(assign[static_cast<std::size_t>(m)]) += candidates.row(m);
      ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(m)])];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
    }
  }
  return centers;
}

}  // namespace caldoe
