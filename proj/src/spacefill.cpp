#include "caldoe/spacefill.hpp"

#include "caldoe/optimize.hpp"
#include "caldoe/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace caldoe {

SpaceFillCriterion parse_criterion(const std::string& name) {
  if (name == "maxpro") return SpaceFillCriterion::MaxPro;
  if (name == "maximin") return SpaceFillCriterion::Maximin;
  throw ValidationError("unknown space-filling criterion '" + name + "' (expected maxpro or maximin)");
}

double maxpro_criterion(const PointSet& points) {
  const Eigen::Index n = points.rows();
  const Eigen::Index p = points.cols();
  if (n < 2) throw ValidationError("maxpro_criterion needs at least 2 points");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double prod = 1.0;
      for (Eigen::Index l = 0; l < p; ++l) {
        const double d = points(i, l) - points(j, l);
        if (d == 0.0) return kInf;
        prod *= d * d;
      }
      sum += 1.0 / prod;
    }
  }
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return std::pow(sum / pairs, 1.0 / static_cast<double>(p));
}

double maximin_criterion(const PointSet& points) {
  const Eigen::Index n = points.rows();
  if (n < 2) throw ValidationError("maximin_criterion needs at least 2 points");
  double best = kInf;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) best = std::min(best, (points.row(i) - points.row(j)).norm());
  }
  return best;
}

PointSet distinct_rows(const PointSet& points) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    bool seen = false;
    for (Eigen::Index k : keep) {
      if (points.row(k) == points.row(i)) {
        seen = true;
        break;
      }
    }
    if (!seen) keep.push_back(i);
  }
  PointSet out(static_cast<Eigen::Index>(keep.size()), points.cols());
  for (std::size_t k = 0; k < keep.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = points.row(keep[k]);
  return out;
}

double augmentation_cost(SpaceFillCriterion criterion, const PointSet& existing, const Vector& candidate) {
  if (existing.rows() == 0) return 0.0;
  if (criterion == SpaceFillCriterion::Maximin) {
    double nearest = kInf;
    for (Eigen::Index i = 0; i < existing.rows(); ++i) {
      nearest = std::min(nearest, (existing.row(i) - candidate.transpose()).norm());
    }
    return -nearest;
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < existing.rows(); ++i) {
    double prod = 1.0;
    for (Eigen::Index l = 0; l < existing.cols(); ++l) {
      const double d = candidate[l] - existing(i, l);
      if (d == 0.0) return kInf;
      prod *= d * d;
    }
    sum += 1.0 / prod;
  }
  return sum;
}

namespace {

void validate_plan(int dims, const AugmentPlan& plan) {
  if (dims < 1) throw ValidationError("augment needs dims >= 1");
  if (plan.n_add < 0) throw ValidationError("augment: n_add must be >= 0");
  if (plan.existing.size() > 0 && plan.existing.dims() != dims) {
    throw ValidationError("augment: existing design has " + std::to_string(plan.existing.dims()) +
                          " dimensions, expected " + std::to_string(dims));
  }
  if ((plan.existing.points.array() < 0.0).any() || (plan.existing.points.array() > 1.0).any()) {
    throw ValidationError("augment: existing design leaves [0,1]^p");
  }
  if (!plan.levels.empty() && static_cast<int>(plan.levels.size()) != dims) {
    throw ValidationError("augment: levels must list one entry per dimension");
  }
  for (std::size_t l = 0; l < plan.levels.size(); ++l) {
    const auto& lv = plan.levels[l];
    if (lv.empty()) continue;
    if (lv.size() < 2 || !std::is_sorted(lv.begin(), lv.end()) || lv.front() < 0.0 || lv.back() > 1.0 ||
        std::adjacent_find(lv.begin(), lv.end()) != lv.end()) {
      throw ValidationError("augment: levels for dimension " + std::to_string(l + 1) +
                            " must be sorted, distinct, within [0,1] and have >= 2 entries");
    }
  }
  if (plan.multistarts < 1 || plan.candidates < 1) {
    throw ValidationError("augment: multistarts and candidates must be >= 1");
  }
}

struct StepSearch {
  const AugmentPlan& plan;
  const PointSet& placed;
  int dims;
  std::vector<std::vector<double>> choices;  // per discrete dimension, usable levels
  std::vector<int> continuous;

  double cost(const Vector& z) const { return augmentation_cost(plan.criterion, placed, z); }

  Vector random_point(Rng& rng) const {
    Vector z(dims);
    for (int l = 0; l < dims; ++l) {
      if (choices[l].empty()) {
        z[l] = rng.uniform();
      } else {
        z[l] = choices[l][rng.below(choices[l].size())];
      }
    }
    return z;
  }

  std::pair<Vector, double> all_discrete(Rng& rng) const {
    double combos = 1.0;
    for (const auto& c : choices) combos *= static_cast<double>(c.size());
    Vector best;
    double best_cost = kInf;
    auto consider = [&](const Vector& z) {
      const double c = cost(z);
      if (best.size() == 0 || c < best_cost) {
        best = z;
        best_cost = c;
      }
    };
    if (combos <= 200000.0) {
      std::vector<std::size_t> idx(dims, 0);
      Vector z(dims);
      for (;;) {
        for (int l = 0; l < dims; ++l) z[l] = choices[l][idx[l]];
        consider(z);
        int l = 0;
        while (l < dims && ++idx[l] == choices[l].size()) idx[l++] = 0;
        if (l == dims) break;
      }
    } else {
      const int samples = std::max(plan.candidates, 20000);
      for (int s = 0; s < samples; ++s) consider(random_point(rng));
    }
    return {best, best_cost};
  }

  std::pair<Vector, double> mixed(Rng& rng) const {
    std::vector<Vector> pool;
    std::vector<double> costs;
    pool.reserve(plan.candidates);
    for (int s = 0; s < plan.candidates; ++s) {
      pool.push_back(random_point(rng));
      costs.push_back(cost(pool.back()));
    }
    std::vector<int> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return costs[a] < costs[b]; });

    Vector best = pool[order[0]];
    double best_cost = costs[order[0]];
    const int nc = static_cast<int>(continuous.size());
    NelderMeadOptions options;
    options.max_evaluations = 100 * (nc + 1);
    options.initial_step = 0.05;
    const Vector lower = Vector::Zero(nc);
    const Vector upper = Vector::Ones(nc);
    const int polishes = std::min<int>(plan.multistarts, static_cast<int>(pool.size()));
    for (int s = 0; s < polishes; ++s) {
      Vector full = pool[order[s]];
      Vector sub(nc);
      for (int k = 0; k < nc; ++k) sub[k] = full[continuous[k]];
      auto objective = [&](const Vector& v) {
        Vector z = full;
        for (int k = 0; k < nc; ++k) z[continuous[k]] = v[k];
        return cost(z);
      };
      const OptimResult r = nelder_mead_box(objective, sub, lower, upper, options);
      if (r.value < best_cost) {
        for (int k = 0; k < nc; ++k) full[continuous[k]] = r.x[k];
        best = full;
        best_cost = r.value;
      }
    }
    return {best, best_cost};
  }
};

}  // namespace

Design augment(int dims, const AugmentPlan& plan) {
  validate_plan(dims, plan);
  Design out = plan.existing;
  if (out.size() == 0) out = Design(dims);
  if (plan.n_add == 0) return out;

  PointSet placed = distinct_rows(out.points);
  for (int k = 0; k < plan.n_add; ++k) {
    Rng rng(derive_seed(plan.seed, static_cast<std::uint64_t>(k)));
    StepSearch step{plan, placed, dims, std::vector<std::vector<double>>(dims), {}};
    for (int l = 0; l < dims; ++l) {
      const bool discrete = !plan.levels.empty() && !plan.levels[l].empty();
      if (!discrete) {
        step.continuous.push_back(l);
        continue;
      }
      for (double level : plan.levels[l]) {
        const bool used = plan.criterion == SpaceFillCriterion::MaxPro && (placed.col(l).array() == level).any();
        if (!used) step.choices[l].push_back(level);
      }
      if (step.choices[l].empty()) {
        throw ValidationError("augment: infeasible levels in dimension " + std::to_string(l + 1) + ": all " +
                              std::to_string(plan.levels[l].size()) +
                              " levels are already used, so a projection collision is unavoidable");
      }
    }
    const auto [point, cost] = step.continuous.empty() ? step.all_discrete(rng) : step.mixed(rng);
    if (!std::isfinite(cost)) {
      throw NumericalError("augment: no collision-free candidate found for point " + std::to_string(k + 1));
    }
    out.append(point, Role::SpaceFill, out.next_group());
    placed.conservativeResize(placed.rows() + 1, dims);
    placed.row(placed.rows() - 1) = point.transpose();
  }
  return out;
}

}  // namespace caldoe
