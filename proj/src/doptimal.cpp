#include "caldoe/doptimal.hpp"

#include "caldoe/optimize.hpp"
#include "caldoe/rng.hpp"
#include "caldoe/sobol.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace caldoe {

namespace {

double log_abs_det(const Matrix& j) {
  if (!j.allFinite()) return -kInf;
  const Eigen::PartialPivLU<Matrix> lu(j);
  const Matrix& packed = lu.matrixLU();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < packed.rows(); ++i) {
    const double pivot = std::abs(packed(i, i));
    if (pivot == 0.0 || !std::isfinite(pivot)) return -kInf;
    sum += std::log(pivot);
  }
  return sum;
}

Vector grad_at(const ComputerModel& model, const Vector& u, const Vector& eta0) {
  return model.grad_eta_unit(as_span(u), as_span(eta0));
}

double level_value(int level, int levels) { return static_cast<double>(level) / (levels - 1); }

struct Candidate {
  PointSet points;
  Matrix jacobian;
  double log_det = -kInf;
};

// Coordinate exchange over the level grid until no single-coordinate move
// improves the objective.
void coordinate_exchange(const ComputerModel& model, const Vector& eta0, int levels, Candidate& c) {
  const int q = static_cast<int>(c.points.rows());
  const int p = static_cast<int>(c.points.cols());
  bool improved = true;
  for (int pass = 0; improved && pass < 50; ++pass) {
    improved = false;
    for (int i = 0; i < q; ++i) {
      for (int l = 0; l < p; ++l) {
        const double original = c.points(i, l);
        double best_value = original;
        Vector best_row = c.jacobian.row(i).transpose();
        for (int level = 0; level < levels; ++level) {
          const double v = level_value(level, levels);
          if (v == original) continue;
          Vector u = c.points.row(i).transpose();
          u[l] = v;
          const Vector g = grad_at(model, u, eta0);
          Matrix trial = c.jacobian;
          trial.row(i) = g.transpose();
          const double ld = log_abs_det(trial);
          if (ld > c.log_det + 1e-12 * std::max(1.0, std::abs(c.log_det)) || (c.log_det == -kInf && ld > -kInf)) {
            c.log_det = ld;
            best_value = v;
            best_row = g;
            improved = true;
          }
        }
        c.points(i, l) = best_value;
        c.jacobian.row(i) = best_row.transpose();
      }
    }
  }
}

void polish(const ComputerModel& model, const Vector& eta0, int budget, Candidate& c) {
  const int q = static_cast<int>(c.points.rows());
  const int p = static_cast<int>(c.points.cols());
  const Vector lower = Vector::Zero(p);
  const Vector upper = Vector::Ones(p);
  NelderMeadOptions options;
  options.max_evaluations = budget;
  options.initial_step = 0.02;
  for (int round = 0; round < 2; ++round) {
    for (int i = 0; i < q; ++i) {
      auto objective = [&](const Vector& u) {
        Matrix trial = c.jacobian;
        trial.row(i) = grad_at(model, u, eta0).transpose();
        return -log_abs_det(trial);
      };
      const OptimResult r = nelder_mead_box(objective, c.points.row(i).transpose(), lower, upper, options);
      if (-r.value > c.log_det) {
        c.points.row(i) = r.x.transpose();
        c.jacobian.row(i) = grad_at(model, r.x, eta0).transpose();
        c.log_det = log_abs_det(c.jacobian);
      }
    }
  }
}

void check_eta(const ComputerModel& model, const Vector& eta0) {
  if (eta0.size() != model.q()) {
    throw ValidationError("eta0 has " + std::to_string(eta0.size()) + " entries, model has q = " +
                          std::to_string(model.q()));
  }
  for (int j = 0; j < model.q(); ++j) {
    if (!model.eta_bounds()[j].contains(eta0[j])) {
      throw ValidationError("eta0[" + std::to_string(j) + "] is outside eta_bounds");
    }
  }
}

}  // namespace

Matrix sensitivity_matrix(const ComputerModel& model, const PointSet& candidate_unit, const Vector& eta0) {
  Matrix j(candidate_unit.rows(), model.q());
  for (Eigen::Index i = 0; i < candidate_unit.rows(); ++i) {
    j.row(i) = grad_at(model, candidate_unit.row(i).transpose(), eta0).transpose();
  }
  return j;
}

double log_det_objective(const ComputerModel& model, const PointSet& candidate_unit, const Vector& eta0) {
  if (candidate_unit.rows() != model.q() || candidate_unit.cols() != model.p()) {
    throw ValidationError("candidate design must have q = " + std::to_string(model.q()) + " points in p = " +
                          std::to_string(model.p()) + " dimensions");
  }
  return log_abs_det(sensitivity_matrix(model, candidate_unit, eta0));
}

DOptimalResult d_optimal_design(const ComputerModel& model, const Vector& eta0, int q_points,
                                const SearchConfig& search) {
  check_eta(model, eta0);
  if (q_points != model.q()) {
    throw ValidationError("d_optimal_design needs q_points = q = " + std::to_string(model.q()));
  }
  if (search.multistarts < 1 || search.grid_levels < 2) {
    throw ValidationError("search needs multistarts >= 1 and grid_levels >= 2");
  }
  const int p = model.p();
  Candidate best;
  for (int start = 0; start < search.multistarts; ++start) {
    Rng rng(derive_seed(search.seed, static_cast<std::uint64_t>(start)));
    Candidate c;
    c.points.resize(q_points, p);
    for (int i = 0; i < q_points; ++i) {
      for (int l = 0; l < p; ++l) {
        c.points(i, l) = level_value(static_cast<int>(rng.below(search.grid_levels)), search.grid_levels);
      }
    }
    c.jacobian = sensitivity_matrix(model, c.points, eta0);
    c.log_det = log_abs_det(c.jacobian);
    coordinate_exchange(model, eta0, search.grid_levels, c);
    if (c.log_det == -kInf) continue;
    polish(model, eta0, search.polish_iterations, c);
    // Ties keep the earliest start.
    if (c.log_det > best.log_det) best = std::move(c);
  }
  if (best.log_det == -kInf) {
    throw NumericalError("singular information: no design gives a nonsingular sensitivity matrix for model '" +
                         model.name() + "' (some eta direction has zero gradient over the region)");
  }
  DOptimalResult out;
  out.design = Design(p);
  for (int i = 0; i < q_points; ++i) out.design.append(best.points.row(i).transpose(), Role::DOpt, i);
  out.log_objective = best.log_det;
  out.objective = std::exp(best.log_det);
  return out;
}

Extrema find_extrema(const ComputerModel& model, const Vector& eta0, const SearchConfig& search) {
  check_eta(model, eta0);
  const int p = model.p();
  PointSet starts;
  if (p <= 2) {
    const int levels = search.grid_levels;
    const int total = p == 1 ? levels : levels * levels;
    starts.resize(total, p);
    for (int k = 0; k < total; ++k) {
      starts(k, 0) = level_value(k % levels, levels);
      if (p == 2) starts(k, 1) = level_value(k / levels, levels);
    }
  } else {
    const int count = std::max(4096, 200 * search.multistarts);
    starts.resize(count + 2, p);
    starts.topRows(count) = sobol_points(p, count, search.seed % 1024);
    starts.row(count).setZero();
    starts.row(count + 1).setOnes();
  }

  const Eigen::Index n = starts.rows();
  std::vector<double> values(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    const Vector u = starts.row(k).transpose();
    values[static_cast<std::size_t>(k)] = model.evaluate_unit(as_span(u), as_span(eta0));
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Vector lower = Vector::Zero(p);
  const Vector upper = Vector::Ones(p);
  NelderMeadOptions options;
  options.max_evaluations = search.polish_iterations;
  options.initial_step = 0.5 / (search.grid_levels - 1);

  auto search_direction = [&](double sign, Vector& best_x, double& best_f) {
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return sign * values[static_cast<std::size_t>(a)] > sign * values[static_cast<std::size_t>(b)];
    });
    best_x = starts.row(order[0]).transpose();
    best_f = values[static_cast<std::size_t>(order[0])];
    const int polishes = std::min<Eigen::Index>(search.multistarts, n);
    for (int s = 0; s < polishes; ++s) {
      auto objective = [&](const Vector& u) { return -sign * model.evaluate_unit(as_span(u), as_span(eta0)); };
      const OptimResult r = nelder_mead_box(objective, starts.row(order[s]).transpose(), lower, upper, options);
      const double f = -sign * r.value;
      if (sign * f > sign * best_f) {
        best_f = f;
        best_x = r.x;
      }
    }
  };

  Extrema out;
  search_direction(+1.0, out.x_max, out.f_max);
  search_direction(-1.0, out.x_min, out.f_min);
  return out;
}

}  // namespace caldoe
