#pragma once

#include "caldoe/design.hpp"
#include "caldoe/model.hpp"

#include <cstdint>

namespace caldoe {

/// Multistart search settings shared by the D-optimal and extremum searches.
struct SearchConfig {
  int multistarts = 20;
  /// Levels per input dimension for the coarse exchange/grid stage.
  int grid_levels = 51;
  /// Evaluation budget of each Nelder-Mead polish.
  int polish_iterations = 400;
  std::uint64_t seed = 1;
};

/// q x q sensitivity matrix: row i is grad_eta(model, x_i, eta0).
Matrix sensitivity_matrix(const ComputerModel& model, const PointSet& candidate_unit, const Vector& eta0);

/// log |det J0| for a q-point candidate in [0,1]^p; -inf when J0 is singular.
double log_det_objective(const ComputerModel& model, const PointSet& candidate_unit, const Vector& eta0);

struct DOptimalResult {
  Design design;              // q points tagged DOPT, one group each
  double objective = 0.0;     // |det J0| at the optimum
  double log_objective = -kInf;
};

/// Locally D-optimal q-point design at eta0: coordinate exchange over a
/// grid_levels grid from each seeded start, then a per-point Nelder-Mead
/// polish. Throws NumericalError when every start is singular.
DOptimalResult d_optimal_design(const ComputerModel& model, const Vector& eta0, int q_points,
                                const SearchConfig& search);

struct Extrema {
  Vector x_max;  // unit coordinates
  Vector x_min;
  double f_max = 0.0;
  double f_min = 0.0;
};

/// Global maximizer and minimizer of f(.; eta0) over [0,1]^p.
Extrema find_extrema(const ComputerModel& model, const Vector& eta0, const SearchConfig& search);

}  // namespace caldoe
