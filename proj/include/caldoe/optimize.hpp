#pragma once

#include "caldoe/common.hpp"

#include <functional>

namespace caldoe {

struct NelderMeadOptions {
  int max_evaluations = 2000;
  double value_tolerance = 1e-12;
  double step_tolerance = 1e-10;
  /// Initial simplex edge as a fraction of each box side.
  double initial_step = 0.1;
};

struct OptimResult {
  Vector x;
  double value = kInf;
  int evaluations = 0;
};

/// Minimizes `objective` inside the box [lower, upper] with a Nelder-Mead
/// simplex. Trial vertices are projected onto the box. Non-finite objective
/// values rank worse than every finite value.
OptimResult nelder_mead_box(const std::function<double(const Vector&)>& objective, const Vector& start,
                            const Vector& lower, const Vector& upper, const NelderMeadOptions& options = {});

}  // namespace caldoe
