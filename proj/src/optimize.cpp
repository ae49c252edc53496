#include "caldoe/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace caldoe {

namespace {

// NaN and +inf both sort last.
double rank_value(double v) { return std::isnan(v) ? kInf : v; }

}  // namespace

OptimResult nelder_mead_box(const std::function<double(const Vector&)>& objective, const Vector& start,
                            const Vector& lower, const Vector& upper, const NelderMeadOptions& options) {
  const int n = static_cast<int>(start.size());
  OptimResult result;
  auto project = [&](Vector v) {
    for (int i = 0; i < n; ++i) v[i] = std::clamp(v[i], lower[i], upper[i]);
    return v;
  };
  auto eval = [&](const Vector& v) {
    ++result.evaluations;
    return rank_value(objective(v));
  };

  std::vector<Vector> simplex(n + 1);
  std::vector<double> values(n + 1);
  simplex[0] = project(start);
  values[0] = eval(simplex[0]);
  for (int i = 0; i < n; ++i) {
    Vector v = simplex[0];
    const double step = options.initial_step * (upper[i] - lower[i]);
    v[i] = v[i] + step <= upper[i] ? v[i] + step : v[i] - step;
    simplex[i + 1] = project(v);
    values[i + 1] = eval(simplex[i + 1]);
  }

  std::vector<int> order(n + 1);
  while (result.evaluations < options.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return values[a] < values[b]; });
    const int best = order.front();
    const int worst = order.back();
    const int second = order[n - 1 >= 0 ? n - 1 : 0];

    double size = 0.0;
    for (int i = 0; i <= n; ++i) size = std::max(size, (simplex[i] - simplex[best]).lpNorm<Eigen::Infinity>());
    const double spread = values[worst] - values[best];
    if (size <= options.step_tolerance ||
        (std::isfinite(spread) && spread <= options.value_tolerance * (1.0 + std::abs(values[best])))) {
      break;
    }

    Vector centroid = Vector::Zero(n);
    for (int i = 0; i <= n; ++i) {
      if (i != worst) centroid += simplex[i];
    }
    centroid /= n;

    const Vector reflected = project(centroid + (centroid - simplex[worst]));
    const double f_reflected = eval(reflected);
    if (f_reflected < values[best]) {
      const Vector expanded = project(centroid + 2.0 * (centroid - simplex[worst]));
      const double f_expanded = eval(expanded);
      if (f_expanded < f_reflected) {
        simplex[worst] = expanded;
        values[worst] = f_expanded;
      } else {
        simplex[worst] = reflected;
        values[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < values[second]) {
      simplex[worst] = reflected;
      values[worst] = f_reflected;
      continue;
    }
    const bool outside = f_reflected < values[worst];
    const Vector contracted = outside ? project(centroid + 0.5 * (reflected - centroid))
                                      : project(centroid + 0.5 * (simplex[worst] - centroid));
    const double f_contracted = eval(contracted);
    if (f_contracted < (outside ? f_reflected : values[worst])) {
      simplex[worst] = contracted;
      values[worst] = f_contracted;
      continue;
    }
    // Shrink toward the best vertex.
    for (int i = 0; i <= n; ++i) {
      if (i == best) continue;
      simplex[i] = project(simplex[best] + 0.5 * (simplex[i] - simplex[best]));
      values[i] = eval(simplex[i]);
    }
  }

  const auto it = std::min_element(values.begin(), values.end());
  const auto idx = static_cast<std::size_t>(std::distance(values.begin(), it));
  result.x = simplex[idx];
  result.value = *it;
  return result;
}

}  // namespace caldoe
