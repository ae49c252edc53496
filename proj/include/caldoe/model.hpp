#pragma once

#include "caldoe/common.hpp"
#include "caldoe/expression.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace caldoe {

/// Everything needed to parse a model expression: input and parameter
/// bounds plus the named constants bound at parse time.
struct ModelSignature {
  std::vector<Interval> x_bounds;
  std::vector<Interval> eta_bounds;
  std::map<std::string, double> constants;
};

/// A computer model f(x; eta). Immutable after construction, so it can be
/// evaluated concurrently. x is given either in physical units (evaluate) or
/// in the unit hypercube (evaluate_unit); eta is always physical.
class ComputerModel {
 public:
  using Body = std::function<double(std::span<const double> x, std::span<const double> eta)>;

  ComputerModel(std::string name, std::vector<Interval> x_bounds, std::vector<Interval> eta_bounds, Body body);

  static ComputerModel parse(std::string name, std::string_view source, const ModelSignature& signature);

  const std::string& name() const { return name_; }
  int p() const { return static_cast<int>(x_bounds_.size()); }
  int q() const { return static_cast<int>(eta_bounds_.size()); }
  const std::vector<Interval>& x_bounds() const { return x_bounds_; }
  const std::vector<Interval>& eta_bounds() const { return eta_bounds_; }

  /// Parsed body, or nullptr for built-in models.
  const Expression* expression() const { return expression_.get(); }

  double evaluate(std::span<const double> x, std::span<const double> eta) const;
  double evaluate_unit(std::span<const double> u, std::span<const double> eta) const;

  /// Central-difference gradient in eta with step 1e-6 * max(1, |eta_j|),
  /// one-sided where the central stencil would leave eta_bounds.
  Vector grad_eta(std::span<const double> x, std::span<const double> eta) const;
  Vector grad_eta_unit(std::span<const double> u, std::span<const double> eta) const;

  Vector to_unit(std::span<const double> x) const;
  Vector from_unit(std::span<const double> u) const;

  /// Clamps eta into eta_bounds.
  Vector clamp_eta(std::span<const double> eta) const;

 private:
  void check_inputs(std::span<const double> x, std::span<const double> eta) const;
  double call_body(std::span<const double> x, std::span<const double> eta) const;

  std::string name_;
  std::vector<Interval> x_bounds_;
  std::vector<Interval> eta_bounds_;
  Body body_;
  std::shared_ptr<const Expression> expression_;
};

inline std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

/// f(x; eta) = exp(-eta (x1 - 1.5 x2)^2) + exp(-2 eta (x1 + x2 - 0.7)^2) on
/// [0,1]^2 with eta in [0, 2].
ComputerModel toy_model();

/// f(x; eta) = eta1 + eta2 x1 + eta3 x2 + eta4 x1 x2 on [0,1]^2, eta in [-10, 10]^4.
ComputerModel linear_model();

/// Looks up a built-in model by name ("toy", "linear").
ComputerModel builtin_model(const std::string& name);

}  // namespace caldoe
