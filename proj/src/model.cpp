#include "caldoe/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace caldoe {

namespace {

constexpr double kBoundsTolerance = 1e-9;
constexpr int kInlineVars = 32;

void validate_bounds(const std::vector<Interval>& bounds, const char* what) {
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    const auto& b = bounds[i];
    if (!(std::isfinite(b.lo) && std::isfinite(b.hi) && b.lo < b.hi)) {
      throw ValidationError(std::string(what) + "[" + std::to_string(i) + "] must satisfy lower < upper");
    }
  }
}

std::string format_point(std::span<const double> v) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ")";
  return os.str();
}

}  // namespace

ComputerModel::ComputerModel(std::string name, std::vector<Interval> x_bounds, std::vector<Interval> eta_bounds,
                             Body body)
    : name_(std::move(name)), x_bounds_(std::move(x_bounds)), eta_bounds_(std::move(eta_bounds)), body_(std::move(body)) {
  if (x_bounds_.empty()) throw ValidationError("model '" + name_ + "': p must be >= 1");
  if (eta_bounds_.empty()) throw ValidationError("model '" + name_ + "': q must be >= 1");
  validate_bounds(x_bounds_, "x_bounds");
  validate_bounds(eta_bounds_, "eta_bounds");
  if (!body_) throw ValidationError("model '" + name_ + "' has no body");
}

ComputerModel ComputerModel::parse(std::string name, std::string_view source, const ModelSignature& signature) {
  ExpressionSignature sig;
  sig.p = static_cast<int>(signature.x_bounds.size());
  sig.q = static_cast<int>(signature.eta_bounds.size());
  sig.constants = signature.constants;
  auto expr = std::make_shared<const Expression>(Expression::parse(source, sig));
  const int p = sig.p;
  Body body = [expr, p](std::span<const double> x, std::span<const double> eta) {
    const std::size_t n = x.size() + eta.size();
    if (n <= kInlineVars) {
      double buf[kInlineVars];
      std::copy(x.begin(), x.end(), buf);
      std::copy(eta.begin(), eta.end(), buf + p);
      return expr->evaluate(std::span<const double>(buf, n));
    }
    std::vector<double> buf(x.begin(), x.end());
    buf.insert(buf.end(), eta.begin(), eta.end());
    return expr->evaluate(buf);
  };
  ComputerModel model(std::move(name), signature.x_bounds, signature.eta_bounds, std::move(body));
  model.expression_ = std::move(expr);
  return model;
}

void ComputerModel::check_inputs(std::span<const double> x, std::span<const double> eta) const {
  if (static_cast<int>(x.size()) != p() || static_cast<int>(eta.size()) != q()) {
    throw ValidationError("model '" + name_ + "' expects " + std::to_string(p()) + " inputs and " +
                          std::to_string(q()) + " parameters");
  }
  for (int i = 0; i < p(); ++i) {
    if (!x_bounds_[i].contains(x[i], kBoundsTolerance * x_bounds_[i].width())) {
      throw ValidationError("model '" + name_ + "': x" + std::to_string(i + 1) + " = " + std::to_string(x[i]) +
                            " is outside its bounds");
    }
  }
  for (int j = 0; j < q(); ++j) {
    if (!eta_bounds_[j].contains(eta[j], kBoundsTolerance * eta_bounds_[j].width())) {
      throw ValidationError("model '" + name_ + "': eta" + std::to_string(j + 1) + " = " +
                            std::to_string(eta[j]) + " is outside its bounds");
    }
  }
}

double ComputerModel::call_body(std::span<const double> x, std::span<const double> eta) const {
  const double v = body_(x, eta);
  if (!std::isfinite(v)) {
    throw NumericalError("model '" + name_ + "' returned a non-finite value at x = " + format_point(x) +
                         ", eta = " + format_point(eta));
  }
  return v;
}

double ComputerModel::evaluate(std::span<const double> x, std::span<const double> eta) const {
  check_inputs(x, eta);
  return call_body(x, eta);
}

double ComputerModel::evaluate_unit(std::span<const double> u, std::span<const double> eta) const {
  const Vector x = from_unit(u);
  return evaluate(as_span(x), eta);
}

Vector ComputerModel::grad_eta(std::span<const double> x, std::span<const double> eta) const {
  check_inputs(x, eta);
  Vector grad(q());
  std::vector<double> work(eta.begin(), eta.end());
  for (int j = 0; j < q(); ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(eta[j]));
    const Interval& b = eta_bounds_[j];
    const bool up_ok = eta[j] + h <= b.hi;
    const bool down_ok = eta[j] - h >= b.lo;
    double f_plus = 0.0;
    double f_minus = 0.0;
    double span = 0.0;
    if (up_ok && down_ok) {
      work[j] = eta[j] + h;
      f_plus = call_body(x, work);
      work[j] = eta[j] - h;
      f_minus = call_body(x, work);
      span = 2.0 * h;
    } else if (up_ok) {
      work[j] = eta[j] + h;
      f_plus = call_body(x, work);
      work[j] = eta[j];
      f_minus = call_body(x, work);
      span = h;
    } else if (down_ok) {
      work[j] = eta[j];
      f_plus = call_body(x, work);
      work[j] = eta[j] - h;
      f_minus = call_body(x, work);
      span = h;
    } else {
      throw ValidationError("eta" + std::to_string(j + 1) + " interval is narrower than the difference step");
    }
    work[j] = eta[j];
    grad[j] = (f_plus - f_minus) / span;
  }
  return grad;
}

Vector ComputerModel::grad_eta_unit(std::span<const double> u, std::span<const double> eta) const {
  const Vector x = from_unit(u);
  return grad_eta(as_span(x), eta);
}

Vector ComputerModel::to_unit(std::span<const double> x) const {
  Vector u(p());
  for (int i = 0; i < p(); ++i) u[i] = x_bounds_[i].to_unit(x[i]);
  return u;
}

Vector ComputerModel::from_unit(std::span<const double> u) const {
  if (static_cast<int>(u.size()) != p()) {
    throw ValidationError("model '" + name_ + "' expects " + std::to_string(p()) + " inputs");
  }
  Vector x(p());
  for (int i = 0; i < p(); ++i) {
    // Endpoints map exactly so that corner designs stay on the boundary.
    x[i] = u[i] == 1.0 ? x_bounds_[i].hi : x_bounds_[i].from_unit(u[i]);
  }
  return x;
}

Vector ComputerModel::clamp_eta(std::span<const double> eta) const {
  Vector out(q());
  for (int j = 0; j < q(); ++j) out[j] = std::clamp(eta[j], eta_bounds_[j].lo, eta_bounds_[j].hi);
  return out;
}

ComputerModel toy_model() {
  return ComputerModel("toy", {{0.0, 1.0}, {0.0, 1.0}}, {{0.0, 2.0}},
                       [](std::span<const double> x, std::span<const double> eta) {
                         const double a = x[0] - 1.5 * x[1];
                         const double b = x[0] + x[1] - 0.7;
                         return std::exp(-eta[0] * a * a) + std::exp(-2.0 * eta[0] * b * b);
                       });
}

ComputerModel linear_model() {
  return ComputerModel("linear", {{0.0, 1.0}, {0.0, 1.0}}, std::vector<Interval>(4, Interval{-10.0, 10.0}),
                       [](std::span<const double> x, std::span<const double> eta) {
                         return eta[0] + eta[1] * x[0] + eta[2] * x[1] + eta[3] * x[0] * x[1];
                       });
}

ComputerModel builtin_model(const std::string& name) {
  if (name == "toy") return toy_model();
  if (name == "linear") return linear_model();
  throw ValidationError("unknown built-in model '" + name + "' (expected toy or linear)");
}

}  // namespace caldoe
