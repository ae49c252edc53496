#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace caldoe {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Point sets are stored row-wise: one point per row.
using PointSet = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Closed interval [lo, hi] with lo < hi.
struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double width() const { return hi - lo; }
  bool contains(double v, double tol = 0.0) const {
    return v >= lo - tol && v <= hi + tol;
  }
  double to_unit(double v) const { return (v - lo) / (hi - lo); }
  double from_unit(double u) const { return lo + u * (hi - lo); }
};

/// Base for every error raised by the library. The CLI maps kinds to exit
/// codes: validation -> 1, numerical -> 2.
class Error : public std::runtime_error {
 public:
  enum class Kind { Validation, Numerical };
  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(Kind::Validation, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(Kind::Numerical, what) {}
};

/// Syntax errors carry a 1-based line/column into the source text.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& msg, int line, int column)
      : ValidationError(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace caldoe
