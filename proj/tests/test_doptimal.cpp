#include <doctest.h>

#include "caldoe/doptimal.hpp"
#include "caldoe/rng.hpp"

#include <algorithm>
#include <cmath>

using namespace caldoe;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// |df/deta| for the toy model, written out by hand.
double toy_sensitivity(double x1, double x2, double eta) {
  const double a = (x1 - 1.5 * x2) * (x1 - 1.5 * x2);
  const double b = (x1 + x2 - 0.7) * (x1 + x2 - 0.7);
  return std::abs(-a * std::exp(-eta * a) - 2.0 * b * std::exp(-2.0 * eta * b));
}

}  // namespace

TEST_CASE("log_det_objective on the factorial corners equals the raw-coded determinant") {
  const auto lin = linear_model();
  PointSet corners(4, 2);
  corners << 0, 0, 1, 0, 0, 1, 1, 1;
  // Oracle: rows (1, x1, x2, x1 x2) of the four corners.
  Matrix rows(4, 4);
  for (int i = 0; i < 4; ++i) rows.row(i) << 1, corners(i, 0), corners(i, 1), corners(i, 0) * corners(i, 1);
  const double oracle = std::log(std::abs(rows.determinant()));
  CHECK(oracle == doctest::Approx(0.0));
  const double ld = log_det_objective(lin, corners, vec({1, 1, 1, 1}));
  CHECK(ld == doctest::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("log_det_objective returns the sentinel for duplicated points") {
  const auto lin = linear_model();
  PointSet dup(4, 2);
  dup << 0, 0, 1, 0, 1, 0, 1, 1;
  CHECK(log_det_objective(lin, dup, vec({1, 1, 1, 1})) == -kInf);
}

TEST_CASE("log_det_objective for q = 1 is log |df/deta|") {
  const auto toy = toy_model();
  PointSet one(1, 2);
  one << 0.5, 1.0;
  const Vector eta = vec({0.5});
  const double g = toy.grad_eta_unit(std::vector<double>{0.5, 1.0}, as_span(eta))[0];
  CHECK(log_det_objective(toy, one, eta) == doctest::Approx(std::log(std::abs(g))).epsilon(1e-12));
}

TEST_CASE("log_det_objective is invariant to point order and shifts by q log|c| under scaling") {
  const auto lin = linear_model();
  const auto scaled = ComputerModel("scaled", lin.x_bounds(), lin.eta_bounds(),
                                    [&](std::span<const double> x, std::span<const double> e) {
                                      return -3.0 * lin.evaluate(x, e);
                                    });
  Rng rng(5);
  const Vector eta = vec({0.3, -1, 2, 0.5});
  for (int t = 0; t < 20; ++t) {
    PointSet c(4, 2);
    for (int i = 0; i < 4; ++i) c.row(i) << rng.uniform(), rng.uniform();
    PointSet perm = c;
    perm.row(0).swap(perm.row(3));
    perm.row(1).swap(perm.row(2));
    const double base = log_det_objective(lin, c, eta);
    CHECK(log_det_objective(lin, perm, eta) == doctest::Approx(base).epsilon(1e-12));
    CHECK(log_det_objective(scaled, c, eta) == doctest::Approx(base + 4.0 * std::log(3.0)).epsilon(1e-6));
  }
}

TEST_CASE("scaling the toy model leaves the D-optimal argmax unchanged on a grid") {
  const auto toy = toy_model();
  const auto scaled = ComputerModel("scaled", toy.x_bounds(), toy.eta_bounds(),
                                    [&](std::span<const double> x, std::span<const double> e) {
                                      return 2.5 * toy.evaluate(x, e);
                                    });
  const Vector eta = vec({0.5});
  double best_a = -kInf, best_b = -kInf;
  int arg_a = -1, arg_b = -1;
  for (int i = 0; i <= 50; ++i) {
    for (int j = 0; j <= 50; ++j) {
      PointSet c(1, 2);
      c << i / 50.0, j / 50.0;
      const double a = log_det_objective(toy, c, eta);
      const double b = log_det_objective(scaled, c, eta);
      if (a > best_a) best_a = a, arg_a = i * 51 + j;
      if (b > best_b) best_b = b, arg_b = i * 51 + j;
    }
  }
  CHECK(arg_a == arg_b);
  CHECK(best_b - best_a == doctest::Approx(std::log(2.5)).epsilon(1e-6));
}

TEST_CASE("toy D-optimal point") {
  const auto toy = toy_model();
  SearchConfig search;
  const auto r = d_optimal_design(toy, vec({0.5}), 1, search);
  REQUIRE(r.design.size() == 1);
  CHECK(std::abs(r.design.points(0, 0) - 0.50) <= 0.03);
  CHECK(std::abs(r.design.points(0, 1) - 1.00) <= 0.03);
  CHECK(r.design.roles[0] == Role::DOpt);

  // Dense 201 x 201 grid oracle for the optimal objective.
  double oracle = 0.0;
  for (int i = 0; i <= 200; ++i) {
    for (int j = 0; j <= 200; ++j) oracle = std::max(oracle, toy_sensitivity(i / 200.0, j / 200.0, 0.5));
  }
  CHECK(std::abs(r.objective - oracle) <= 1e-3 * oracle);
  CHECK(r.objective >= oracle * (1 - 1e-9));
}

TEST_CASE("linear model D-optimal design is the 2^2 factorial") {
  const auto lin = linear_model();
  SearchConfig search;
  const auto r = d_optimal_design(lin, vec({1, -2, 0.5, 3}), 4, search);
  REQUIRE(r.design.size() == 4);
  PointSet corners(4, 2);
  corners << 0, 0, 1, 0, 0, 1, 1, 1;
  std::vector<bool> used(4, false);
  for (int i = 0; i < 4; ++i) {
    int match = -1;
    for (int c = 0; c < 4; ++c) {
      if (!used[c] && (r.design.points.row(i) - corners.row(c)).lpNorm<Eigen::Infinity>() <= 0.02) match = c;
    }
    REQUIRE(match >= 0);
    used[match] = true;
  }
}

TEST_CASE("D-optimal objective beats 1000 random candidate designs") {
  const auto lin = linear_model();
  const Vector eta = vec({0.2, 0.1, -0.3, 1.0});
  SearchConfig search;
  search.seed = 17;
  const auto r = d_optimal_design(lin, eta, 4, search);
  Rng rng(99);
  for (int t = 0; t < 1000; ++t) {
    PointSet c(4, 2);
    for (int i = 0; i < 4; ++i) c.row(i) << rng.uniform(), rng.uniform();
    CHECK(log_det_objective(lin, c, eta) <= r.log_objective + 1e-12);
  }
}

TEST_CASE("D-optimal search is deterministic given the seed") {
  const auto toy = toy_model();
  SearchConfig search;
  search.seed = 3;
  const auto a = d_optimal_design(toy, vec({0.8}), 1, search);
  const auto b = d_optimal_design(toy, vec({0.8}), 1, search);
  CHECK(a.design.points == b.design.points);
  CHECK(a.objective == b.objective);
}

TEST_CASE("degenerate model raises a singular-information error") {
  const auto m = ComputerModel::parse("flat", "eta1*x1 + x2", {{{0, 1}, {0, 1}}, {{0, 1}, {0, 1}}, {}});
  SearchConfig search;
  search.multistarts = 3;
  CHECK_THROWS_AS(d_optimal_design(m, vec({0.5, 0.5}), 2, search), NumericalError);
  CHECK_THROWS_AS(d_optimal_design(m, vec({0.5, 0.5}), 1, search), ValidationError);
}

TEST_CASE("toy extrema") {
  const auto toy = toy_model();
  SearchConfig search;
  const Vector eta = vec({0.5});
  const auto e = find_extrema(toy, eta, search);
  CHECK(std::abs(e.x_max[0] - 0.42) <= 0.03);
  CHECK(std::abs(e.x_max[1] - 0.28) <= 0.03);
  CHECK(std::abs(e.x_min[0] - 1.00) <= 0.03);
  CHECK(std::abs(e.x_min[1] - 1.00) <= 0.03);
  // Audit against a 201 x 201 verification grid.
  for (int i = 0; i <= 200; ++i) {
    for (int j = 0; j <= 200; ++j) {
      const std::vector<double> u{i / 200.0, j / 200.0};
      const double f = toy.evaluate_unit(u, as_span(eta));
      CHECK_MESSAGE(e.f_max >= f - 1e-12, i, ",", j);
      CHECK_MESSAGE(e.f_min <= f + 1e-12, i, ",", j);
    }
  }
}

TEST_CASE("extrema of monotone and constant models") {
  const auto id = ComputerModel::parse("id", "x1 + 0*eta1", {{{0, 1}}, {{0, 1}}, {}});
  SearchConfig search;
  const Vector eta = vec({0.5});
  const auto e = find_extrema(id, eta, search);
  CHECK(e.x_max[0] == 1.0);
  CHECK(e.x_min[0] == 0.0);
  const auto c = ComputerModel::parse("c", "3 + 0*eta1 + 0*x1", {{{0, 1}, {0, 1}}, {{0, 1}}, {}});
  const auto ec = find_extrema(c, eta, search);
  CHECK(ec.f_max == ec.f_min);
}

TEST_CASE("extrema audit with random points for p > 2") {
  const auto m = ComputerModel::parse("bump", "exp(-eta1*((x1-0.3)^2 + (x2-0.6)^2 + (x3-0.8)^2)) + 0.1*x1*x2",
                                      {{{0, 1}, {0, 1}, {0, 1}}, {{0.5, 5}}, {}});
  SearchConfig search;
  const Vector eta = vec({2.0});
  const auto e = find_extrema(m, eta, search);
  Rng rng(1234);
  for (int t = 0; t < 10000; ++t) {
    const std::vector<double> u{rng.uniform(), rng.uniform(), rng.uniform()};
    const double f = m.evaluate_unit(u, as_span(eta));
    REQUIRE(e.f_max >= f - 1e-12);
    REQUIRE(e.f_min <= f + 1e-12);
  }
}
