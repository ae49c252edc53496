#include <doctest.h>

#include "caldoe/csv.hpp"
#include "caldoe/gp.hpp"
#include "caldoe/model.hpp"
#include "caldoe/rng.hpp"
#include "caldoe/sobol.hpp"
#include "caldoe/spacefill.hpp"
#include "caldoe/surrogate.hpp"

#include <cmath>
#include <filesystem>

using namespace caldoe;

namespace {

PointSet column(std::initializer_list<double> v) {
  PointSet out(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) out(i++, 0) = x;
  return out;
}

// 30-run MaxPro design in (x1, x2, eta) with toy-model outputs, eta in [0, 2].
struct ToyExperiment {
  PointSet unit;
  PointSet physical;
  Vector y;
};

ToyExperiment toy_experiment(int runs = 30) {
  AugmentPlan plan;
  plan.existing = Design(3);
  plan.n_add = runs;
  plan.seed = 11;
  plan.candidates = 256;
  plan.multistarts = 4;
  const Design d = augment(3, plan);
  const ComputerModel toy = toy_model();
  ToyExperiment e{d.points, d.points, Vector(runs)};
  for (int i = 0; i < runs; ++i) {
    e.physical(i, 2) = toy.eta_bounds()[0].from_unit(d.points(i, 2));
    const Vector x = d.points.row(i).head(2).transpose();
    const Vector eta = e.physical.row(i).tail(1).transpose();
    e.y[i] = toy.evaluate(as_span(x), as_span(eta));
  }
  return e;
}

}  // namespace

TEST_CASE("two-point kriging matches the closed form") {
  const double theta = 0.7, tau2 = 1.3, mu = 0.2;
  const GaussianProcess gp(column({0.0, 1.0}), Eigen::Vector2d(0.0, 1.0), Vector::Constant(1, theta), tau2, mu);
  CHECK(gp.nugget() == 0.0);
  // Oracle: R = [[1, r], [r, 1]], r = exp(-1/(2 theta^2)); k(0.5) = tau2 * h (1, 1), h = exp(-1/(8 theta^2)).
  const double r = std::exp(-0.5 / (theta * theta));
  const double h = std::exp(-0.125 / (theta * theta));
  const double mean = mu + h / (1.0 + r) * ((0.0 - mu) + (1.0 - mu));
  const double var = tau2 * (1.0 - 2.0 * h * h / (1.0 + r));
  const auto [m, v] = gp.posterior(Vector::Constant(1, 0.5));
  CHECK(std::abs(m - mean) <= 1e-10);
  CHECK(std::abs(v - var) <= 1e-10);
}

TEST_CASE("posterior interpolates and reverts to the prior far away") {
  const GaussianProcess gp(column({0.1, 0.4, 0.9}), Eigen::Vector3d(1.0, -2.0, 0.5), Vector::Constant(1, 0.2), 2.0,
                           0.3);
  for (int i = 0; i < 3; ++i) {
    const auto [m, v] = gp.posterior(gp.inputs().row(i).transpose());
    CHECK(m == doctest::Approx(gp.outputs()[i]).epsilon(1e-10));
    CHECK(v <= 1e-10);
  }
  const auto [m, v] = gp.posterior(Vector::Constant(1, 50.0));
  CHECK(m == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(v == doctest::Approx(2.0).epsilon(1e-12));
  for (int i = 0; i <= 100; ++i) {
    CHECK(gp.posterior(Vector::Constant(1, i / 100.0)).second <= 2.0 + 1e-12);
  }
}

TEST_CASE("mean reduces to mu when y is constant at mu") {
  const GaussianProcess gp(column({0.0, 0.3, 0.7}), Vector::Constant(3, 4.0), Vector::Constant(1, 0.3), 1.0, 4.0);
  CHECK(gp.predict_mean(Vector::Constant(1, 0.5)) == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("short lengthscales send the off-training mean to mu") {
  const PointSet s = column({0.0, 0.5, 1.0});
  const Eigen::Vector3d y(1.0, 3.0, -1.0);
  double prev = kInf;
  for (double theta : {0.5, 0.1, 0.02, 0.005}) {
    const GaussianProcess gp(s, y, Vector::Constant(1, theta), 1.0, 0.0);
    const double dev = std::abs(gp.predict_mean(Vector::Constant(1, 0.25)));
    CHECK(dev <= prev + 1e-12);
    prev = dev;
  }
  CHECK(prev <= 1e-12);
}

TEST_CASE("constant outputs fit to a constant surface") {
  Rng rng(3);
  PointSet s(10, 2);
  for (int i = 0; i < 10; ++i) s.row(i) << rng.uniform(), rng.uniform();
  const auto gp = GaussianProcess::fit(s, Vector::Constant(10, 2.5));
  for (int t = 0; t < 20; ++t) {
    const Eigen::Vector2d u(rng.uniform(), rng.uniform());
    CHECK(gp.predict_mean(Vector(u)) == doctest::Approx(2.5).epsilon(1e-10));
  }
  for (int i = 0; i < 10; ++i) CHECK(gp.posterior(s.row(i).transpose()).second <= 1e-10);
}

TEST_CASE("fitted GP interpolates the 30-run toy computer experiment") {
  const auto e = toy_experiment();
  const auto gp = GaussianProcess::fit(e.unit, e.y);
  CHECK(gp.nugget() <= 1e-8);
  for (int i = 0; i < 30; ++i) {
    const double m = gp.predict_mean(Vector(e.unit.row(i).transpose()));
    CHECK(std::abs(m - e.y[i]) <= 1e-6 * std::abs(e.y[i]));
  }
  // The fit is an emulator, not just an interpolator.
  const ComputerModel toy = toy_model();
  const PointSet test = sobol_points(3, 200);
  double sse = 0.0, sst = 0.0;
  const double ybar = e.y.mean();
  for (int i = 0; i < 200; ++i) {
    const Vector x = test.row(i).head(2).transpose();
    const Vector eta = Vector::Constant(1, 2.0 * test(i, 2));
    const double f = toy.evaluate(as_span(x), as_span(eta));
    sse += std::pow(gp.predict_mean(Vector(test.row(i).transpose())) - f, 2);
    sst += std::pow(f - ybar, 2);
  }
  CHECK(sse / sst <= 0.1);
}

TEST_CASE("fit is deterministic and needs enough runs") {
  const auto e = toy_experiment();
  const auto a = GaussianProcess::fit(e.unit, e.y);
  const auto b = GaussianProcess::fit(e.unit, e.y);
  CHECK(a.theta() == b.theta());
  CHECK(a.tau2() == b.tau2());
  const ComputerModel toy = toy_model();
  CHECK_THROWS_AS(GPSurrogate::fit(toy.x_bounds(), toy.eta_bounds(), e.physical.topRows(4), e.y.head(4)),
                  ValidationError);
}

TEST_CASE("realizations reproduce anchors and average to the posterior mean") {
  const auto e = toy_experiment();
  const ComputerModel toy = toy_model();
  const auto sur = GPSurrogate::fit(toy.x_bounds(), toy.eta_bounds(), e.physical, e.y);
  const Vector eta = Vector::Constant(1, 0.5);
  const auto path = sample_realization(sur, eta, 64, 5);
  for (int i = 0; i < 64; ++i) {
    CHECK(std::abs(path.evaluate(path.anchors().row(i).transpose()) - path.values()[i]) <= 1e-8);
  }
  CHECK(sample_realization(sur, eta, 64, 6).values() != path.values());
  CHECK(sample_realization(sur, eta, 64, 5).values() == path.values());

  // Monte Carlo consistency at a few off-anchor points on the slice.
  const PointSet probes = sobol_points(2, 5, 1000);
  for (int k = 0; k < 5; ++k) {
    const Vector u = sur.to_unit(probes.row(k).transpose(), eta);
    std::vector<double> draws;
    for (std::uint64_t s = 0; s < 200; ++s) draws.push_back(sample_realization(sur, eta, 64, 100 + s).evaluate(u));
    const Vector d = Eigen::Map<Vector>(draws.data(), 200);
    const double mean = d.mean();
    const double se = std::sqrt((d.array() - mean).square().sum() / 199.0 / 200.0);
    const auto [m, v] = sur.gp().posterior(u);
    CHECK(std::abs(mean - m) <= 3.0 * se + 1e-9);
  }
}

TEST_CASE("zero-variance realization equals the posterior mean") {
  // Training runs on the slice itself: anchors coincide with training points.
  const ComputerModel toy = toy_model();
  const PointSet xs = sobol_points(2, 16);
  PointSet unit(16, 3);
  unit.leftCols(2) = xs;
  unit.col(2).setConstant(0.25);
  Vector y(16);
  for (int i = 0; i < 16; ++i) {
    const Vector x = xs.row(i).transpose();
    y[i] = toy.evaluate(as_span(x), std::vector<double>{0.5});
  }
  const GPSurrogate sur(toy.x_bounds(), toy.eta_bounds(),
                        GaussianProcess(unit, y, Eigen::Vector3d(0.3, 0.3, 0.3), 1.0, y.mean()));
  REQUIRE(sur.gp().nugget() == 0.0);
  const auto path = sample_realization(sur, Vector::Constant(1, 0.5), 16, 9);
  for (int i = 0; i < 16; ++i) CHECK(std::abs(path.values()[i] - y[i]) <= 1e-6);
}

TEST_CASE("realization wraps as a computer model") {
  const auto e = toy_experiment();
  const ComputerModel toy = toy_model();
  const auto sur = GPSurrogate::fit(toy.x_bounds(), toy.eta_bounds(), e.physical, e.y);
  auto path = std::make_shared<const Realization>(sample_realization(sur, Vector::Constant(1, 0.5), 32, 2));
  const ComputerModel m = realization_model(sur, path);
  const Vector u = path->anchors().row(3).transpose();
  const Vector x = u.head(2);
  CHECK(m.evaluate(as_span(x), std::vector<double>{0.5}) == doctest::Approx(path->values()[3]).epsilon(1e-12));
  const ComputerModel mean = sur.mean_model();
  CHECK(mean.evaluate(as_span(x), std::vector<double>{0.5}) ==
        doctest::Approx(sur.posterior(x, Vector::Constant(1, 0.5)).first).epsilon(1e-12));
}

TEST_CASE("nearest training points use the x part only") {
  const ComputerModel toy = toy_model();
  PointSet unit(3, 3);
  unit << 0.1, 0.1, 0.9, 0.8, 0.8, 0.1, 0.5, 0.2, 0.5;
  const GPSurrogate sur(toy.x_bounds(), toy.eta_bounds(),
                        GaussianProcess(unit, Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(0.3, 0.3, 0.3), 1.0, 0.0));
  PointSet design(2, 2);
  design << 0.75, 0.9, 0.0, 0.0;
  CHECK(nearest_training_points(sur, design) == std::vector<int>{1, 0});
}

TEST_CASE("delimited tables") {
  const Table t = parse_table("x1, y\n0.5,1\n\n0.25, 2e-1\n", "mem");
  CHECK(t.data.rows() == 2);
  CHECK(t.column("y")[1] == 0.2);
  try {
    (void)t.column("x2");
    FAIL("expected a missing-column error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("'x2'") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_table("", "mem"), ValidationError);
  CHECK_THROWS_AS(parse_table("x1,y\n", "mem"), ValidationError);
  CHECK_THROWS_AS(parse_table("x1,y\n1\n", "mem"), ParseError);
  CHECK_THROWS_AS(parse_table("x1,y\n1,abc\n", "mem"), ParseError);
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0) == "1");
}
