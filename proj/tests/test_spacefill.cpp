#include <doctest.h>

#include "caldoe/rng.hpp"
#include "caldoe/spacefill.hpp"

#include <algorithm>
#include <cmath>

using namespace caldoe;

namespace {

PointSet rows(std::initializer_list<std::initializer_list<double>> init) {
  PointSet out(static_cast<Eigen::Index>(init.size()), static_cast<Eigen::Index>(init.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : init) {
    Eigen::Index j = 0;
    for (double v : r) out(i, j++) = v;
    ++i;
  }
  return out;
}

Design replicated_factorial() {
  Design d(2);
  const double corners[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  for (int rep = 0; rep < 2; ++rep) {
    for (int c = 0; c < 4; ++c) d.append(Eigen::Vector2d(corners[c][0], corners[c][1]), Role::DOpt, c);
  }
  return d;
}

PointSet with_row(const PointSet& base, const Vector& extra) {
  PointSet out(base.rows() + 1, base.cols());
  out.topRows(base.rows()) = base;
  out.row(base.rows()) = extra.transpose();
  return out;
}

}  // namespace

TEST_CASE("maxpro criterion hand values") {
  CHECK(maxpro_criterion(rows({{0, 0}, {1, 1}})) == doctest::Approx(1.0));
  CHECK(maxpro_criterion(rows({{0, 0}, {0.5, 1}})) == doctest::Approx(2.0));
  CHECK(maxpro_criterion(rows({{0, 0.3}, {0, 0.7}})) == kInf);
  CHECK_THROWS_AS(maxpro_criterion(rows({{0.5, 0.5}})), ValidationError);
}

TEST_CASE("maxpro criterion is invariant to point and dimension permutations") {
  Rng rng(21);
  for (int t = 0; t < 20; ++t) {
    PointSet pts(7, 3);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) pts.row(i) << rng.uniform(), rng.uniform(), rng.uniform();
    const double base = maxpro_criterion(pts);
    PointSet permuted = pts;
    permuted.row(0).swap(permuted.row(5));
    permuted.row(2).swap(permuted.row(6));
    CHECK(maxpro_criterion(permuted) == doctest::Approx(base).epsilon(1e-12));
    PointSet swapped = pts;
    swapped.col(0).swap(swapped.col(2));
    CHECK(maxpro_criterion(swapped) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("maximin criterion") {
  CHECK(maximin_criterion(rows({{0, 0}, {1, 1}, {0, 0.5}})) == doctest::Approx(0.5));
}

TEST_CASE("augment with n_add = 0 returns the existing design") {
  AugmentPlan plan;
  plan.existing = replicated_factorial();
  plan.n_add = 0;
  const Design d = augment(2, plan);
  CHECK(d.points == plan.existing.points);
  CHECK(d.roles == plan.existing.roles);
  CHECK(d.groups == plan.existing.groups);
}

TEST_CASE("single added point next to the origin matches the grid oracle") {
  AugmentPlan plan;
  plan.existing = Design(2);
  plan.existing.append(Eigen::Vector2d(0, 0), Role::DOpt, 0);
  plan.n_add = 1;
  const Design d = augment(2, plan);
  REQUIRE(d.size() == 2);
  const Vector added = d.points.row(1).transpose();
  CHECK(added[0] >= 0.5);
  CHECK(added[1] >= 0.5);
  CHECK(d.roles[1] == Role::SpaceFill);

  // Oracle: exhaustive 101 x 101 grid (origin row/column excluded: collisions).
  double oracle = kInf;
  for (int i = 1; i <= 100; ++i) {
    for (int j = 1; j <= 100; ++j) {
      oracle = std::min(oracle, maxpro_criterion(rows({{0, 0}, {i / 100.0, j / 100.0}})));
    }
  }
  CHECK(maxpro_criterion(d.points) <= oracle + 1e-9);
}

TEST_CASE("13-run augmentation of the replicated factorial") {
  AugmentPlan plan;
  plan.existing = replicated_factorial();
  plan.n_add = 5;
  plan.seed = 2024;
  const Design d = augment(2, plan);
  REQUIRE(d.size() == 13);
  CHECK(d.count(Role::SpaceFill) == 5);
  for (int i = 8; i < 13; ++i) {
    for (int l = 0; l < 2; ++l) {
      CHECK(d.points(i, l) > 0.0);
      CHECK(d.points(i, l) < 1.0);
    }
    for (int k = 0; k < 13; ++k) {
      if (k == i) continue;
      CHECK(d.points(i, 0) != d.points(k, 0));
      CHECK(d.points(i, 1) != d.points(k, 1));
    }
  }
  std::vector<int> groups(d.groups.begin() + 8, d.groups.end());
  std::sort(groups.begin(), groups.end());
  CHECK(std::adjacent_find(groups.begin(), groups.end()) == groups.end());
}

TEST_CASE("each greedy step beats 1000 random candidates") {
  Rng rng(77);
  PointSet existing(6, 2);
  for (Eigen::Index i = 0; i < existing.rows(); ++i) existing.row(i) << rng.uniform(), rng.uniform();
  AugmentPlan plan;
  plan.existing = Design(2);
  for (Eigen::Index i = 0; i < existing.rows(); ++i) {
    plan.existing.append(existing.row(i).transpose(), Role::SpaceFill, static_cast<int>(i));
  }
  plan.n_add = 1;
  plan.seed = 5;
  const Design d = augment(2, plan);
  const double chosen = maxpro_criterion(d.points);
  for (int t = 0; t < 1000; ++t) {
    const Vector z = Eigen::Vector2d(rng.uniform(), rng.uniform());
    CHECK(chosen <= maxpro_criterion(with_row(existing, z)) + 1e-12);
  }
}

TEST_CASE("discrete levels are respected exactly") {
  AugmentPlan plan;
  plan.existing = replicated_factorial();
  plan.n_add = 3;
  plan.levels = {{0.0, 0.25, 0.5, 0.75, 1.0}, {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}};
  const Design d = augment(2, plan);
  REQUIRE(d.size() == 11);
  for (int i = 8; i < 11; ++i) {
    for (int l = 0; l < 2; ++l) {
      const auto& lv = plan.levels[l];
      CHECK(std::find(lv.begin(), lv.end(), d.points(i, l)) != lv.end());
    }
  }
  CHECK(maxpro_criterion(distinct_rows(d.points.bottomRows(3))) < kInf);
}

TEST_CASE("mixed discrete and continuous dimensions") {
  AugmentPlan plan;
  plan.existing = replicated_factorial();
  plan.n_add = 2;
  plan.levels = {{0.0, 1.0 / 3, 2.0 / 3, 1.0}, {}};
  const Design d = augment(2, plan);
  for (int i = 8; i < 10; ++i) {
    const double v = d.points(i, 0);
    CHECK((v == 1.0 / 3 || v == 2.0 / 3));
    CHECK(d.points(i, 1) > 0.0);
    CHECK(d.points(i, 1) < 1.0);
  }
}

TEST_CASE("infeasible levels name the dimension") {
  AugmentPlan plan;
  plan.existing = replicated_factorial();
  plan.n_add = 1;
  plan.levels = {{0.0, 0.5, 1.0}, {0.0, 1.0}};
  try {
    augment(2, plan);
    FAIL("expected an infeasible-levels error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("dimension 2") != std::string::npos);
  }
  plan.levels = {{0.0, 0.5, 0.4}, {0.1, 0.9}};
  CHECK_THROWS_AS(augment(2, plan), ValidationError);
}

TEST_CASE("maximin augmentation spreads points away from the corners") {
  AugmentPlan plan;
  plan.existing = replicated_factorial();
  plan.n_add = 1;
  plan.criterion = SpaceFillCriterion::Maximin;
  const Design d = augment(2, plan);
  CHECK(d.points(8, 0) == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(d.points(8, 1) == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("augmentation is deterministic given the seed") {
  AugmentPlan plan;
  plan.existing = replicated_factorial();
  plan.n_add = 4;
  plan.seed = 9;
  CHECK(augment(2, plan).points == augment(2, plan).points);
}
