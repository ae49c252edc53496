// Acceptance checks: one PASS/FAIL line per criterion.

#include "caldoe/calibrate.hpp"
#include "caldoe/csv.hpp"
#include "caldoe/doptimal.hpp"
#include "caldoe/gp.hpp"
#include "caldoe/pipeline.hpp"
#include "caldoe/reduce.hpp"
#include "caldoe/rng.hpp"
#include "caldoe/sobol.hpp"
#include "caldoe/spacefill.hpp"
#include "cli.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

using namespace caldoe;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = CALDOE_SOURCE_DIR;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string yes(bool b) { return b ? "yes" : "no"; }

// Average ranks (ties share the mean rank).
Vector ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  Vector r(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[static_cast<Eigen::Index>(idx[k])] = 0.5 * (i + j) + 1.0;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const Vector ra = ranks(a), rb = ranks(b);
  const Vector da = ra.array() - ra.mean(), db = rb.array() - rb.mean();
  return da.dot(db) / std::sqrt(da.squaredNorm() * db.squaredNorm());
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "caldoe");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = read_file(e.path().string());
  return files;
}

Verdict toy_d_optimal() {
  const auto r = d_optimal_design(toy_model(), Vector::Constant(1, 0.5), 1, SearchConfig{});
  const Eigen::RowVector2d target(0.5, 1.0);
  const double dist = (r.design.points.row(0) - target).lpNorm<Eigen::Infinity>();
  return {dist <= 0.03, "point (" + fmt(r.design.points(0, 0)) + ", " + fmt(r.design.points(0, 1)) +
                            "), Linf distance " + fmt(dist, 3) + " <= 0.03"};
}

Verdict toy_extrema() {
  const auto e = find_extrema(toy_model(), Vector::Constant(1, 0.5), SearchConfig{});
  const double dmax = (e.x_max - Eigen::Vector2d(0.42, 0.28)).lpNorm<Eigen::Infinity>();
  const double dmin = (e.x_min - Eigen::Vector2d(1.0, 1.0)).lpNorm<Eigen::Infinity>();
  return {dmax <= 0.03 && dmin <= 0.03, "x_max (" + fmt(e.x_max[0]) + ", " + fmt(e.x_max[1]) + ") off by " +
                                            fmt(dmax, 3) + ", x_min (" + fmt(e.x_min[0]) + ", " + fmt(e.x_min[1]) +
                                            ") off by " + fmt(dmin, 3)};
}

Verdict linear_factorial() {
  const auto r = d_optimal_design(linear_model(), (Vector(4) << 1, -2, 0.5, 3).finished(), 4, SearchConfig{});
  PointSet corners(4, 2);
  corners << 0, 0, 1, 0, 0, 1, 1, 1;
  std::vector<bool> used(4, false);
  double worst = 0.0;
  int matched = 0;
  for (int i = 0; i < r.design.size(); ++i) {
    int best = -1;
    double best_d = kInf;
    for (int c = 0; c < 4; ++c) {
      const double d = (r.design.points.row(i) - corners.row(c)).lpNorm<Eigen::Infinity>();
      if (!used[c] && d < best_d) best = c, best_d = d;
    }
    if (best >= 0 && best_d <= 0.02) {
      used[best] = true;
      ++matched;
    }
    worst = std::max(worst, best_d);
  }
  return {r.design.size() == 4 && matched == 4,
          std::to_string(matched) + " of 4 distinct corners matched, worst distance " + fmt(worst, 3)};
}

Verdict composition() {
  DesignRequest req;
  req.n = 8;
  req.r = 2;
  req.eta0 = Vector::Constant(1, 0.5);
  const Design d = robust_design_local(toy_model(), req).design;
  const int dopt = d.count(Role::DOpt), ext = d.count(Role::ExtremumMax) + d.count(Role::ExtremumMin),
            sf = d.count(Role::SpaceFill);
  return {dopt == 2 && ext == 2 && sf == 4 && d.size() == 8,
          "DOPT " + std::to_string(dopt) + ", EXTREMUM " + std::to_string(ext) + ", SPACEFILL " + std::to_string(sf) +
              ", total " + std::to_string(d.size())};
}

Verdict study_ordering(double& seconds) {
  const fs::path out = fs::temp_directory_path() / "caldoe_acceptance_study";
  fs::remove_all(out);
  const auto t0 = std::chrono::steady_clock::now();
  const int code = run_cli({"study", "--config", (kSource / "configs" / "toy.json").string(), "--out", out.string()});
  seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (code != 0) return {false, "study exited with code " + std::to_string(code)};
  std::map<std::string, std::map<double, double>> med;
  std::istringstream in(read_file((out / "medians.csv").string()));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string design, tau2, ratio;
    std::getline(row, design, ',');
    std::getline(row, tau2, ',');
    std::getline(row, ratio, ',');
    med[design][std::stod(tau2)] = std::stod(ratio);
  }
  const auto summary = nlohmann::json::parse(read_file((out / "study_summary.json").string()));
  const int reps = summary["replications"].get<int>();
  const double pure = med["pure_computer_model"][0.5], ff = med["full_factorial_2k_r2"][0.5];
  const bool ordering = pure > ff && ff > 1.0;
  bool at_zero = true;
  for (const auto& [design, by_tau] : med) at_zero = at_zero && by_tau.at(0.0) >= 0.6 && by_tau.at(0.0) <= 1.4;
  std::vector<double> tau, ratio;
  for (const auto& [t, r] : med["pure_computer_model"]) tau.push_back(t), ratio.push_back(r);
  const double rho = spearman(tau, ratio);
  std::string curve;
  for (double r : ratio) curve += (curve.empty() ? "" : " ") + fmt(r, 3);
  fs::remove_all(out);
  return {ordering && at_zero && rho > 0.8 && seconds < 1800.0,
          std::to_string(reps) + " reps; tau2=0.5 pure " + fmt(pure, 3) + " > full factorial " + fmt(ff, 3) +
              " > 1: " + yes(ordering) + "; tau2=0 medians in [0.6, 1.4]: " + yes(at_zero) + "; Spearman " +
              fmt(rho, 3) + " > 0.8: " + yes(rho > 0.8) + "; pure curve [" + curve + "]"};
}

Verdict coverage() {
  DesignRequest req;
  req.n = 8;
  req.r = 2;
  req.eta0 = Vector::Constant(1, 0.5);
  const ComputerModel model = toy_model();
  const PointSet unit = robust_design_local(model, req).design.points;
  const PriorSpec prior{{ParameterPrior::normal(0.5, 0.2)}};
  int covered = 0;
  for (int s = 0; s < 50; ++s) {
    Rng rng(derive_seed(2025, static_cast<std::uint64_t>(s)));
    CalibrationData data{PointSet(unit.rows(), 2), Vector(unit.rows())};
    for (Eigen::Index i = 0; i < unit.rows(); ++i) {
      const Vector u = unit.row(i).transpose();
      data.x.row(i) = model.from_unit(as_span(u)).transpose();
      data.y[i] = model.evaluate(as_span(Vector(data.x.row(i).transpose())), std::vector<double>{0.5}) +
                  0.05 * rng.normal();
    }
    McmcConfig mc;
    mc.seed = derive_seed(77, static_cast<std::uint64_t>(s));
    const CalibrationFit fit = run_mcmc(model, data, prior, mc);
    const Vector eta = fit.draws.eta.col(0);
    const double mean = eta.mean();
    const double sd = std::sqrt((eta.array() - mean).square().sum() / (eta.size() - 1.0));
    if (std::abs(mean - 0.5) <= 3.0 * sd) ++covered;
  }
  return {covered >= 45, std::to_string(covered) + " of 50 seeds cover the truth within 3 sd (need >= 45)"};
}

Verdict gp_correctness() {
  // Interpolation of the noise-free toy model on a 30-run MaxPro design in (x1, x2, eta).
  AugmentPlan plan;
  plan.existing = Design(3);
  plan.n_add = 30;
  plan.seed = 11;
  plan.candidates = 256;
  plan.multistarts = 4;
  const PointSet u = augment(3, plan).points;
  const ComputerModel toy = toy_model();
  Vector y(30);
  for (int i = 0; i < 30; ++i) {
    const Vector x = u.row(i).head(2).transpose();
    y[i] = toy.evaluate(as_span(x), std::vector<double>{toy.eta_bounds()[0].from_unit(u(i, 2))});
  }
  const GaussianProcess fit = GaussianProcess::fit(u, y);
  double rel = 0.0;
  for (int i = 0; i < 30; ++i) {
    rel = std::max(rel, std::abs(fit.predict_mean(Vector(u.row(i).transpose())) - y[i]) / std::abs(y[i]));
  }
  // Two-point 1-D kriging against its closed form.
  const double theta = 0.7, tau2 = 1.3, mu = 0.2;
  PointSet s(2, 1);
  s << 0.0, 1.0;
  const GaussianProcess gp(s, Eigen::Vector2d(0.0, 1.0), Vector::Constant(1, theta), tau2, mu);
  const double r = std::exp(-0.5 / (theta * theta)), h = std::exp(-0.125 / (theta * theta));
  const double mean = mu + h / (1.0 + r) * ((0.0 - mu) + (1.0 - mu));
  const double var = tau2 * (1.0 - 2.0 * h * h / (1.0 + r));
  const auto [m, v] = gp.posterior(Vector::Constant(1, 0.5));
  const double err = std::max(std::abs(m - mean), std::abs(v - var));
  return {rel <= 1e-6 && err <= 1e-10,
          "30-run toy interpolation error " + fmt(rel, 3) + " (nugget " + fmt(fit.nugget(), 2) + ")" + " <= 1e-6; closed-form error " + fmt(err, 3) + " <= 1e-10"};
}

Verdict support_quality() {
  Rng rng(12);
  PointSet c(500, 2);
  for (int i = 0; i < 500; ++i) {
    const double centre = (i % 2 == 0) ? 0.0 : 3.0;
    c.row(i) << rng.normal(centre, 0.3), rng.normal(centre, 0.3);
  }
  const int k = 12;
  const double sp = energy_distance(support_points(c, k, 31), c);
  Rng pick(77);
  double best = kInf;
  std::vector<Eigen::Index> idx(500);
  for (int t = 0; t < 100; ++t) {
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    PointSet subset(k, 2);
    for (int i = 0; i < k; ++i) {
      const auto j = i + static_cast<Eigen::Index>(pick.below(static_cast<std::uint64_t>(500 - i)));
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
      subset.row(i) = c.row(idx[static_cast<std::size_t>(i)]);
    }
    best = std::min(best, energy_distance(subset, c));
  }
  const PointSet reps = prior_representatives(PriorSpec{{ParameterPrior::normal(0.5, 0.2)}}, 20, 2024);
  const double mean = reps.col(0).mean();
  const double sd = std::sqrt((reps.col(0).array() - mean).square().sum() / 19.0);
  const bool moments = std::abs(mean - 0.5) <= 0.02 && std::abs(sd - 0.2) <= 0.03;
  return {sp <= best && moments, "energy " + fmt(sp, 5) + " <= best random subset " + fmt(best, 5) +
                                     "; representatives mean " + fmt(mean) + ", sd " + fmt(sd)};
}

Verdict determinism() {
  const std::string toy = (kSource / "configs" / "toy.json").string();
  const std::string sur = (kSource / "configs" / "toy_surrogate.json").string();
  const std::string quick = (kSource / "tests" / "fixtures" / "cli" / "toy_quick.json").string();
  const std::vector<std::pair<std::string, std::string>> runs{
      {"design", toy}, {"calibrate", toy}, {"study", quick}, {"surrogate-fit", sur}};
  std::string detail;
  bool all = true;
  for (const auto& [command, config] : runs) {
    std::map<std::string, std::string> outputs[2];
    bool ok = true;
    for (int k = 0; k < 2; ++k) {
      const fs::path out = fs::temp_directory_path() / ("caldoe_acceptance_" + command + std::to_string(k));
      fs::remove_all(out);
      ok = ok && run_cli({command, "--config", config, "--out", out.string(), "--seed", "42"}) == 0;
      if (ok) outputs[k] = snapshot(out);
      fs::remove_all(out);
    }
    const bool same = ok && !outputs[0].empty() && outputs[0] == outputs[1];
    all = all && same;
    detail += (detail.empty() ? "" : ", ") + command + " " + (same ? "identical" : "DIFFERENT");
  }
  return {all, detail};
}

Verdict sobol_fixture() {
  const PointSet p = sobol_points(2, 3);
  PointSet ref(3, 2);
  ref << 0.5, 0.5, 0.75, 0.25, 0.25, 0.75;
  return {p == ref, "first points (" + fmt(p(0, 0)) + ", " + fmt(p(0, 1)) + "), (" + fmt(p(1, 0)) + ", " +
                        fmt(p(1, 1)) + "), (" + fmt(p(2, 0)) + ", " + fmt(p(2, 1)) + ")"};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, double limit, const std::function<Verdict(double&)>& check) {
    double inner = -1.0;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = check(inner);
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double seconds =
        inner >= 0.0 ? inner : std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = limit <= 0.0 || seconds < limit;
    const bool pass = v.pass && in_time;
    if (!pass) ++failures;
    std::cout << "criterion " << id << ": " << (pass ? "PASS" : "FAIL") << " (" << v.detail << "; " << fmt(seconds, 3)
              << " s" << (limit > 0.0 ? " < " + fmt(limit) + " s" : "") << ")" << std::endl;
  };
  auto plain = [](Verdict (*f)()) { return [f](double&) { return f(); }; };
  report(1, 10, plain(toy_d_optimal));
  report(2, 10, plain(toy_extrema));
  report(3, 30, plain(linear_factorial));
  report(4, 0, plain(composition));
  report(5, 1800, study_ordering);
  report(6, 900, plain(coverage));
  report(7, 0, plain(gp_correctness));
  report(8, 0, plain(support_quality));
  report(9, 0, plain(determinism));
  report(10, 0, plain(sobol_fixture));
  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail") << std::endl;
  return failures == 0 ? 0 : 1;
}
