#include "caldoe/simulate.hpp"

#include "caldoe/csv.hpp"
#include "caldoe/parallel.hpp"
#include "caldoe/rng.hpp"
#include "caldoe/sobol.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

namespace caldoe {

DiscrepancyField::DiscrepancyField(int dims) : dims_(dims), anchors_(0, dims) {}

DiscrepancyField::DiscrepancyField(double tau2, double lengthscale, PointSet anchors, Vector values, Vector weights)
    : dims_(static_cast<int>(anchors.cols())),
      tau2_(tau2),
      lengthscale_(lengthscale),
      anchors_(std::move(anchors)),
      values_(std::move(values)),
      weights_(std::move(weights)) {}

double DiscrepancyField::evaluate(const Vector& u) const {
  if (u.size() != dims_) {
    throw ValidationError("discrepancy field has " + std::to_string(dims_) + " dimensions, point has " +
                          std::to_string(u.size()));
  }
  if (anchors_.rows() == 0) return 0.0;
  const double scale = -0.5 / (lengthscale_ * lengthscale_);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < anchors_.rows(); ++i) {
    sum += std::exp(scale * (anchors_.row(i).transpose() - u).squaredNorm()) * weights_[i];
  }
  return sum;
}

DiscrepancyField sample_discrepancy(double tau2, double lengthscale, int dims, std::uint64_t seed, int anchors) {
  if (!(tau2 >= 0.0)) throw ValidationError("discrepancy variance tau2 must be >= 0");
  if (!(lengthscale > 0.0)) throw ValidationError("discrepancy lengthscale must be positive");
  if (dims < 1) throw ValidationError("discrepancy field needs at least one dimension");
  if (tau2 == 0.0) return DiscrepancyField(dims);
  const int count = anchors > 0 ? anchors : std::max(256, 100 * dims);
  const PointSet a = sobol_points(dims, count);
  const double scale = -0.5 / (lengthscale * lengthscale);
  Matrix r(count, count);
  for (int i = 0; i < count; ++i) {
    r(i, i) = 1.0;
    for (int j = 0; j < i; ++j) r(i, j) = r(j, i) = std::exp(scale * (a.row(i) - a.row(j)).squaredNorm());
  }
  Rng rng(seed);
  Vector z(count);
  for (int i = 0; i < count; ++i) z[i] = rng.normal();
  for (double jitter = 1e-10; jitter <= 1e-4 * (1.0 + 1e-12); jitter *= 10.0) {
    Matrix rj = r;
    rj.diagonal().array() += jitter;
    const Eigen::LLT<Matrix> llt(rj);
    if (llt.info() != Eigen::Success) continue;
    const double sd = std::sqrt(tau2);
    // values = sd L z and weights = (R + jI)^-1 values = sd L^-T z.
    Vector values = llt.matrixL() * z;
    values *= sd;
    Vector weights = sd * llt.matrixU().solve(z);
    return DiscrepancyField(tau2, lengthscale, a, std::move(values), std::move(weights));
  }
  throw NumericalError("discrepancy field: anchor correlation matrix does not factor even with jitter 1e-4");
}

double simulate_physical(const ComputerModel& model, const Vector& eta_true, const DiscrepancyField& field,
                         double noise_sd, const Vector& x, std::uint64_t noise_seed) {
  if (!(noise_sd >= 0.0)) throw ValidationError("noise sd must be >= 0");
  double y = model.evaluate(as_span(x), as_span(eta_true));
  y += field.evaluate(model.to_unit(as_span(x)));
  if (noise_sd > 0.0) {
    Rng rng(noise_seed);
    y += noise_sd * rng.normal();
  }
  return y;
}

PointSet sobol_test_set(int dims, int count, std::uint64_t seed_offset) {
  if (count < 1) throw ValidationError("test set size must be >= 1");
  return sobol_points(dims, count, seed_offset);
}

std::string baseline_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::FullFactorial:
      return "full_factorial_2k_r2";
    case BaselineKind::FractionalFactorial:
      return "fractional_2_5_minus_2_r2";
    case BaselineKind::PureComputerModel:
      return "pure_computer_model";
  }
  return "unknown";
}

BaselineKind parse_baseline(const std::string& name) {
  for (BaselineKind k :
       {BaselineKind::FullFactorial, BaselineKind::FractionalFactorial, BaselineKind::PureComputerModel}) {
    if (baseline_name(k) == name) return k;
  }
  throw ValidationError("unknown baseline '" + name +
                        "' (expected full_factorial_2k_r2, fractional_2_5_minus_2_r2 or pure_computer_model)");
}

Design full_factorial_design(int p, int replicates) {
  if (p < 1 || p > 20) throw ValidationError("full factorial needs 1 <= p <= 20");
  if (replicates < 1) throw ValidationError("replicates must be >= 1");
  Design d(p);
  for (int corner = 0; corner < (1 << p); ++corner) {
    Vector x(p);
    for (int j = 0; j < p; ++j) x[j] = (corner >> j) & 1;
    for (int rep = 0; rep < replicates; ++rep) d.append(x, Role::DOpt, corner);
  }
  return d;
}

Design fractional_factorial_design(int replicates) {
  if (replicates < 1) throw ValidationError("replicates must be >= 1");
  Design d(5);
  for (int run = 0; run < 8; ++run) {
    const double a = (run & 1) ? 1.0 : -1.0;
    const double b = (run & 2) ? 1.0 : -1.0;
    const double c = (run & 4) ? 1.0 : -1.0;
    const Eigen::Matrix<double, 5, 1> coded(a, b, c, a * b, a * c);
    const Vector x = (coded.array() + 1.0) / 2.0;
    for (int rep = 0; rep < replicates; ++rep) d.append(x, Role::DOpt, run);
  }
  return d;
}

DesignRequest search_only_request(DesignRequest req, int q) {
  req.r = 1;
  req.n = q;
  req.include_location_scale = false;
  return req;
}

Design pure_computer_model_design(const PipelineResult& searches, int n, double rho, std::uint64_t seed) {
  if (n < 1) throw ValidationError("pure computer model design: n must be >= 1");
  const PointSet& local = searches.local_points;
  if (local.rows() < 1) throw ValidationError("pure computer model design: no local D-optimal points");
  const int p = static_cast<int>(local.cols());
  Design d(p);
  if (searches.eta_samples.rows() == 1) {
    const int q = static_cast<int>(local.rows());
    for (int k = 0; k < q; ++k) {
      const int copies = n / q + (k < n % q ? 1 : 0);
      for (int c = 0; c < copies; ++c) d.append(local.row(k).transpose(), Role::DOpt, k);
    }
    return merge_replicates(d, 0.0);
  }
  // Pool the local points, repeating them when n exceeds their count.
  const Eigen::Index reps = (n + local.rows() - 1) / local.rows();
  PointSet pool(local.rows() * reps, p);
  for (Eigen::Index r = 0; r < reps; ++r) pool.middleRows(r * local.rows(), local.rows()) = local;
  SupportPointsOptions sp;
  sp.clamp_unit = true;
  const PointSet reduced = support_points(pool, n, seed, sp);
  for (Eigen::Index i = 0; i < reduced.rows(); ++i) {
    int group = d.next_group();
    for (Eigen::Index j = 0; j < i; ++j) {
      if (reduced.row(j) == reduced.row(i)) {
        group = d.groups[static_cast<std::size_t>(j)];
        break;
      }
    }
    d.append(reduced.row(i).transpose(), Role::DOpt, group);
  }
  return merge_replicates(d, rho);
}

Design baseline_design(BaselineKind kind, const BaselineContext& context) {
  switch (kind) {
    case BaselineKind::FullFactorial: {
      if (context.p < 1 || context.p > 20) throw ValidationError("full factorial needs 1 <= p <= 20");
      const int runs = 2 * (1 << context.p);
      if (context.n != runs) {
        throw ValidationError("budget mismatch: full_factorial_2k_r2 with p = " + std::to_string(context.p) +
                              " has " + std::to_string(runs) + " runs, budget n = " + std::to_string(context.n));
      }
      return full_factorial_design(context.p, 2);
    }
    case BaselineKind::FractionalFactorial:
      if (context.p != 5) {
        throw ValidationError("fractional_2_5_minus_2_r2 needs p = 5, got p = " + std::to_string(context.p));
      }
      if (context.n != 16) {
        throw ValidationError("budget mismatch: fractional_2_5_minus_2_r2 has 16 runs, budget n = " +
                              std::to_string(context.n));
      }
      return fractional_factorial_design(2);
    case BaselineKind::PureComputerModel:
      if (context.searches == nullptr) {
        throw ValidationError("pure_computer_model baseline needs the local D-optimal searches");
      }
      return pure_computer_model_design(*context.searches, context.n, context.rho, context.seed);
  }
  throw ValidationError("unknown baseline kind");
}

int ComparisonReport::valid_cells() const {
  std::map<std::pair<double, int>, bool> ok;
  for (const auto& r : records) {
    auto [it, fresh] = ok.try_emplace({r.tau2, r.replication}, true);
    it->second = it->second && r.valid;
  }
  return static_cast<int>(std::count_if(ok.begin(), ok.end(), [](const auto& kv) { return kv.second; }));
}

const MedianRow& ComparisonReport::median(const std::string& design, double tau2) const {
  for (const auto& m : medians) {
    if (m.design == design && m.tau2 == tau2) return m;
  }
  throw ValidationError("no median row for design '" + design + "' at tau2 = " + format_number(tau2));
}

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

struct CellOutcome {
  std::vector<double> rmspe;
  std::vector<std::string> errors;
  std::vector<Vector> abs_errors;
};

}  // namespace

ComparisonReport rmspe_study(const std::vector<StudyDesign>& designs, const ComputerModel& model,
                             const StudyConfig& config) {
  if (designs.empty()) throw ValidationError("study needs at least one design");
  const int p = model.p();
  const int n = designs.front().design.size();
  for (const auto& d : designs) {
    if (d.design.dims() != p) {
      throw ValidationError("design '" + d.name + "' has " + std::to_string(d.design.dims()) +
                            " columns, model has p = " + std::to_string(p));
    }
    if (d.design.size() != n) {
      throw ValidationError("designs must share the budget: '" + d.name + "' has " + std::to_string(d.design.size()) +
                            " runs, '" + designs.front().name + "' has " + std::to_string(n));
    }
  }
  if (config.tau2_grid.empty()) throw ValidationError("study.tau2_grid must not be empty");
  for (double t : config.tau2_grid) {
    if (!(t >= 0.0)) throw ValidationError("study.tau2_grid values must be >= 0");
  }
  if (config.replications < 1) throw ValidationError("study.replications must be >= 1");
  if (config.eta_true.size() != model.q()) {
    throw ValidationError("study.eta_true has " + std::to_string(config.eta_true.size()) + " entries, model has q = " +
                          std::to_string(model.q()));
  }
  for (int j = 0; j < model.q(); ++j) {
    if (!model.eta_bounds()[j].contains(config.eta_true[j])) {
      throw ValidationError("study.eta_true[" + std::to_string(j + 1) + "] is outside eta_bounds");
    }
  }
  config.prior.validate(model.q());

  const PointSet test_unit = sobol_test_set(p, config.test_points, config.test_offset);
  PointSet test_x(test_unit.rows(), p);
  for (Eigen::Index i = 0; i < test_unit.rows(); ++i) {
    const Vector u = test_unit.row(i).transpose();
    test_x.row(i) = model.from_unit(as_span(u)).transpose();
  }
  std::vector<PointSet> design_x;
  for (const auto& d : designs) {
    PointSet x(n, p);
    for (int i = 0; i < n; ++i) {
      const Vector u = d.design.points.row(i).transpose();
      x.row(i) = model.from_unit(as_span(u)).transpose();
    }
    design_x.push_back(std::move(x));
  }

  const int grid = static_cast<int>(config.tau2_grid.size());
  const int cells = grid * config.replications;
  std::vector<CellOutcome> outcomes(static_cast<std::size_t>(cells));
  parallel_for(cells, config.jobs, [&](int cell) {
    const double tau2 = config.tau2_grid[static_cast<std::size_t>(cell / config.replications)];
    const std::uint64_t cell_seed = derive_seed(config.seed, static_cast<std::uint64_t>(cell));
    const DiscrepancyField field =
        sample_discrepancy(tau2, config.lengthscale, p, derive_seed(cell_seed, "field"), config.field_anchors);
    const std::uint64_t run_noise = derive_seed(cell_seed, "run-noise");
    const std::uint64_t test_noise = derive_seed(cell_seed, "test-noise");
    Vector y_test(test_x.rows());
    for (Eigen::Index i = 0; i < test_x.rows(); ++i) {
      y_test[i] = simulate_physical(model, config.eta_true, field, config.noise_sd, test_x.row(i).transpose(),
                                    derive_seed(test_noise, static_cast<std::uint64_t>(i)));
    }
    CellOutcome& out = outcomes[static_cast<std::size_t>(cell)];
    for (std::size_t k = 0; k < designs.size(); ++k) {
      try {
        CalibrationData data{design_x[k], Vector(n)};
        for (int i = 0; i < n; ++i) {
          data.y[i] = simulate_physical(model, config.eta_true, field, config.noise_sd, data.x.row(i).transpose(),
                                        derive_seed(run_noise, static_cast<std::uint64_t>(i)));
        }
        McmcConfig mcmc = config.mcmc;
        mcmc.seed = derive_seed(cell_seed, "mcmc");
        const CalibrationFit fit = fit_discrepancy(run_mcmc(model, data, config.prior, mcmc), data, config.discrepancy);
        Vector err(test_x.rows());
        for (Eigen::Index i = 0; i < test_x.rows(); ++i) {
          err[i] = std::abs(predict_calibrated(fit, test_x.row(i).transpose()) - y_test[i]);
        }
        const double rmspe = std::sqrt(err.squaredNorm() / static_cast<double>(err.size()));
        if (!std::isfinite(rmspe)) throw NumericalError("non-finite prediction error");
        out.rmspe.push_back(rmspe);
        out.errors.emplace_back();
        out.abs_errors.push_back(config.keep_errors ? err : Vector());
      } catch (const Error& e) {
        out.rmspe.push_back(std::nan(""));
        out.errors.emplace_back(e.what());
        out.abs_errors.emplace_back();
      }
    }
  });

  ComparisonReport report;
  for (const auto& d : designs) report.designs.push_back(d.name);
  report.tau2_grid = config.tau2_grid;
  report.replications = config.replications;
  for (int cell = 0; cell < cells; ++cell) {
    const CellOutcome& out = outcomes[static_cast<std::size_t>(cell)];
    const double reference = out.rmspe.front();
    for (std::size_t k = 0; k < designs.size(); ++k) {
      CellRecord r;
      r.design = designs[k].name;
      r.tau2 = config.tau2_grid[static_cast<std::size_t>(cell / config.replications)];
      r.replication = cell % config.replications;
      r.rmspe = out.rmspe[k];
      r.error = out.errors[k];
      r.valid = r.error.empty() && out.errors.front().empty();
      if (r.error.empty() && !out.errors.front().empty()) r.error = "reference design failed: " + out.errors.front();
      r.ratio = r.valid ? out.rmspe[k] / reference : std::nan("");
      r.abs_errors = out.abs_errors[k];
      report.records.push_back(std::move(r));
    }
  }
  for (const auto& d : designs) {
    for (double tau2 : config.tau2_grid) {
      std::vector<double> ratios, rmspes;
      for (const auto& r : report.records) {
        if (r.design == d.name && r.tau2 == tau2 && r.valid) {
          ratios.push_back(r.ratio);
          rmspes.push_back(r.rmspe);
        }
      }
      report.medians.push_back({d.name, tau2, median_of(ratios), median_of(rmspes), static_cast<int>(ratios.size())});
    }
  }
  return report;
}

void write_report(const ComparisonReport& report, const std::string& directory) {
  std::filesystem::create_directories(directory);
  auto clean = [](std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
  };
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : report.records) {
    rows.push_back({r.design, format_number(r.tau2), std::to_string(r.replication),
                    r.valid ? format_number(r.rmspe) : "nan", r.valid ? format_number(r.ratio) : "nan",
                    r.valid ? "1" : "0", clean(r.error)});
  }
  write_csv(directory + "/records.csv", {"design", "tau2", "replication", "rmspe", "ratio", "valid", "error"}, rows);

  rows.clear();
  for (const auto& m : report.medians) {
    rows.push_back({m.design, format_number(m.tau2), m.valid > 0 ? format_number(m.median_ratio) : "nan",
                    m.valid > 0 ? format_number(m.median_rmspe) : "nan", std::to_string(m.valid)});
  }
  write_csv(directory + "/medians.csv", {"design", "tau2", "median_ratio", "median_rmspe", "valid_replications"}, rows);

  const bool kept = std::any_of(report.records.begin(), report.records.end(),
                                [](const CellRecord& r) { return r.abs_errors.size() > 0; });
  if (!kept) return;
  rows.clear();
  for (const auto& r : report.records) {
    for (Eigen::Index i = 0; i < r.abs_errors.size(); ++i) {
      rows.push_back({r.design, format_number(r.tau2), std::to_string(r.replication), std::to_string(i),
                      format_number(r.abs_errors[i])});
    }
  }
  write_csv(directory + "/errors.csv", {"design", "tau2", "replication", "point", "abs_error"}, rows);
}

}  // namespace caldoe
