#include "cli.hpp"

#include "caldoe/config.hpp"
#include "caldoe/csv.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <map>

namespace caldoe::cli {

namespace {

using ojson = nlohmann::ordered_json;

struct Options {
  std::string config;
  std::string out;
  std::string data;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  bool verbose = false;
};

class Log {
 public:
  Log(std::ostream& err, bool on) : err_(err), on_(on) {}
  void operator()(const std::string& line) const {
    if (on_) err_ << "caldoe: " << line << "\n";
  }

 private:
  std::ostream& err_;
  bool on_;
};

RunConfig load(const Options& o) {
  RunConfig c = load_config(o.config);
  if (o.seed) c.master_seed = *o.seed;
  if (o.jobs) c.jobs = *o.jobs;
  if (!o.out.empty()) c.output = o.out;
  apply_seeds(c);
  return c;
}

void write_json(const std::string& path, const ojson& j) { write_file(path, j.dump(2) + "\n"); }

ojson rows_of(const PointSet& m) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ojson row = ojson::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(row);
  }
  return a;
}

ojson list_of(const Vector& v) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

GPSurrogate fit_surrogate(const RunConfig& c) {
  if (!c.surrogate) throw ValidationError("config: surrogate: expected a surrogate block, got nothing");
  const auto [inputs, outputs] = read_computer_experiment(c.surrogate->training_data, c.model.p(), c.model.q());
  return GPSurrogate::fit(c.model.x_bounds, c.model.eta_bounds, inputs, outputs, c.surrogate->fit);
}

// The model that predictions and calibration run against: the configured
// body, or the surrogate mean when the model is known only through data.
ComputerModel working_model(const RunConfig& c) {
  if (c.model.has_body()) return c.build_model();
  return fit_surrogate(c).mean_model(c.model.name);
}

PipelineResult run_design(const RunConfig& c, const DesignRequest& req) {
  switch (c.regime) {
    case Regime::Local:
      return robust_design_local(c.build_model(), req);
    case Regime::Bayes:
      return robust_design_bayes(c.build_model(), req);
    case Regime::Surrogate:
      return robust_design_surrogate(fit_surrogate(c), req);
  }
  throw ValidationError("unknown regime");
}

void write_design(const std::string& path, const Design& d, const RunConfig& c) {
  const int p = c.model.p();
  std::vector<std::string> header{"run", "group", "role"};
  for (int j = 0; j < p; ++j) header.push_back("x" + std::to_string(j + 1));
  for (int j = 0; j < p; ++j) header.push_back("u" + std::to_string(j + 1));
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < d.size(); ++i) {
    std::vector<std::string> row{std::to_string(i + 1), std::to_string(d.groups[static_cast<std::size_t>(i)]),
                                 role_name(d.roles[static_cast<std::size_t>(i)])};
    for (int j = 0; j < p; ++j) row.push_back(format_number(c.model.x_bounds[j].from_unit(d.points(i, j))));
    for (int j = 0; j < p; ++j) row.push_back(format_number(d.points(i, j)));
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

int cmd_design(const Options& o, std::ostream& out, const Log& log) {
  const RunConfig c = load(o);
  log("design: " + regime_name(c.regime) + " regime, n = " + std::to_string(c.design.n));
  const PipelineResult result = run_design(c, c.design);
  std::filesystem::create_directories(c.output);
  write_design(c.output + "/design.csv", result.design, c);

  ojson meta;
  meta["command"] = "design";
  meta["model"] = c.model.name;
  meta["regime"] = regime_name(c.regime);
  meta["n"] = c.design.n;
  meta["r"] = c.design.r;
  meta["m"] = c.design.m;
  meta["master_seed"] = c.master_seed;
  ojson counts;
  for (Role role : {Role::DOpt, Role::ExtremumMax, Role::ExtremumMin, Role::SpaceFill}) {
    counts[role_name(role)] = result.design.count(role);
  }
  meta["role_counts"] = counts;
  meta["locations"] = result.design.unique_locations().rows();
  meta["eta_samples"] = rows_of(result.eta_samples);
  meta["log_objectives"] = result.log_objectives;
  meta["local_points_unit"] = rows_of(result.local_points);
  meta["maxima_unit"] = rows_of(result.maxima);
  meta["minima_unit"] = rows_of(result.minima);
  write_json(c.output + "/design_metadata.json", meta);

  out << "design: " << result.design.size() << " runs at " << result.design.unique_locations().rows()
      << " locations written to " << c.output << "/design.csv\n";
  for (const auto& [role, count] : counts.items()) out << "  " << role << ": " << count << "\n";
  return kSuccess;
}

int cmd_calibrate(const Options& o, std::ostream& out, const Log& log) {
  const RunConfig c = load(o);
  const std::string path = o.data.empty() ? c.calibration.data : o.data;
  if (path.empty()) {
    throw ValidationError("config: calibration.data: expected a physical data file (or --data), got nothing");
  }
  if (!std::filesystem::is_regular_file(path)) {
    throw ValidationError("calibrate: data file '" + path + "' not found");
  }
  const ComputerModel model = working_model(c);
  const CalibrationData data = read_physical_data(path, model.p());
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    for (int j = 0; j < model.p(); ++j) {
      if (!model.x_bounds()[j].contains(data.x(i, j), 1e-9 * model.x_bounds()[j].width())) {
        throw ValidationError(path + ": row " + std::to_string(i + 1) + ": x" + std::to_string(j + 1) +
                              " = " + format_number(data.x(i, j)) + " is outside x_bounds");
      }
    }
  }
  log("calibrate: " + std::to_string(data.x.rows()) + " observations, " + std::to_string(c.calibration.mcmc.iterations) +
      " iterations");
  const CalibrationFit fit =
      fit_discrepancy(run_mcmc(model, data, c.prior, c.calibration.mcmc), data, c.calibration.discrepancy);

  std::filesystem::create_directories(c.output);
  write_draws(c.output + "/draws.csv", fit.draws);

  std::vector<std::string> header;
  for (int j = 0; j < model.p(); ++j) header.push_back("x" + std::to_string(j + 1));
  header.insert(header.end(), {"y", "fitted", "residual", "calibrated"});
  std::vector<std::vector<std::string>> rows;
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    const Vector x = data.x.row(i).transpose();
    std::vector<std::string> row;
    for (int j = 0; j < model.p(); ++j) row.push_back(format_number(x[j]));
    row.push_back(format_number(data.y[i]));
    row.push_back(format_number(predict_mean_model(fit, x)));
    row.push_back(format_number(fit.residuals[i]));
    row.push_back(format_number(predict_calibrated(fit, x)));
    rows.push_back(std::move(row));
  }
  write_csv(c.output + "/residuals.csv", header, rows);

  ojson disc;
  if (fit.discrepancy) {
    const GaussianProcess& gp = *fit.discrepancy;
    disc["theta"] = list_of(gp.theta());
    disc["tau2"] = gp.tau2();
    disc["mean"] = gp.mean();
    disc["noise_variance"] = gp.noise_variance();
    disc["nugget"] = gp.nugget();
    disc["negative_log_likelihood"] = gp.negative_log_likelihood();
  }
  write_json(c.output + "/discrepancy.json", disc);

  const McmcDiagnostics& d = fit.diagnostics;
  std::vector<std::string> names;
  for (int j = 0; j < model.q(); ++j) names.push_back("eta" + std::to_string(j + 1));
  names.insert(names.end(), {"beta0", "beta1", "sigma2"});
  ojson diag;
  diag["draws"] = fit.draws.size();
  diag["acceptance_rate"] = d.acceptance_rate;
  ojson per, rhat, mean, sd;
  for (std::size_t k = 0; k < names.size(); ++k) {
    Vector col;
    if (static_cast<int>(k) < model.q()) {
      col = fit.draws.eta.col(static_cast<Eigen::Index>(k));
    } else {
      col = k == names.size() - 3 ? fit.draws.beta0 : k == names.size() - 2 ? fit.draws.beta1 : fit.draws.sigma2;
    }
    const double m = col.mean();
    mean[names[k]] = m;
    sd[names[k]] = col.size() > 1 ? std::sqrt((col.array() - m).square().sum() / (col.size() - 1.0)) : 0.0;
    rhat[names[k]] = d.split_rhat[static_cast<Eigen::Index>(k)];
  }
  for (int k = 0; k < model.q(); ++k) per[names[static_cast<std::size_t>(k)]] = d.coordinate_acceptance[k];
  per["beta0"] = d.coordinate_acceptance[model.q()];
  per["beta1"] = d.coordinate_acceptance[model.q() + 1];
  per["log_sigma"] = d.coordinate_acceptance[model.q() + 2];
  diag["coordinate_acceptance"] = per;
  diag["split_rhat"] = rhat;
  diag["posterior_mean"] = mean;
  diag["posterior_sd"] = sd;
  diag["step_sizes"] = list_of(d.step_sizes);
  write_json(c.output + "/diagnostics.json", diag);

  out << "calibrate: " << fit.draws.size() << " draws, acceptance rate " << format_number(d.acceptance_rate) << "\n";
  for (int j = 0; j < model.q(); ++j) {
    const std::string& n = names[static_cast<std::size_t>(j)];
    out << "  " << n << ": mean " << format_number(mean[n].get<double>()) << ", sd "
        << format_number(sd[n].get<double>()) << "\n";
  }
  return kSuccess;
}

int cmd_study(const Options& o, std::ostream& out, const Log& log) {
  const RunConfig c = load(o);
  if (!c.study) throw ValidationError("config: study: expected a study block, got nothing");
  const ComputerModel model = c.build_model();
  log("study: building the proposed design");
  std::vector<StudyDesign> designs{{"proposed", run_design(c, c.design).design}};
  std::optional<PipelineResult> searches;
  for (BaselineKind kind : c.study->baselines) {
    BaselineContext ctx;
    ctx.p = model.p();
    ctx.n = c.design.n;
    ctx.rho = c.design.rho;
    ctx.seed = stream_seed(c.master_seed, "baseline");
    if (kind == BaselineKind::PureComputerModel) {
      if (!searches) searches = run_design(c, search_only_request(c.design, model.q()));
      ctx.searches = &*searches;
    }
    designs.push_back({baseline_name(kind), baseline_design(kind, ctx)});
  }
  const StudyConfig& st = c.study->settings;
  log("study: " + std::to_string(designs.size()) + " designs, " + std::to_string(st.tau2_grid.size()) +
      " tau2 values, " + std::to_string(st.replications) + " replications");
  const ComparisonReport report = rmspe_study(designs, model, st);
  write_report(report, c.output);
  for (const auto& d : designs) write_design(c.output + "/design_" + d.name + ".csv", d.design, c);

  const int valid = report.valid_cells();
  const double fraction = static_cast<double>(valid) / report.cells();
  ojson summary;
  summary["command"] = "study";
  summary["master_seed"] = c.master_seed;
  summary["designs"] = report.designs;
  summary["tau2_grid"] = report.tau2_grid;
  summary["replications"] = report.replications;
  summary["cells"] = report.cells();
  summary["valid_cells"] = valid;
  write_json(c.output + "/study_summary.json", summary);

  out << "study: " << valid << " of " << report.cells() << " cells valid\n";
  out << "design,tau2,median_ratio\n";
  for (const auto& m : report.medians) {
    out << m.design << "," << format_number(m.tau2) << "," << (m.valid > 0 ? format_number(m.median_ratio) : "nan")
        << "\n";
  }
  return fraction >= 0.9 ? kSuccess : kNumerical;
}

int cmd_surrogate_fit(const Options& o, std::ostream& out, const Log& log) {
  const RunConfig c = load(o);
  if (!c.surrogate) throw ValidationError("config: surrogate: expected a surrogate block, got nothing");
  const auto [inputs, outputs] = read_computer_experiment(c.surrogate->training_data, c.model.p(), c.model.q());
  log("surrogate-fit: " + std::to_string(inputs.rows()) + " runs");
  const GPSurrogate s = GPSurrogate::fit(c.model.x_bounds, c.model.eta_bounds, inputs, outputs, c.surrogate->fit);
  std::filesystem::create_directories(c.output);

  const GaussianProcess& gp = s.gp();
  ojson j, theta;
  j["command"] = "surrogate-fit";
  j["runs"] = inputs.rows();
  for (int k = 0; k < s.p() + s.q(); ++k) {
    const std::string name = k < s.p() ? "x" + std::to_string(k + 1) : "eta" + std::to_string(k - s.p() + 1);
    theta[name] = gp.theta()[k];
  }
  j["theta"] = theta;
  j["tau2"] = gp.tau2();
  j["mean"] = gp.mean();
  j["nugget"] = gp.nugget();
  j["negative_log_likelihood"] = gp.negative_log_likelihood();
  write_json(c.output + "/surrogate.json", j);

  std::vector<std::string> header;
  for (int k = 0; k < s.p(); ++k) header.push_back("x" + std::to_string(k + 1));
  for (int k = 0; k < s.q(); ++k) header.push_back("eta" + std::to_string(k + 1));
  header.insert(header.end(), {"y", "mean", "sd"});
  std::vector<std::vector<std::string>> rows;
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    const Vector x = inputs.row(i).head(s.p()).transpose();
    const Vector eta = inputs.row(i).tail(s.q()).transpose();
    const auto [mean, var] = s.posterior(x, eta);
    std::vector<std::string> row;
    for (Eigen::Index k = 0; k < inputs.cols(); ++k) row.push_back(format_number(inputs(i, k)));
    row.push_back(format_number(outputs[i]));
    row.push_back(format_number(mean));
    row.push_back(format_number(std::sqrt(var)));
    rows.push_back(std::move(row));
  }
  write_csv(c.output + "/surrogate_fitted.csv", header, rows);
  out << "surrogate-fit: " << inputs.rows() << " runs, tau2 " << format_number(gp.tau2()) << "\n";
  return kSuccess;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust experimental designs for model calibration", "caldoe"};
  app.require_subcommand(1);
  Options o;
  std::map<std::string, int (*)(const Options&, std::ostream&, const Log&)> commands{
      {"design", cmd_design}, {"calibrate", cmd_calibrate}, {"study", cmd_study}, {"surrogate-fit", cmd_surrogate_fit}};
  const std::map<std::string, std::string> help{
      {"design", "Build a robust design and write it with a metadata report"},
      {"calibrate", "Calibrate the model to physical data and fit the discrepancy"},
      {"study", "Compare the proposed design with baselines by simulated RMSPE"},
      {"surrogate-fit", "Fit a GP surrogate to computer-experiment runs"}};
  for (const auto& [name, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", o.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "Output directory (overrides the config)");
    sub->add_option("--seed", o.seed, "Master seed (overrides the config)");
    sub->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--verbose", o.verbose, "Progress messages on stderr");
    if (name == "calibrate") sub->add_option("--data", o.data, "Physical data file (overrides the config)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "caldoe: " << e.what() << "\n";
    return kValidation;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  const Log log(err, o.verbose);
  try {
    return commands.at(name)(o, out, log);
  } catch (const Error& e) {
    err << "caldoe " << name << ": " << e.what() << "\n";
    return e.kind() == Error::Kind::Validation ? kValidation : kNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "caldoe " << name << ": " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    err << "caldoe " << name << ": " << e.what() << "\n";
    return kNumerical;
  }
}

}  // namespace caldoe::cli
