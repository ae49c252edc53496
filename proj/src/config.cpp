#include "caldoe/config.hpp"

#include "caldoe/csv.hpp"
#include "caldoe/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <set>

namespace caldoe {

namespace {

using json = nlohmann::json;

std::string describe(const json& v) {
  std::string s = v.dump();
  if (s.size() > 60) s = s.substr(0, 57) + "...";
  return s;
}

[[noreturn]] void fail(const std::string& field, const std::string& expected, const std::string& got) {
  throw ValidationError("config: " + field + ": expected " + expected + ", got " + got);
}

// One JSON object. Every key the parser asks for is remembered so that
// finish() can reject the rest as unknown.
class Block {
 public:
  Block(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "(top level)" : path_, "an object", describe(j_));
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    known_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  const json& require(const std::string& key, const std::string& expected) {
    const json* v = find(key);
    if (v == nullptr) fail(field(key), expected, "nothing (missing)");
    return *v;
  }

  double number(const std::string& key, std::optional<double> fallback, const std::string& expected = "a number") {
    const json* v = find(key);
    if (v == nullptr) {
      if (!fallback) fail(field(key), expected, "nothing (missing)");
      return *fallback;
    }
    return as_number(*v, field(key), expected);
  }

  double positive(const std::string& key, std::optional<double> fallback) {
    const double v = number(key, fallback, "a number > 0");
    if (!(v > 0.0)) fail(field(key), "a number > 0", format_number(v));
    return v;
  }

  double nonnegative(const std::string& key, std::optional<double> fallback) {
    const double v = number(key, fallback, "a number >= 0");
    if (!(v >= 0.0)) fail(field(key), "a number >= 0", format_number(v));
    return v;
  }

  int integer(const std::string& key, std::optional<int> fallback, int minimum) {
    const std::string expected = "an integer >= " + std::to_string(minimum);
    const json* v = find(key);
    if (v == nullptr) {
      if (!fallback) fail(field(key), expected, "nothing (missing)");
      return *fallback;
    }
    if (!v->is_number_integer() || v->get<long long>() < minimum || v->get<long long>() > 1'000'000'000) {
      fail(field(key), expected, describe(*v));
    }
    return static_cast<int>(v->get<long long>());
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
    const json* v = find(key);
    if (v == nullptr) return fallback;
    if (!v->is_number_unsigned()) fail(field(key), "an unsigned 64-bit integer", describe(*v));
    return v->get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (v == nullptr) return fallback;
    if (!v->is_boolean()) fail(field(key), "true or false", describe(*v));
    return v->get<bool>();
  }

  std::string text(const std::string& key, std::optional<std::string> fallback) {
    const json* v = find(key);
    if (v == nullptr) {
      if (!fallback) fail(field(key), "a string", "nothing (missing)");
      return *fallback;
    }
    if (!v->is_string() || v->get<std::string>().empty()) fail(field(key), "a non-empty string", describe(*v));
    return v->get<std::string>();
  }

  std::optional<Block> child(const std::string& key) {
    const json* v = find(key);
    if (v == nullptr) return std::nullopt;
    return Block(*v, field(key));
  }

  void finish() const {
    std::string allowed;
    for (const auto& k : known_) allowed += (allowed.empty() ? "" : ", ") + k;
    for (const auto& item : j_.items()) {
      if (!known_.count(item.key())) fail(field(item.key()), "one of {" + allowed + "}", "unknown key");
    }
  }

  static double as_number(const json& v, const std::string& field, const std::string& expected) {
    if (!v.is_number()) fail(field, expected, describe(v));
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(field, expected, describe(v));
    return d;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> known_;
};

std::vector<double> numbers(const json& v, const std::string& field) {
  if (!v.is_array()) fail(field, "an array of numbers", describe(v));
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(Block::as_number(v[i], field + "[" + std::to_string(i) + "]", "a number"));
  }
  return out;
}

Vector vector_of(const json& v, const std::string& field) {
  const std::vector<double> xs = numbers(v, field);
  return Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

std::vector<Interval> bounds(const json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) fail(field, "a non-empty array of [lower, upper] pairs", describe(v));
  std::vector<Interval> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string f = field + "[" + std::to_string(i) + "]";
    const std::vector<double> pair = numbers(v[i], f);
    if (pair.size() != 2 || !(pair[0] < pair[1])) fail(f, "[lower, upper] with lower < upper", describe(v[i]));
    out.push_back({pair[0], pair[1]});
  }
  return out;
}

std::string resolve(const std::filesystem::path& base, const std::string& path, const std::string& field) {
  std::filesystem::path p(path);
  if (p.is_relative()) p = base / p;
  if (!std::filesystem::is_regular_file(p)) fail(field, "an existing file", "'" + p.string() + "' (not found)");
  return p.lexically_normal().string();
}

ModelConfig parse_model(Block b) {
  ModelConfig m;
  m.name = b.text("name", "model");
  m.builtin = b.text("builtin", "");
  m.expression = b.text("expression", "");
  if (!m.builtin.empty() && !m.expression.empty()) {
    fail(b.field("builtin"), "either builtin or expression, not both", "both");
  }
  if (!m.builtin.empty()) {
    if (b.find("x_bounds") || b.find("eta_bounds")) {
      fail(b.field("builtin"), "no explicit bounds for a built-in model", "x_bounds or eta_bounds");
    }
    try {
      const ComputerModel model = builtin_model(m.builtin);
      m.x_bounds = model.x_bounds();
      m.eta_bounds = model.eta_bounds();
    } catch (const ValidationError&) {
      fail(b.field("builtin"), "one of {toy, linear}", "'" + m.builtin + "'");
    }
    if (m.name == "model") m.name = m.builtin;
  } else {
    m.x_bounds = bounds(b.require("x_bounds", "a non-empty array of [lower, upper] pairs"), b.field("x_bounds"));
    m.eta_bounds = bounds(b.require("eta_bounds", "a non-empty array of [lower, upper] pairs"), b.field("eta_bounds"));
  }
  if (const json* c = b.find("constants")) {
    // Constant names are free-form, so there is no key check here.
    const std::string f = b.field("constants");
    if (!c->is_object()) fail(f, "an object of named numbers", describe(*c));
    for (const auto& item : c->items()) {
      m.constants[item.key()] = Block::as_number(item.value(), f + "." + item.key(), "a number");
    }
  }
  b.finish();
  if (!m.expression.empty()) {
    try {
      ComputerModel::parse(m.name, m.expression, {m.x_bounds, m.eta_bounds, m.constants});
    } catch (const ValidationError& e) {
      fail(b.field("expression"), "a valid expression", std::string("'") + e.what() + "'");
    }
  }
  return m;
}

PriorSpec parse_prior(const json& v, int q) {
  if (!v.is_array()) fail("prior", "an array with one entry per calibration parameter", describe(v));
  if (static_cast<int>(v.size()) != q) {
    fail("prior", std::to_string(q) + " entries (one per calibration parameter)", std::to_string(v.size()));
  }
  PriorSpec spec;
  for (std::size_t i = 0; i < v.size(); ++i) {
    Block b(v[i], "prior[" + std::to_string(i) + "]");
    const std::string dist = b.text("dist", std::nullopt);
    ParameterPrior p;
    if (dist == "normal") {
      p = ParameterPrior::normal(b.number("mean", std::nullopt), b.positive("sd", std::nullopt));
    } else if (dist == "uniform") {
      const double lo = b.number("lower", std::nullopt);
      const double hi = b.number("upper", std::nullopt);
      if (!(lo < hi)) fail(b.field("upper"), "a number > lower", format_number(hi));
      p = ParameterPrior::uniform(lo, hi);
    } else {
      fail(b.field("dist"), "normal or uniform", "'" + dist + "'");
    }
    b.finish();
    spec.params.push_back(p);
  }
  return spec;
}

SearchConfig parse_search(Block b) {
  SearchConfig s;
  s.multistarts = b.integer("multistarts", s.multistarts, 1);
  s.grid_levels = b.integer("grid_levels", s.grid_levels, 2);
  s.polish_iterations = b.integer("polish_iterations", s.polish_iterations, 0);
  b.finish();
  return s;
}

void parse_design(Block b, RunConfig& c) {
  const std::string regime = b.text("regime", "local");
  if (regime == "local") {
    c.regime = Regime::Local;
  } else if (regime == "bayes") {
    c.regime = Regime::Bayes;
  } else if (regime == "surrogate") {
    c.regime = Regime::Surrogate;
  } else {
    fail(b.field("regime"), "one of {local, bayes, surrogate}", "'" + regime + "'");
  }
  DesignRequest& d = c.design;
  d.n = b.integer("n", std::nullopt, 1);
  d.r = b.integer("r", d.r, 0);
  d.m = b.integer("m", d.m, 1);
  d.include_location_scale = b.boolean("include_location_scale", d.include_location_scale);
  d.rho = b.nonnegative("rho", d.rho);
  d.anchor_density = b.integer("anchor_density", d.anchor_density, 1);
  if (const json* v = b.find("eta0")) d.eta0 = vector_of(*v, b.field("eta0"));
  if (const json* v = b.find("levels")) {
    if (!v->is_array()) fail(b.field("levels"), "an array of per-dimension level lists", describe(*v));
    for (std::size_t i = 0; i < v->size(); ++i) {
      d.levels.push_back(numbers((*v)[i], b.field("levels") + "[" + std::to_string(i) + "]"));
    }
  }
  const std::string criterion = b.text("criterion", "maxpro");
  try {
    d.criterion = parse_criterion(criterion);
  } catch (const ValidationError&) {
    fail(b.field("criterion"), "maxpro or maximin", "'" + criterion + "'");
  }
  if (auto s = b.child("search")) d.search = parse_search(*s);
  b.finish();
}

NoiseSource parse_noise_source(const std::string& s, const std::string& field) {
  if (s == "posterior") return NoiseSource::Posterior;
  if (s == "replicates") return NoiseSource::Replicates;
  if (s == "likelihood") return NoiseSource::Likelihood;
  fail(field, "one of {posterior, replicates, likelihood}", "'" + s + "'");
}

void parse_calibration(Block b, const std::filesystem::path& base, RunConfig& c) {
  CalibrationConfig& cal = c.calibration;
  if (b.find("data")) cal.data = resolve(base, b.text("data", std::nullopt), b.field("data"));
  if (auto m = b.child("mcmc")) {
    McmcConfig& mc = cal.mcmc;
    mc.iterations = m->integer("iterations", mc.iterations, 1);
    mc.burn_in = m->integer("burn_in", mc.burn_in, 0);
    mc.thin = m->integer("thin", mc.thin, 1);
    mc.target_acceptance = m->number("target_acceptance", mc.target_acceptance, "a number in (0, 1)");
    if (!(mc.target_acceptance > 0.0 && mc.target_acceptance < 1.0)) {
      fail(m->field("target_acceptance"), "a number in (0, 1)", format_number(mc.target_acceptance));
    }
    mc.beta_sd = m->positive("beta_sd", mc.beta_sd);
    mc.sigma_scale = m->positive("sigma_scale", mc.sigma_scale);
    mc.fix_beta = m->boolean("fix_beta", mc.fix_beta);
    mc.antithetic_beta = m->boolean("antithetic_beta", mc.antithetic_beta);
    mc.max_init_tries = m->integer("max_init_tries", mc.max_init_tries, 1);
    if (mc.burn_in >= mc.iterations) {
      fail(m->field("burn_in"), "fewer than iterations (" + std::to_string(mc.iterations) + ")",
           std::to_string(mc.burn_in));
    }
    m->finish();
  }
  if (auto d = b.child("discrepancy")) {
    DiscrepancyOptions& o = cal.discrepancy;
    o.source = parse_noise_source(d->text("noise_source", "replicates"), d->field("noise_source"));
    if (d->find("noise_variance")) o.noise_variance = d->nonnegative("noise_variance", std::nullopt);
    o.noise_floor = d->positive("noise_floor", o.noise_floor);
    if (const json* v = d->find("theta")) {
      o.theta = vector_of(*v, d->field("theta"));
      if (o.theta->size() != c.model.p() || !(o.theta->array() > 0.0).all()) {
        fail(d->field("theta"), std::to_string(c.model.p()) + " positive lengthscales", describe(*v));
      }
    }
    if (d->find("tau2")) o.tau2 = d->positive("tau2", std::nullopt);
    if (o.theta.has_value() != o.tau2.has_value()) {
      fail(d->field(o.theta ? "tau2" : "theta"), "theta and tau2 given together", "only one of them");
    }
    o.fit.multistarts = d->integer("multistarts", o.fit.multistarts, 1);
    d->finish();
  }
  b.finish();
}

void parse_study(Block b, RunConfig& c) {
  StudyBlock s;
  StudyConfig& st = s.settings;
  if (const json* v = b.find("tau2_grid")) {
    st.tau2_grid = numbers(*v, b.field("tau2_grid"));
    if (st.tau2_grid.empty()) fail(b.field("tau2_grid"), "a non-empty array of numbers >= 0", "[]");
    for (double t : st.tau2_grid) {
      if (!(t >= 0.0)) fail(b.field("tau2_grid"), "a non-empty array of numbers >= 0", describe(*v));
    }
  }
  st.replications = b.integer("replications", st.replications, 1);
  if (const json* v = b.find("baselines")) {
    if (!v->is_array()) fail(b.field("baselines"), "an array of baseline names", describe(*v));
    for (std::size_t i = 0; i < v->size(); ++i) {
      const std::string f = b.field("baselines") + "[" + std::to_string(i) + "]";
      if (!(*v)[i].is_string()) fail(f, "a baseline name", describe((*v)[i]));
      try {
        s.baselines.push_back(parse_baseline((*v)[i].get<std::string>()));
      } catch (const ValidationError&) {
        fail(f, "one of {full_factorial_2k_r2, fractional_2_5_minus_2_r2, pure_computer_model}", describe((*v)[i]));
      }
    }
  } else {
    s.baselines = {BaselineKind::FullFactorial, BaselineKind::PureComputerModel};
  }
  if (const json* v = b.find("eta_true")) st.eta_true = vector_of(*v, b.field("eta_true"));
  st.noise_sd = b.nonnegative("noise_sd", st.noise_sd);
  st.lengthscale = b.positive("lengthscale", st.lengthscale);
  st.field_anchors = b.integer("field_anchors", st.field_anchors, 0);
  st.test_points = b.integer("test_points", st.test_points, 1);
  st.keep_errors = b.boolean("keep_errors", st.keep_errors);
  b.finish();
  c.study = std::move(s);
}

void check_eta(const Vector& eta, const ModelConfig& m, const std::string& field) {
  if (eta.size() != m.q()) {
    fail(field, std::to_string(m.q()) + " values (one per calibration parameter)", std::to_string(eta.size()));
  }
  for (int j = 0; j < m.q(); ++j) {
    if (!m.eta_bounds[static_cast<std::size_t>(j)].contains(eta[j])) {
      fail(field + "[" + std::to_string(j) + "]", "a value inside eta_bounds", format_number(eta[j]));
    }
  }
}

// Checks that span blocks.
void cross_validate(RunConfig& c, bool has_prior) {
  const ModelConfig& m = c.model;
  DesignRequest& d = c.design;
  if (d.eta0.size() > 0) check_eta(d.eta0, m, "design.eta0");
  switch (c.regime) {
    case Regime::Local:
      if (d.eta0.size() == 0) {
        if (!has_prior) fail("design.eta0", "a point estimate (or a prior block) for the local regime", "nothing");
        d.eta0 = m.eta_bounds.empty() ? Vector() : c.prior.mean();
        for (int j = 0; j < m.q(); ++j) d.eta0[j] = std::clamp(d.eta0[j], m.eta_bounds[j].lo, m.eta_bounds[j].hi);
      }
      break;
    case Regime::Bayes:
      if (!has_prior) fail("prior", "a prior block for the bayes regime", "nothing");
      break;
    case Regime::Surrogate:
      if (!has_prior) fail("prior", "a prior block for the surrogate regime", "nothing");
      if (!c.surrogate) fail("surrogate", "a surrogate block for the surrogate regime", "nothing");
      break;
  }
  if (!has_prior) {
    // Without a prior block the calibration prior is uniform over eta_bounds.
    for (const Interval& iv : m.eta_bounds) c.prior.params.push_back(ParameterPrior::uniform(iv.lo, iv.hi));
  }
  if (c.regime != Regime::Surrogate && !m.has_body()) {
    fail("model", "a builtin or expression for the " + regime_name(c.regime) + " regime", "bounds only");
  }
  if (!d.levels.empty() && static_cast<int>(d.levels.size()) != m.p()) {
    fail("design.levels", std::to_string(m.p()) + " level lists (one per input)", std::to_string(d.levels.size()));
  }
  const int dopt = c.regime == Regime::Local ? m.q() * d.r : 0;
  const int needed = dopt + (d.include_location_scale ? 2 : 0);
  if (d.n < needed) {
    fail("design.n", "a budget of at least q*r + 2 = " + std::to_string(needed) + " (budget infeasible)",
         std::to_string(d.n));
  }
  if (c.study) {
    StudyConfig& st = c.study->settings;
    if (st.eta_true.size() == 0) {
      if (d.eta0.size() == 0) fail("study.eta_true", "the true calibration parameters", "nothing");
      st.eta_true = d.eta0;
    }
    check_eta(st.eta_true, m, "study.eta_true");
    if (!m.has_body()) fail("model", "a builtin or expression to simulate the study truth", "bounds only");
    for (BaselineKind k : c.study->baselines) {
      const int runs = k == BaselineKind::FullFactorial         ? 2 * (1 << std::min(m.p(), 20))
                       : k == BaselineKind::FractionalFactorial ? 16
                                                                : d.n;
      if (k == BaselineKind::FractionalFactorial && m.p() != 5) {
        fail("study.baselines", "fractional_2_5_minus_2_r2 only for p = 5", "p = " + std::to_string(m.p()));
      }
      if (runs != d.n) {
        fail("study.baselines", baseline_name(k) + " to match design.n = " + std::to_string(d.n) + " (budget mismatch)",
             std::to_string(runs) + " runs");
      }
    }
  }
  if (c.calibration.discrepancy.theta && c.calibration.discrepancy.theta->size() != m.p()) {
    fail("calibration.discrepancy.theta", std::to_string(m.p()) + " lengthscales",
         std::to_string(c.calibration.discrepancy.theta->size()));
  }
}

}  // namespace

std::string regime_name(Regime regime) {
  switch (regime) {
    case Regime::Local:
      return "local";
    case Regime::Bayes:
      return "bayes";
    case Regime::Surrogate:
      return "surrogate";
  }
  return "unknown";
}

ComputerModel RunConfig::build_model() const {
  if (!model.builtin.empty()) return builtin_model(model.builtin);
  if (model.expression.empty()) throw ValidationError("config: model: no builtin or expression to evaluate");
  return ComputerModel::parse(model.name, model.expression, {model.x_bounds, model.eta_bounds, model.constants});
}

std::uint64_t stream_seed(std::uint64_t master, std::string_view stream) { return derive_seed(master, stream); }

void apply_seeds(RunConfig& c) {
  c.design.seed = stream_seed(c.master_seed, "design");
  c.design.jobs = c.jobs;
  c.design.prior = c.prior;
  c.calibration.mcmc.seed = stream_seed(c.master_seed, "calibrate");
  c.calibration.discrepancy.fit.seed = stream_seed(c.master_seed, "discrepancy");
  if (c.surrogate) c.surrogate->fit.seed = stream_seed(c.master_seed, "surrogate");
  if (c.study) {
    c.study->settings.seed = stream_seed(c.master_seed, "study");
    c.study->settings.jobs = c.jobs;
    c.study->settings.mcmc = c.calibration.mcmc;
    c.study->settings.discrepancy = c.calibration.discrepancy;
    c.study->settings.prior = c.prior;
  }
}

RunConfig parse_config(std::string_view text, const std::filesystem::path& base, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("config: " + source + ": expected valid JSON, got a syntax error (" + e.what() + ")");
  }
  Block top(root, "");
  RunConfig c;
  Block model(top.require("model", "a model block"), "model");
  c.model = parse_model(model);
  bool has_prior = false;
  if (const json* p = top.find("prior")) {
    c.prior = parse_prior(*p, c.model.q());
    has_prior = true;
  }
  parse_design(Block(top.require("design", "a design block"), "design"), c);
  if (const json* s = top.find("surrogate")) {
    Block b(*s, "surrogate");
    SurrogateConfig sc;
    sc.training_data = resolve(base, b.text("training_data", std::nullopt), b.field("training_data"));
    sc.fit.multistarts = b.integer("multistarts", sc.fit.multistarts, 1);
    b.finish();
    c.surrogate = sc;
  }
  if (const json* cal = top.find("calibration")) parse_calibration(Block(*cal, "calibration"), base, c);
  if (const json* st = top.find("study")) parse_study(Block(*st, "study"), c);
  if (const json* s = top.find("seeds")) {
    Block b(*s, "seeds");
    c.master_seed = b.seed("master", c.master_seed);
    b.finish();
  }
  if (const json* out_field = top.find("output")) {
    const json& o = *out_field;
    if (!o.is_string() || o.get<std::string>().empty()) fail("output", "a directory path", describe(o));
    std::filesystem::path out(o.get<std::string>());
    c.output = (out.is_relative() ? base / out : out).lexically_normal().string();
  } else {
    c.output = (base / "out").lexically_normal().string();
  }
  c.jobs = top.integer("jobs", 1, 1);
  top.finish();
  cross_validate(c, has_prior);
  apply_seeds(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error&) {
    throw ValidationError("config: " + path + ": expected a readable file, got nothing (not found)");
  }
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  return parse_config(text, base.empty() ? std::filesystem::path(".") : base, path);
}

}  // namespace caldoe
