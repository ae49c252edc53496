#include <doctest.h>

#include "caldoe/config.hpp"
#include "caldoe/csv.hpp"
#include "cli.hpp"

#include <json.hpp>

#include <filesystem>
#include <sstream>

using namespace caldoe;
namespace fs = std::filesystem;

namespace {

const fs::path kCli = fs::path(CALDOE_FIXTURES) / "cli";

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "caldoe");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Outcome o;
  o.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("caldoe_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string fixture(const std::string& name) { return (kCli / name).string(); }

// All files of a directory by name, with contents.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = read_file(e.path().string());
  return files;
}

}  // namespace

TEST_CASE("config corpus: every invalid fixture is rejected with its field") {
  const fs::path dir = fs::path(CALDOE_FIXTURES) / "config_invalid";
  const auto expected = nlohmann::json::parse(read_file((dir / "expected.json").string()));
  int seen = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name == "expected.json") continue;
    ++seen;
    CAPTURE(name);
    REQUIRE(expected.contains(name));
    const std::string needle = expected[name].get<std::string>();
    try {
      load_config(e.path().string());
      FAIL_CHECK("accepted");
    } catch (const ValidationError& err) {
      CAPTURE(err.what());
      CHECK(std::string(err.what()).find(needle) != std::string::npos);
    }
  }
  CHECK(seen == static_cast<int>(expected.size()));
  CHECK(seen >= 40);
}

TEST_CASE("config defaults, path resolution and seed streams") {
  const RunConfig c = load_config(fixture("toy_quick.json"));
  CHECK(c.model.builtin == "toy");
  CHECK(c.regime == Regime::Local);
  CHECK(c.design.n == 8);
  CHECK(c.design.prior.dims() == 1);
  CHECK(c.calibration.data == (kCli / "toy_physical.csv").lexically_normal().string());
  CHECK(c.output == (kCli / "out").lexically_normal().string());
  REQUIRE(c.study);
  CHECK(c.study->settings.eta_true[0] == 0.5);
  CHECK(c.study->settings.mcmc.iterations == 4000);
  CHECK(c.calibration.discrepancy.source == NoiseSource::Replicates);
  CHECK(c.design.seed == stream_seed(5, "design"));
  CHECK(c.study->settings.seed == stream_seed(5, "study"));
  CHECK(c.calibration.mcmc.seed == stream_seed(5, "calibrate"));
  CHECK(stream_seed(5, "design") != stream_seed(5, "study"));

  // No prior block: uniform over eta_bounds.
  const RunConfig bare = parse_config(R"({"model": {"builtin": "toy"}, "design": {"n": 8, "eta0": [0.5]}})", ".");
  REQUIRE(bare.prior.dims() == 1);
  CHECK(bare.prior.params[0].kind == ParameterPrior::Kind::Uniform);
  CHECK(bare.prior.params[0].b == 2.0);
  CHECK(bare.master_seed == 1);

  // An expression model with constants.
  const RunConfig e = parse_config(
      R"({"model": {"expression": "a * x1 + eta1", "x_bounds": [[0, 2]], "eta_bounds": [[-1, 1]],
                    "constants": {"a": 3}},
          "design": {"n": 4, "r": 1, "eta0": [0]}})",
      ".");
  const ComputerModel model = e.build_model();
  CHECK(model.evaluate(std::vector<double>{2.0}, std::vector<double>{0.5}) == 6.5);
}

TEST_CASE("cli design: toy composition and byte-identical reruns") {
  const fs::path a = scratch("design_a"), b = scratch("design_b");
  const Outcome first = invoke({"design", "--config", fixture("toy_quick.json"), "--out", a.string()});
  INFO(first.err);
  REQUIRE(first.code == cli::kSuccess);
  const Table t = [&] {
    // Drop the group and role columns to read the numeric part.
    std::string text = read_file((a / "design.csv").string()), numeric;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
      const auto c1 = line.find(','), c3 = line.find(',', line.find(',', c1 + 1) + 1);
      numeric += line.substr(0, c1 + 1) + line.substr(c3 + 1) + "\n";
    }
    return parse_table(numeric, "design.csv");
  }();
  CHECK(t.data.rows() == 8);
  CHECK(t.header == std::vector<std::string>{"run", "x1", "x2", "u1", "u2"});
  const std::string text = read_file((a / "design.csv").string());
  auto count = [&](const std::string& role) {
    std::size_t n = 0;
    for (std::size_t pos = text.find("," + role + ","); pos != std::string::npos;
         pos = text.find("," + role + ",", pos + 1)) {
      ++n;
    }
    return n;
  };
  CHECK(count("DOPT") == 2);
  CHECK(count("EXTREMUM_MAX") + count("EXTREMUM_MIN") == 2);
  CHECK(count("SPACEFILL") == 4);
  const auto meta = nlohmann::json::parse(read_file((a / "design_metadata.json").string()));
  CHECK(meta["role_counts"]["DOPT"] == 2);
  CHECK(meta["master_seed"] == 5);

  REQUIRE(invoke({"design", "--config", fixture("toy_quick.json"), "--out", b.string()}).code == cli::kSuccess);
  CHECK(snapshot(a) == snapshot(b));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("cli exit codes for invalid input") {
  const Outcome infeasible = invoke({"design", "--config", fixture("infeasible.json"), "--out", scratch("inf").string()});
  CHECK(infeasible.code == cli::kValidation);
  CHECK(infeasible.err.find("budget infeasible") != std::string::npos);

  CHECK(invoke({"design"}).code == cli::kValidation);
  CHECK(invoke({"design", "--config", fixture("no_such.json")}).code == cli::kValidation);
  CHECK(invoke({"design", "--config", fixture("toy_quick.json"), "--jobs", "0"}).code == cli::kValidation);
  CHECK(invoke({"design", "--config", fixture("toy_quick.json"), "--frobnicate"}).code == cli::kValidation);
  CHECK(invoke({"optimize", "--config", fixture("toy_quick.json")}).code == cli::kValidation);
  CHECK(invoke({"--help"}).code == cli::kSuccess);

  const fs::path out = scratch("bad_data");
  const Outcome empty = invoke({"calibrate", "--config", fixture("toy_quick.json"), "--out", out.string(), "--data",
                                fixture("empty.csv")});
  CHECK(empty.code == cli::kValidation);
  CHECK(empty.err.find("file is empty") != std::string::npos);
  const Outcome no_y = invoke({"calibrate", "--config", fixture("toy_quick.json"), "--out", out.string(), "--data",
                               fixture("missing_y.csv")});
  CHECK(no_y.code == cli::kValidation);
  CHECK(no_y.err.find("'y'") != std::string::npos);
  const Outcome no_x2 = invoke({"calibrate", "--config", fixture("toy_quick.json"), "--out", out.string(), "--data",
                                fixture("missing_x2.csv")});
  CHECK(no_x2.code == cli::kValidation);
  CHECK(no_x2.err.find("'x2'") != std::string::npos);
  CHECK(invoke({"study", "--config", fixture("infeasible.json")}).code == cli::kValidation);
  fs::remove_all(out);
}

TEST_CASE("cli calibrate: artifacts, tuned sampler, determinism") {
  const fs::path a = scratch("cal_a"), b = scratch("cal_b");
  const Outcome run = invoke({"calibrate", "--config", fixture("toy_quick.json"), "--out", a.string()});
  INFO(run.err);
  REQUIRE(run.code == cli::kSuccess);
  for (const char* f : {"draws.csv", "residuals.csv", "discrepancy.json", "diagnostics.json"}) {
    CHECK(fs::exists(a / f));
  }
  const auto diag = nlohmann::json::parse(read_file((a / "diagnostics.json").string()));
  const double acc = diag["acceptance_rate"].get<double>();
  CHECK(acc >= 0.15);
  CHECK(acc <= 0.6);
  CHECK(diag["draws"] == 500);
  CHECK(std::abs(diag["posterior_mean"]["eta1"].get<double>() - 0.5) < 3.0 * diag["posterior_sd"]["eta1"].get<double>());
  const Table draws = read_table((a / "draws.csv").string());
  CHECK(draws.header == std::vector<std::string>{"eta1", "beta0", "beta1", "sigma2"});
  CHECK(draws.data.rows() == 500);
  const Table res = read_table((a / "residuals.csv").string());
  CHECK(res.data.rows() == 16);
  CHECK((res.column("y") - res.column("fitted") - res.column("residual")).cwiseAbs().maxCoeff() < 1e-12);

  REQUIRE(invoke({"calibrate", "--config", fixture("toy_quick.json"), "--out", b.string()}).code == cli::kSuccess);
  CHECK(snapshot(a) == snapshot(b));
  const fs::path c = scratch("cal_c");
  REQUIRE(invoke({"calibrate", "--config", fixture("toy_quick.json"), "--out", c.string(), "--seed", "6"}).code ==
          cli::kSuccess);
  CHECK(read_file((c / "draws.csv").string()) != read_file((a / "draws.csv").string()));
  for (const auto& p : {a, b, c}) fs::remove_all(p);
}

TEST_CASE("cli study: one median row per design and tau2, determinism across jobs") {
  const fs::path a = scratch("study_a"), b = scratch("study_b");
  const Outcome run = invoke({"study", "--config", fixture("toy_quick.json"), "--out", a.string()});
  INFO(run.err);
  REQUIRE(run.code == cli::kSuccess);
  const std::string medians = read_file((a / "medians.csv").string());
  CHECK(std::count(medians.begin(), medians.end(), '\n') == 1 + 3 * 2);
  CHECK(medians.find("proposed,0,1,") != std::string::npos);
  CHECK(medians.find("pure_computer_model,0.2,") != std::string::npos);
  const std::string records = read_file((a / "records.csv").string());
  CHECK(std::count(records.begin(), records.end(), '\n') == 1 + 3 * 2 * 2);
  const auto summary = nlohmann::json::parse(read_file((a / "study_summary.json").string()));
  CHECK(summary["valid_cells"] == 4);
  CHECK(fs::exists(a / "design_pure_computer_model.csv"));

  REQUIRE(invoke({"study", "--config", fixture("toy_quick.json"), "--out", b.string(), "--jobs", "2"}).code ==
          cli::kSuccess);
  CHECK(snapshot(a) == snapshot(b));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("cli surrogate-fit and the surrogate regime") {
  const fs::path a = scratch("sur_a"), b = scratch("sur_b");
  for (const auto& dir : {a, b}) {
    const Outcome fit = invoke({"surrogate-fit", "--config", fixture("toy_surrogate.json"), "--out", dir.string()});
    INFO(fit.err);
    REQUIRE(fit.code == cli::kSuccess);
    REQUIRE(invoke({"design", "--config", fixture("toy_surrogate.json"), "--out", dir.string()}).code == cli::kSuccess);
    REQUIRE(invoke({"calibrate", "--config", fixture("toy_surrogate.json"), "--out", dir.string()}).code ==
            cli::kSuccess);
  }
  const auto s = nlohmann::json::parse(read_file((a / "surrogate.json").string()));
  CHECK(s["runs"] == 40);
  CHECK(s["theta"].contains("eta1"));
  const Table fitted = read_table((a / "surrogate_fitted.csv").string());
  // The GP interpolates its noise-free training runs.
  CHECK((fitted.column("y") - fitted.column("mean")).cwiseAbs().maxCoeff() < 1e-4);
  CHECK(snapshot(a) == snapshot(b));
  CHECK(invoke({"surrogate-fit", "--config", fixture("toy_quick.json"), "--out", a.string()}).code ==
        cli::kValidation);
  fs::remove_all(a);
  fs::remove_all(b);
}
