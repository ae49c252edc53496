#pragma once

#include "caldoe/calibrate.hpp"
#include "caldoe/pipeline.hpp"
#include "caldoe/simulate.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace caldoe {

enum class Regime { Local, Bayes, Surrogate };

std::string regime_name(Regime regime);

/// A built-in model, a parsed expression, or bounds only (for a model known
/// solely through computer-experiment data).
struct ModelConfig {
  std::string name = "model";
  std::string builtin;
  std::string expression;
  std::vector<Interval> x_bounds;
  std::vector<Interval> eta_bounds;
  std::map<std::string, double> constants;

  bool has_body() const { return !builtin.empty() || !expression.empty(); }
  int p() const { return static_cast<int>(x_bounds.size()); }
  int q() const { return static_cast<int>(eta_bounds.size()); }
};

struct SurrogateConfig {
  /// Resolved path of the computer-experiment runs.
  std::string training_data;
  GpFitOptions fit;
};

struct CalibrationConfig {
  /// Resolved path of the physical data; empty when not given.
  std::string data;
  McmcConfig mcmc;
  DiscrepancyOptions discrepancy;
};

struct StudyBlock {
  StudyConfig settings;
  std::vector<BaselineKind> baselines;
};

/// One run, as read from a JSON config file. Relative paths are resolved
/// against the config file's directory.
struct RunConfig {
  ModelConfig model;
  PriorSpec prior;
  Regime regime = Regime::Local;
  DesignRequest design;
  std::optional<SurrogateConfig> surrogate;
  CalibrationConfig calibration;
  std::optional<StudyBlock> study;
  std::uint64_t master_seed = 1;
  std::string output = "out";
  int jobs = 1;

  ComputerModel build_model() const;
};

/// Seed of one named stream ("design", "calibrate", "study", "surrogate").
std::uint64_t stream_seed(std::uint64_t master, std::string_view stream);

/// Parses and validates. Every error is a ValidationError of the form
/// "config: <field>: expected <what>, got <value>".
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_directory,
                       const std::string& source = "config");

RunConfig load_config(const std::string& path);

/// Re-derives every stream seed from master_seed and copies `jobs` into the
/// blocks that run in parallel. Called by parse_config and again after CLI
/// overrides.
void apply_seeds(RunConfig& config);

}  // namespace caldoe
