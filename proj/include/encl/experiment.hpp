/// @file experiment.hpp
/// @brief Experiment configuration (JSON), presets, validation, end-to-end
///        runs and result files.
///
/// Units: lengths in L, times in L/c with wave speed c = 1.
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "encl/indicator.hpp"

namespace encl {

struct GridConfig {
  double h = 0.0625;
  int sponge_cells = 24;
  /// Distance from every body to the box face; 0 selects 4 / min(tau).
  double clearance = 0.0;
  /// Explicit box, overriding clearance when set.
  std::optional<std::pair<Point3, Point3>> box;
};

struct ExperimentConfig {
  std::string name = "custom";
  SceneSpec scene;
  GridConfig grid;
  std::optional<double> T;  ///< empty means "auto": 2 * constant * M
  double M = 0.0;
  std::vector<double> taus;
  std::optional<double> alpha;
  std::filesystem::path outputs = "runs/out";
  std::uint64_t seed = 42;
  double cfl_safety = 0.9;
  double solver_tol = 1e-12;
  double sponge_sigma_max = 0.0;

  /// C(alpha) when alpha is set, the ball constant otherwise.
  double constant() const;
  double resolved_T() const;
  Grid3 make_grid() const;
};

/// Names accepted by preset().
std::vector<std::string> preset_names();
/// Throws ConfigError for an unknown name.
ExperimentConfig preset(const std::string& name);

/// Parses a config object. A "preset" key starts from that preset and the
/// remaining keys override it. Throws ConfigError on malformed input.
ExperimentConfig parse_config(const nlohmann::json& j);
/// `preset:NAME` or a path to a JSON file.
ExperimentConfig load_config(const std::string& arg);
/// Fully expanded form; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const ExperimentConfig& c);

/// Hex SHA-256 of the normalized config without the output path.
std::string scene_digest(const ExperimentConfig& c);
std::string sha256_hex(const std::string& data);

struct ValidationReport {
  Grid3 grid;
  double T = 0.0;
  double constant = 0.0;
  std::optional<double> true_distance;  ///< dist(D, B) when D is present
  std::optional<bool> cone_condition;   ///< sampled D in V_alpha(B; D0), when alpha is set
};

/// Checks every module precondition without solving; throws ConfigError
/// naming the violated condition.
ValidationReport validate(const ExperimentConfig& c);

struct ResultBundle {
  std::filesystem::path dir;
  std::filesystem::path indicator_csv;
  std::filesystem::path verdict_json;
  std::filesystem::path verification_json;
  std::filesystem::path provenance_json;
  IndicatorSeries series;
  Verdict verdict;
  nlohmann::json verification;
};

struct RunOptions {
  bool dump_fields = false;
  bool quiet = true;
};

/// Validates, sweeps, decides and writes indicator.csv, verdict.json,
/// verification.json and provenance.json into c.outputs.
ResultBundle run_experiment(const ExperimentConfig& c, const RunOptions& opts = {});

/// Pipeline self-checks on a finished series.
nlohmann::json pipeline_checks(const IndicatorSeries& series, const Verdict& verdict,
                               const ValidationReport& report);

void write_indicator_csv(const std::filesystem::path& path, const IndicatorSeries& series);
nlohmann::json verdict_to_json(const Verdict& v, const IndicatorSeries& series);

}  // namespace encl
