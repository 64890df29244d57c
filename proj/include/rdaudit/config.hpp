#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "rdaudit/integrate.hpp"

namespace rdaudit {

struct OutputConfig {
  std::string csv = "diagnostics.csv";
  std::string report = "report.txt";
  std::string snapshots;  // optional snapshot-series file
  int snapshot_stride = 10;
};

struct InitSpec {
  enum class Kind { Constant, CosineMix, RandomUniform, Bump, FromFile };
  Kind kind = Kind::Constant;
  std::vector<double> values;     // constant
  std::vector<double> base, amplitude;  // cosine-mix
  std::vector<int> mode;
  std::uint64_t seed = 0;         // random-uniform (mandatory)
  std::vector<double> max_value;
  std::vector<double> center, width, mass;  // bump
  std::string path;               // from-file
};

struct ExperimentConfig {
  SystemSpec system;
  Grid grid;
  InitSpec init;
  double n_trunc = 100.0;
  StepControls controls;
  std::vector<std::string> audits;
  OutputConfig output;
  nlohmann::json echo;  // normalized config with every effective default
};

/// Parses and validates a JSON experiment description; throws config_error
/// with context on any invalid or inconsistent entry.
ExperimentConfig parse_config(const nlohmann::json& js);

ExperimentConfig load_config_file(const std::string& path);

/// Evaluates the configured initial data on the configured grid.
State build_initial_state(const ExperimentConfig& cfg);

/// Writers/readers for the snapshot-series file consumed by `rdaudit audit`.
void write_snapshot_series(const std::string& path, const Grid& g,
                           const std::vector<State>& snapshots);
std::vector<State> read_snapshot_series(const std::string& path, const Grid& g);

}  // namespace rdaudit
