#pragma once

#include "rdaudit/audit.hpp"
#include "rdaudit/config.hpp"

namespace rdaudit {

struct RunReport {
  nlohmann::json config_echo;
  std::vector<EstimateAudit> audits;
  long steps = 0;
  double min_dt = 0.0;
  double clip_total = 0.0;
  bool clip_exceeded = false;
  double wall_seconds = 0.0;

  bool all_pass() const;
  int exit_code() const { return all_pass() ? 0 : 2; }
  std::string to_text() const;
};

/// Runs the configured experiment and the requested audits; writes the CSV
/// diagnostics, the plain-text report and (when configured) the snapshot
/// series. `out_dir`, when nonempty, redirects the output files into that
/// directory keeping their configured file names.
RunReport run_experiment(const ExperimentConfig& cfg, const std::string& out_dir = "");

/// Re-audits a previously written snapshot series (snapshot-level checks
/// only; per-step audits are inapplicable from snapshots).
RunReport audit_snapshots(const ExperimentConfig& cfg, const std::string& snapshot_path,
                          const std::string& out_dir = "");

struct ConvergeReport {
  char mode = 'n';
  std::vector<double> levels;
  std::vector<double> distances;  // n-mode: D_k; h-mode: inter-level errors
  std::vector<double> orders;     // h-mode observed orders
  bool pass = true;
  std::string to_text() const;
};

/// mode 'n': truncation-convergence study over the given n levels (>= 3).
/// mode 'h': self-convergence over nested cell counts (each level must divide
/// the next); reports observed spatial orders at the final time.
ConvergeReport run_converge(const ExperimentConfig& cfg, const std::vector<double>& levels,
                            char mode);

struct SweepResult {
  std::vector<std::string> labels;
  std::vector<int> exit_codes;
  std::vector<std::string> messages;
  int worst_exit() const;
};

/// Cross product of the override value lists, run concurrently; each combo
/// writes into out_dir/combo_<k>/.
SweepResult run_sweep(const nlohmann::json& base_config,
                      const std::vector<std::pair<std::string, std::vector<std::string>>>& sets,
                      const std::string& out_dir, int jobs = 0);

}  // namespace rdaudit
